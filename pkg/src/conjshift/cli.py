"""Command-line front end.

    conjshift cfi --protocol entangled --r 1
    conjshift simulate --protocol separable --r 1 --mu 0.5 --nu -0.3 --probes 10000 --repeats 500
    conjshift loss-grid --res 101 --out ratio_map.csv
    conjshift amplitude-compare --eta 0.95 --nmax 10

Every command prints a JSON envelope on stdout. Table-producing commands also
write CSV with ``--out``. Exit codes: 0 ok, 2 usage, 3 statistically
degenerate run, 4 unphysical input.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .fisher import SingularFisherError, crb
from .gaussian import PhysicalityError
from .loss import SqueezingSpec, amplitude_comparison, determinant_ratio_grid
from .montecarlo import ExperimentConfig, run_experiment
from .protocols import (DisplacementParams, EntangledProtocol, SeparableProtocol,
                        cfi_entangled, cfi_fock_amplitude, cfi_separable,
                        cfi_separable_polar, polar_transform)

SEED_ENV = "CONJSHIFT_SEED"

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_PHYSICALITY = 0, 2, 3, 4


def envelope(command: list[str], seed, payload: dict) -> dict:
    return {
        "tool": "conjshift",
        "version": __version__,
        "command": command,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "payload": payload,
    }


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def table_csv(columns: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def table_summary(columns: list[str], rows, text: str) -> dict:
    """Checksum and column sums that let a reader validate an emitted CSV."""
    arr = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    return {
        "columns": columns,
        "rows": int(arr.shape[0]),
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "column_sums": {c: float(s) for c, s in zip(columns, arr.sum(axis=0))},
    }


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _write(path, text):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def cmd_cfi(args, parser) -> tuple[dict, int]:
    if args.protocol == "fock":
        if args.n is None or args.r is not None:
            parser.error("--protocol fock takes --n and not --r")
        payload = {"protocol": "fock", "n": args.n, "cfi": cfi_fock_amplitude(args.n)}
        if args.probes:
            payload["crb"] = 1.0 / (payload["cfi"] * args.probes)
        return payload, EXIT_OK

    if args.r is None or args.n is not None:
        parser.error(f"--protocol {args.protocol} takes --r and not --n")
    if args.protocol == "entangled":
        if args.w1 is not None:
            parser.error("--w1 only applies to the separable protocol")
        fisher = cfi_entangled(args.r)
    else:
        fisher = cfi_separable(args.r, 0.5 if args.w1 is None else args.w1)
    payload = {"protocol": args.protocol, "r": args.r, "chart": args.chart}
    if args.protocol == "separable":
        payload["w1"] = 0.5 if args.w1 is None else args.w1

    if args.chart == "polar":
        if args.alpha is None or args.alpha <= 0:
            parser.error("--chart polar needs --alpha > 0")
        fisher = polar_transform(fisher, args.phi, args.alpha)
        payload.update(alpha=args.alpha, phi=args.phi)
        if args.protocol == "separable" and payload["w1"] == 0.5:
            cmp = cfi_separable_polar(args.r, args.alpha, args.phi)
            payload["energy"] = cmp.energy
            payload["displayed_formula"] = cmp.displayed.m.tolist()
            payload["oracle"] = cmp.oracle.m.tolist()
    payload["cfi"] = fisher.m.tolist()
    if args.probes:
        payload["crb"] = crb(fisher, args.probes).bound.tolist()
    return payload, EXIT_OK


def cmd_simulate(args, parser) -> tuple[dict, int]:
    if args.protocol == "entangled":
        if args.w1 is not None:
            parser.error("--w1 only applies to the separable protocol")
        protocol = EntangledProtocol(args.r)
    else:
        protocol = SeparableProtocol(args.r, 0.5 if args.w1 is None else args.w1)
    config = ExperimentConfig(protocol, DisplacementParams(args.mu, args.nu), args.probes,
                              args.repeats, args.seed, args.split)
    record = run_experiment(config, workers=args.workers)
    payload = record.to_dict(include_estimates=args.estimates)
    if args.out:
        _write(args.out, dump_json(payload))
    code = EXIT_DEGENERATE if record.failure_fraction > 0.5 else EXIT_OK
    return payload, code


def cmd_loss_grid(args, parser) -> tuple[dict, int]:
    spec = SqueezingSpec(args.vs, args.va)
    etas = np.linspace(args.eta_min, 1.0, args.res)
    rows = determinant_ratio_grid(spec, etas, res=args.opt_res, workers=args.workers)
    columns = ["eta1", "eta2", "ratio", "t1_opt", "t2_opt"]
    text = table_csv(columns, rows)
    if args.out:
        _write(args.out, text)
    elif args.csv:
        sys.stdout.write(text)
    payload = {"vs": spec.vs, "va": spec.va, "res": args.res,
               "table": table_summary(columns, rows, text), "csv": args.out}
    return payload, EXIT_OK


def cmd_amplitude_compare(args, parser) -> tuple[dict, int]:
    columns = ["energy", "fock_fi", "squeezed_fi", "fock_fi_ideal", "squeezed_fi_ideal"]
    lossy = amplitude_comparison(args.eta, args.nmax)
    ideal = amplitude_comparison(1.0, args.nmax)
    rows = np.column_stack([lossy, ideal[:, 1:]])
    text = table_csv(columns, rows)
    if args.out:
        _write(args.out, text)
    elif args.csv:
        sys.stdout.write(text)
    payload = {"eta": args.eta, "nmax": args.nmax, "loss_floor": (
        1.0 / (1.0 - args.eta) if args.eta < 1 else math.inf),
        "table": table_summary(columns, rows, text), "csv": args.out}
    if not math.isfinite(payload["loss_floor"]):
        payload["loss_floor"] = None
    return payload, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conjshift", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cfi", help="analytic Fisher information of a protocol")
    c.add_argument("--protocol", choices=["entangled", "separable", "fock"], required=True)
    c.add_argument("--r", type=float)
    c.add_argument("--n", type=int)
    c.add_argument("--w1", type=float)
    c.add_argument("--chart", choices=["cart", "polar"], default="cart")
    c.add_argument("--alpha", type=float)
    c.add_argument("--phi", type=float, default=0.0)
    c.add_argument("--probes", type=int)
    c.set_defaults(func=cmd_cfi)

    s = sub.add_parser("simulate", help="seeded Monte Carlo estimation experiment")
    s.add_argument("--protocol", choices=["entangled", "separable"], required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--w1", type=float)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--nu", type=float, default=0.0)
    s.add_argument("--probes", type=int, required=True)
    s.add_argument("--repeats", type=int, default=500)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--split", choices=["random", "fixed"], default="random")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--estimates", action="store_true", help="include per-repeat estimates")
    s.add_argument("--out", help="also write the record JSON here")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("loss-grid", help="optimised determinant ratio over (eta1, eta2)")
    g.add_argument("--vs", type=float, default=math.exp(-2) / 2)
    g.add_argument("--va", type=float, default=math.exp(2) / 2)
    g.add_argument("--res", type=int, default=101)
    g.add_argument("--eta-min", type=float, default=0.01)
    g.add_argument("--opt-res", type=int, default=101, help="coarse (t1, t2) grid size")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out")
    g.add_argument("--csv", action="store_true", help="print the CSV instead of the envelope")
    g.set_defaults(func=cmd_loss_grid)

    a = sub.add_parser("amplitude-compare", help="Fock vs squeezed amplitude Fisher information")
    a.add_argument("--eta", type=float, default=0.95)
    a.add_argument("--nmax", type=int, default=10)
    a.add_argument("--out")
    a.add_argument("--csv", action="store_true", help="print the CSV instead of the envelope")
    a.set_defaults(func=cmd_amplitude_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    try:
        payload, code = args.func(args, parser)
    except PhysicalityError as exc:
        print(f"conjshift: unphysical input: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    except (ValueError, SingularFisherError) as exc:
        print(f"conjshift: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not getattr(args, "csv", False) or getattr(args, "out", None):
        sys.stdout.write(dump_json(envelope(argv, args.seed, payload)))
    return code


if __name__ == "__main__":
    sys.exit(main())
