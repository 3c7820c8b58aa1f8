import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conjshift import gaussian as gc
from conjshift.loss import (RATIO_MAP_SPEC, InterferometerParams, LossConfig, SqueezingSpec,
                            amplitude_comparison, cfi_entangled_lossy,
                            cfi_general_interferometer, cfi_separable_amplitude_lossy,
                            cfi_separable_lossy, determinant_ratio_grid, fock_qfi_lossy,
                            interferometer_pipeline_state, interferometer_variances,
                            optimal_eta2, optimize_determinant_ratio, sigma_out,
                            sigma_out_pipeline, v_m, v_out)
from conjshift.protocols import squeezing_for_energy

VS = math.exp(-2) / 2
B = 1 / math.sqrt(2)

specs = st.builds(lambda vs, k: SqueezingSpec(vs, k / (4 * vs)),
                  st.floats(0.02, 0.5), st.floats(1.0, 20.0))
etas = st.floats(0.0, 1.0)


def test_v_out():
    assert v_out(1.0, VS) == VS
    assert v_out(0.0, VS) == 0.5
    assert v_out(0.95, VS) == pytest.approx(0.0892843, abs=1e-6)
    state = gc.apply_loss(gc.squeezed_vacuum(1.0), 0.95)
    assert state.cov[0, 0] == pytest.approx(v_out(0.95, VS), rel=1e-14)


def test_cfi_separable_lossy():
    r = 0.8
    assert np.allclose(cfi_separable_lossy(1.0, math.exp(-2 * r) / 2).m,
                       np.exp(2 * r) * np.eye(2))
    assert np.allclose(cfi_separable_lossy(0.0, VS).m, np.eye(2))
    assert cfi_separable_lossy(0.5, VS)[0, 0] == pytest.approx(1.7615942, abs=1e-6)
    assert cfi_separable_lossy(0.95, VS)[0, 0] == pytest.approx(5.600091, abs=1e-6)


def test_sigma_out_limits():
    lossless = sigma_out(RATIO_MAP_SPEC, LossConfig(1.0, 1.0))
    assert np.linalg.det(2 * lossless) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(sigma_out(RATIO_MAP_SPEC, LossConfig(0.0, 0.0)), np.eye(4) / 2)


@settings(max_examples=40)
@given(spec=specs, e1=etas, e2=etas)
def test_sigma_out_orderings_agree_and_reduce_to_vm(spec, e1, e2):
    loss = LossConfig(e1, e2)
    closed, piped = sigma_out(spec, loss), sigma_out_pipeline(spec, loss)
    assert np.allclose(closed, piped, atol=1e-12 * spec.va)
    vm = v_m(spec, loss)
    assert closed[0, 0] == pytest.approx(vm, abs=1e-12 * spec.va)
    assert closed[3, 3] == pytest.approx(vm, abs=1e-12 * spec.va)


@given(spec=specs, eta=etas)
def test_vm_equal_loss_identity(spec, eta):
    assert v_m(spec, LossConfig(eta, eta)) == pytest.approx(v_out(eta, spec.vs), abs=1e-14 * spec.va)


def test_vm_lossless_and_cfi():
    assert v_m(RATIO_MAP_SPEC, LossConfig(1, 1)) == pytest.approx(VS, rel=1e-12)
    assert np.allclose(cfi_entangled_lossy(RATIO_MAP_SPEC, LossConfig(1, 1)).m, math.e**2 * np.eye(2))


def test_optimal_eta2_example():
    e2 = optimal_eta2(RATIO_MAP_SPEC, 0.5)
    assert e2 == pytest.approx(0.86204, abs=1e-5)
    assert e2 > 0.5
    grid = np.linspace(0, 1, 10**4)
    vals = [v_m(RATIO_MAP_SPEC, LossConfig(0.5, g)) for g in grid]
    assert abs(grid[int(np.argmin(vals))] - e2) <= grid[1]
    for d in (-0.01, 0.01):
        other = min(1.0, max(0.0, e2 + d))
        assert v_m(RATIO_MAP_SPEC, LossConfig(0.5, e2)) <= v_m(RATIO_MAP_SPEC, LossConfig(0.5, other))


def test_optimal_eta2_large_squeezing_and_domain():
    assert optimal_eta2(SqueezingSpec.from_r(12.0), 0.3) == pytest.approx(0.3, abs=1e-3)
    assert optimal_eta2(SqueezingSpec(0.2, 1.3), 0.9) == 1.0
    with pytest.raises(ValueError):
        optimal_eta2(SqueezingSpec(0.45, 0.55), 0.5)


def test_spec_validation():
    with pytest.raises(gc.PhysicalityError):
        SqueezingSpec(0.1, 1.0)
    with pytest.raises(ValueError):
        SqueezingSpec(1.0, 0.5)
    with pytest.raises(ValueError):
        LossConfig(1.2, 0.5)
    with pytest.raises(ValueError):
        InterferometerParams(1.5, 0.0)


class TestGeneralInterferometer:
    @settings(max_examples=40)
    @given(spec=specs, eta=etas)
    def test_symmetric_setup_reduces_to_vm(self, spec, eta):
        loss = LossConfig(eta, eta)
        v1, v2 = interferometer_variances(spec, loss, InterferometerParams(-B, B))
        assert v1 == pytest.approx(v_m(spec, loss), abs=1e-12 * spec.va)
        assert v2 == pytest.approx(v_m(spec, loss), abs=1e-12 * spec.va)
        c = cfi_general_interferometer(spec, loss, InterferometerParams(-B, B))
        assert np.allclose(c.m, cfi_entangled_lossy(spec, loss).m, rtol=1e-9)

    def test_lossless_recovers_entangled(self):
        c = cfi_general_interferometer(RATIO_MAP_SPEC, LossConfig(1, 1), InterferometerParams(B, -B))
        assert np.allclose(c.m, math.e**2 * np.eye(2), rtol=1e-12)

    def test_no_light_on_p_port(self):
        c = cfi_general_interferometer(RATIO_MAP_SPEC, LossConfig(0.7, 0.4), InterferometerParams(0.3, 1.0))
        assert c[1, 1] == 0.0

    @settings(max_examples=40)
    @given(spec=specs, e1=etas, e2=etas, t1=st.floats(-1, 1), t2=st.floats(-1, 1))
    def test_formula_matches_moment_pipeline(self, spec, e1, e2, t1, t2):
        loss, ifo = LossConfig(e1, e2), InterferometerParams(t1, t2)
        v1, v2 = interferometer_variances(spec, loss, ifo)
        s = interferometer_pipeline_state(spec, loss, ifo)
        assert s.cov[0, 0] == pytest.approx(v1, abs=1e-11 * spec.va)
        assert s.cov[3, 3] == pytest.approx(v2, abs=1e-11 * spec.va)
        shifted = interferometer_pipeline_state(spec, loss, ifo, 1.0, 1.0)
        assert abs(shifted.mean[0] - s.mean[0]) == pytest.approx(abs(t2), abs=1e-12)
        assert abs(shifted.mean[3] - s.mean[3]) == pytest.approx(ifo.r2, abs=1e-12)


class TestDeterminantRatio:
    @pytest.mark.parametrize("eta", [0.05, 0.3, 0.77, 1.0])
    def test_equal_losses(self, eta):
        opt = optimize_determinant_ratio(RATIO_MAP_SPEC, LossConfig(eta, eta))
        assert opt.ratio == pytest.approx(1.0, abs=1e-6)
        # symmetric 50:50 setup up to the t -> -t symmetry
        assert abs(opt.ifo.t1) == pytest.approx(B, abs=1e-3)
        assert abs(opt.ifo.t2) == pytest.approx(B, abs=1e-3)
        assert opt.ifo.t1 * opt.ifo.t2 < 0

    def test_channel_one_better(self):
        assert optimize_determinant_ratio(RATIO_MAP_SPEC, LossConfig(0.8, 0.4)).ratio < 1

    def test_reference_slightly_better(self):
        assert optimize_determinant_ratio(RATIO_MAP_SPEC, LossConfig(0.4, 0.45)).ratio > 1

    def test_polish_beats_grid(self):
        loss = LossConfig(0.3, 0.6)
        fine = optimize_determinant_ratio(RATIO_MAP_SPEC, loss)
        coarse = optimize_determinant_ratio(RATIO_MAP_SPEC, loss, res=11)
        assert fine.ratio == pytest.approx(coarse.ratio, rel=1e-8)

    def test_advantage_vanishes_with_large_squeezing(self):
        spec = SqueezingSpec.from_r(6.0)
        for e1 in (0.1, 0.5, 0.8):
            best = max(optimize_determinant_ratio(spec, LossConfig(e1, e2)).ratio
                       for e2 in np.linspace(e1, 1, 12))
            assert best <= 1 + 1e-3

    def test_grid_workers_do_not_change_output(self):
        etas = np.linspace(0.1, 1.0, 4)
        a = determinant_ratio_grid(RATIO_MAP_SPEC, etas, res=21)
        b = determinant_ratio_grid(RATIO_MAP_SPEC, etas, res=21, workers=2)
        assert a.shape == (16, 5)
        assert np.array_equal(a, b)
        assert np.array_equal(a[:4, 0], np.full(4, 0.1))


class TestAmplitude:
    def test_fock_limits(self):
        for n in (0, 3, 7):
            assert fock_qfi_lossy(n, 1.0) == pytest.approx(4 * n + 2)
            assert fock_qfi_lossy(n, 0.0) == pytest.approx(2.0)
        assert fock_qfi_lossy(1, 0.95) == pytest.approx(5.8)

    @pytest.mark.parametrize("n", [10, 60, 300])
    def test_fock_mean_photon_closed_form(self, n):
        # E[2k + 1] for k ~ Binomial(n, eta) is 2 n eta + 1
        assert fock_qfi_lossy(n, 0.83) == pytest.approx(2 * (2 * n * 0.83 + 1), rel=1e-12)

    def test_squeezed_limits(self):
        r = 0.9
        assert cfi_separable_amplitude_lossy(r, 1.0) == pytest.approx(math.exp(2 * r))
        assert cfi_separable_amplitude_lossy(r, 0.0) == pytest.approx(1.0)
        r5 = squeezing_for_energy(5)
        sq = cfi_separable_amplitude_lossy(r5, 0.95)
        assert sq == pytest.approx(10.72140, abs=1e-5)
        assert sq < fock_qfi_lossy(5, 0.95)

    @given(r=st.floats(0, 12), eta=st.floats(0, 0.999))
    def test_loss_floor(self, r, eta):
        assert cfi_separable_amplitude_lossy(r, eta) <= 1 / (1 - eta) * (1 + 1e-12)

    def test_table(self):
        t = amplitude_comparison(1.0, 10)
        assert t.shape == (10, 3)
        assert t[4, 1] == 22.0
        assert t[4, 2] == pytest.approx(21.95, abs=0.01)


@given(vs=st.floats(0.01, 0.499), a=etas, b=etas)
def test_separable_cfi_monotone_in_loss(vs, a, b):
    lo, hi = sorted((a, b))
    assert cfi_separable_lossy(hi, vs)[0, 0] >= cfi_separable_lossy(lo, vs)[0, 0]
