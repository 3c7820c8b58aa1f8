import numpy as np
import pytest
from hypothesis import given, strategies as st

from conjshift import protocols as pr
from conjshift.fisher import CARTESIAN, POLAR, FisherMatrix, cfi_numeric
from conjshift.loss import fock_qfi_lossy

ENERGY5_R = pr.squeezing_for_energy(5)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
def test_entangled_cfi(r):
    assert np.allclose(pr.cfi_entangled(r).m, np.exp(2 * r) * np.eye(2), rtol=1e-14)


def test_entangled_cfi_r1_value():
    assert pr.cfi_entangled(1.0)[0, 0] == pytest.approx(7.389056, abs=1e-6)


def test_separable_cfi():
    assert np.allclose(pr.cfi_separable(0.0, 0.5).m, np.eye(2))
    assert np.allclose(pr.cfi_separable(1.0, 0.3).m, np.diag([0.6, 1.4]) * np.e**2)
    for r in (0.0, 0.3, 1.7):
        assert np.array_equal(pr.cfi_separable(r, 0.5).m, pr.cfi_entangled(r).m)


def test_separable_cfi_oracle_uneven_weights():
    r, w1 = 1.0, 0.3
    num = cfi_numeric(pr.separable_labeled_pdf(r, w1), [0.1, -0.2], pr.separable_grid(r, 0.1, -0.2))
    assert np.allclose(num.m, pr.cfi_separable(r, w1).m, rtol=1e-6, atol=1e-6)


def test_branch_mixture_matches_closed_form():
    assert np.allclose(pr.mixture_of_branches(0.9, 0.35).m, pr.cfi_separable(0.9, 0.35).m,
                       rtol=1e-8)


@given(r=st.floats(-3, 3), w1=st.floats(0.01, 0.99))
def test_weight_tradeoff(r, w1):
    m = pr.cfi_separable(r, w1).m
    assert m[0, 0] / m[1, 1] == pytest.approx(w1 / (1 - w1), rel=1e-12)


class TestIdentity:
    def test_vacuum(self):
        assert pr.separable_pdf_identity_check(0.0, 0.0, 0.0) <= 1e-12

    @pytest.mark.parametrize("form", ["scaled", "attenuated"])
    def test_holds(self, form):
        assert pr.separable_pdf_identity_check(1.0, 0.3, -0.7, form) <= 1e-10

    @pytest.mark.parametrize("form", ["scaled", "attenuated"])
    def test_negative_control(self, form):
        assert pr.separable_pdf_identity_check(1.0, 0.3, -0.7, form, sqrt2=False) > 0.01

    def test_literal_form_does_not_hold(self):
        # the text-book densities have half the variance the identity needs
        assert pr.separable_pdf_identity_check(0.0, 0.0, 0.0, "literal") == pytest.approx(1 / np.pi)


def test_fock():
    assert pr.cfi_fock_amplitude(0) == 2
    assert pr.cfi_fock_amplitude(1) == 6
    assert pr.cfi_fock_amplitude(5) == 22
    assert pr.FockProtocol(5).cfi() == 22
    with pytest.raises(ValueError):
        pr.cfi_fock_amplitude(-1)


@pytest.mark.parametrize("n", [0, 1, 5, 40])
def test_fock_saturation_matches_lossless_qfi(n):
    assert pr.cfi_fock_amplitude(n) == fock_qfi_lossy(n, 1.0)


class TestPolar:
    def test_energy_five(self):
        cmp = pr.cfi_separable_polar(ENERGY5_R, 1.2, 0.7)
        assert cmp.energy == pytest.approx(5.0)
        assert cmp.oracle[0, 0] == pytest.approx(21.95, abs=0.01)
        assert cmp.amplitude_cfi == pytest.approx(21.9545, abs=1e-4)
        assert cmp.displayed_amplitude_cfi == pytest.approx(2 * (6 + np.sqrt(30)))
        assert cmp.displayed_amplitude_cfi - cmp.amplitude_cfi == pytest.approx(1.0)
        assert cmp.oracle[1, 1] == pytest.approx(cmp.fisher[1, 1], rel=1e-6)

    def test_vacuum(self):
        cmp = pr.cfi_separable_polar(0.0, 0.8)
        assert np.allclose(cmp.oracle.m, np.diag([1.0, 0.64]), rtol=1e-6)

    def test_zero_amplitude_flags_phase(self):
        cmp = pr.cfi_separable_polar(0.5, 0.0, oracle=False)
        assert not cmp.phase_defined
        with pytest.raises(ValueError):
            pr.cfi_separable_polar(0.5, -1.0)

    def test_db_convention(self):
        assert pr.squeezing_db(ENERGY5_R) == pytest.approx(13.41, abs=0.01)


class TestChart:
    @given(c=st.floats(0.1, 50), phi=st.floats(0, 2 * np.pi), a=st.floats(0.05, 5))
    def test_isotropic(self, c, phi, a):
        out = pr.polar_transform(FisherMatrix(c * np.eye(2)), phi, a)
        assert np.allclose(out.m, np.diag([c, c * a * a]), rtol=1e-12, atol=1e-12 * c)

    def test_hand_jacobian(self):
        out = pr.polar_transform(FisherMatrix(np.diag([1.0, 0.0])), 0.0, 2.0)
        assert np.allclose(out.m, [[1, 0], [0, 0]])

    @given(phi=st.floats(0, 2 * np.pi), a=st.floats(0.05, 5), d=st.floats(0.1, 5),
           off=st.floats(-0.05, 0.05))
    def test_round_trip(self, phi, a, d, off):
        f = FisherMatrix([[d, off], [off, 1.0]], POLAR)
        back = pr.polar_transform(pr.cartesian_transform(f, phi, a), phi, a)
        assert np.allclose(back.m, f.m, rtol=1e-12, atol=1e-12)

    def test_singular(self):
        with pytest.raises(ValueError):
            pr.polar_transform(FisherMatrix(np.eye(2)), 0.0, 0.0)
        with pytest.raises(ValueError):
            pr.polar_transform(FisherMatrix(np.eye(2), POLAR), 0.0, 1.0)

    @given(r=st.floats(0, 2), phi=st.floats(0, 2 * np.pi), a=st.floats(0.1, 3))
    def test_separable_amplitude_isotropic(self, r, phi, a):
        out = pr.polar_transform(pr.cfi_separable(r, 0.5), phi, a)
        assert out[0, 0] == pytest.approx(np.exp(2 * r), rel=1e-12)


class TestSampling:
    def test_entangled_vanishing_noise(self):
        out = pr.sample_outcomes(pr.EntangledProtocol(12.0), pr.DisplacementParams(0.4, -1.0),
                                 100, np.random.default_rng(0))
        assert out.shape == (100, 2)
        assert np.allclose(out, [0.4 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-4)

    def test_all_label_one(self):
        out = pr.sample_outcomes(pr.SeparableProtocol(1.0, 1.0), pr.DisplacementParams(0, 0),
                                 200, np.random.default_rng(0))
        assert np.all(out.labels == 1)

    def test_branch_frequency(self):
        out = pr.sample_outcomes(pr.SeparableProtocol(1.0, 0.3), pr.DisplacementParams(0, 0),
                                 10**5, np.random.default_rng(3))
        # binomial sd is 1.4e-3, the band is ~7 sd
        assert abs(np.mean(out.labels == 1) - 0.3) < 0.01

    def test_fixed_split(self):
        labels = pr.branch_labels(0.3, 10, np.random.default_rng(0), "fixed")
        assert labels.tolist() == [1] * 3 + [2] * 7
        with pytest.raises(ValueError):
            pr.branch_labels(0.3, 10, np.random.default_rng(0), "other")

    def test_deterministic(self):
        p, t = pr.SeparableProtocol(0.5, 0.5), pr.DisplacementParams(0.1, 0.2)
        a = pr.sample_outcomes(p, t, 50, np.random.default_rng(9))
        b = pr.sample_outcomes(p, t, 50, np.random.default_rng(9))
        assert np.array_equal(a.values, b.values) and np.array_equal(a.labels, b.labels)

    def test_rejects_fock(self):
        with pytest.raises(TypeError):
            pr.sample_outcomes(pr.FockProtocol(2), pr.DisplacementParams(0, 0), 5,
                               np.random.default_rng(0))


def test_params_conversion():
    p = pr.DisplacementParams(-1.0, -1.0).to_polar()
    assert p.amplitude == pytest.approx(np.sqrt(2))
    assert 0 <= p.phase < 2 * np.pi
    back = p.to_cartesian()
    assert (back.mu, back.nu) == (pytest.approx(-1.0), pytest.approx(-1.0))
    with pytest.raises(ValueError):
        pr.SeparableProtocol(1.0, 1.5)
    with pytest.raises(ValueError):
        pr.EntangledProtocol(30.0)
