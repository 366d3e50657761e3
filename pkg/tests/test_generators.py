import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleincp.generators import (
    GeneratorId,
    Generators,
    ModelParams,
    all_ids,
    averaged_identity_residual,
    dependency_identities,
    duality,
    duality_pullbacks,
    duality_residuals,
    evaluate,
    gid,
)
from kleincp.geometry import DomainError, KleinPoint
from kleincp.poisson import (
    Relation,
    check_relations,
    coulomb_algebra_check,
    oscillator_algebra_check,
    shifted_system_check,
)

from conftest import random_points

# -- ids ---------------------------------------------------------------------


@pytest.mark.parametrize("text", ["H", "H_ab[1,2]", "H_a[3]*", "h_ab[2,2]", "SR_a[1]"])
def test_id_roundtrip(text):
    assert str(GeneratorId.parse(text)) == text


@pytest.mark.parametrize("bad", ["Q", "H_ab[1]", "H[1]", "H_a[x]"])
def test_bad_ids(bad):
    with pytest.raises((KeyError, ValueError)):
        GeneratorId.parse(bad)


def test_index_out_of_range(origin):
    with pytest.raises(IndexError):
        evaluate(gid("H_a", 2), origin, ModelParams())
    # the h-basis admits the index N
    evaluate(gid("h_a", 2), origin, ModelParams())


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(g=0.0)
    with pytest.raises(ValueError):
        ModelParams(omega=-1.0)


# -- closed-form values --------------------------------------------------------


def test_values_at_origin(origin):
    G = Generators(origin, ModelParams(g=1.0, omega=1.0, gamma=1.0))
    expected = {"H": 0.5, "K": 0.5, "D": 0.0, "Hosc": 1.0, "HCoul": -0.5, "M_ab[1,1]": 0.0}
    for key, v in expected.items():
        assert G.value(key) == pytest.approx(v, abs=1e-15), key


def test_values_generic(generic_point):
    G = Generators(generic_point, ModelParams())
    assert G.value("H") == pytest.approx(8 / 7, abs=1e-12)
    assert G.value("K") == pytest.approx(4 / 7, abs=1e-12)
    assert G.value("D") == pytest.approx(8 / 7, abs=1e-12)


def test_real_ids_are_real():
    p = random_points(3, 1000, seed=8)
    G = Generators(p, ModelParams(g=0.6, omega=1.4, gamma=0.9))
    for key in all_ids(3):
        if key.is_real:
            assert np.max(np.abs(G.value(key).imag)) < 1e-12, key


def test_h_basis_top_entry_is_H_plus_K():
    p = random_points(3, 200, seed=9)
    G = Generators(p, ModelParams(g=1.0))
    np.testing.assert_allclose(G.value(gid("h_ab", 3, 3)), G.value("H") + G.value("K"), rtol=1e-12)


def test_M_factorization():
    p = random_points(3, 200, seed=10)
    params = ModelParams(g=1.3, omega=0.7)
    G = Generators(p, params)
    A = p.w.imag * 0 + (-2 * p.w.imag - np.sum(np.abs(p.z) ** 2, axis=-1)) / params.g
    for a in (1, 2):
        for b in (1, 2):
            closed = np.conj(p.z[:, a - 1]) * np.conj(p.z[:, b - 1]) * (p.w**2 + params.omega**2) / A**2
            np.testing.assert_allclose(G.value(gid("M_ab", a, b)), closed, rtol=1e-12)


def test_shifted_values_at_origin(origin):
    G = Generators(origin, ModelParams(g=1.0, omega=1.0))
    assert G.value("SH") == pytest.approx(0.0, abs=1e-15)
    assert G.value("SHosc") == pytest.approx(0.5, abs=1e-15)


# -- dependency identities ----------------------------------------------------


def test_identities_generic(generic_point):
    rep = dependency_identities(generic_point, ModelParams())
    assert rep.max_residual < 1e-12
    assert not rep.skipped


def test_identities_skip_at_zero(origin):
    rep = dependency_identities(origin, ModelParams())
    assert rep.skipped


def test_identities_random():
    rep = dependency_identities(random_points(4, 100, seed=3), ModelParams(g=2.0))
    assert rep.max_residual < 1e-10


def test_averaged_identity_depends_on_dimension():
    p3 = random_points(3, 100, seed=4)
    assert averaged_identity_residual(p3, ModelParams()) < 1e-12
    p2 = KleinPoint(1 - 1j, [0.5])
    assert averaged_identity_residual(p2, ModelParams()) > 0.5


# -- duality -------------------------------------------------------------------


def test_duality_fixes_origin(origin):
    q = duality(origin)
    assert q.w == pytest.approx(-1j)
    assert np.all(q.z == 0)


def test_unit_phase_map_example(generic_point):
    q = duality(generic_point, phase=1.0)
    assert q.w == pytest.approx(-(1 + 1j) / 2, abs=1e-15)
    assert q.z[0] == pytest.approx(0.25 * (1 + 1j), abs=1e-15)
    assert evaluate("H", q, ModelParams()) == pytest.approx(4 / 7, abs=1e-12)


def test_default_duality_is_involution():
    p = random_points(3, 100, seed=6)
    back = duality(duality(p))
    assert np.max(np.abs(back.coords() - p.coords())) < 1e-15


def test_unit_phase_map_squares_to_z_reflection():
    p = random_points(3, 20, seed=6)
    back = duality(duality(p, phase=1.0), phase=1.0)
    np.testing.assert_allclose(back.z, -p.z, atol=1e-15)


@pytest.mark.parametrize("phase", [1j, 1.0, np.exp(0.3j)])
def test_duality_pullbacks(phase):
    res = duality_residuals(random_points(3, 100, seed=2), ModelParams(g=0.8), phase)
    for label, v in res.items():
        if label == "dual o dual = id" and phase != 1j:
            continue
        assert v < 1e-12, label


def test_pullback_signs_for_unit_phase():
    # with the unit phase, H_aN pulls back to -H_a but H_a pulls back to +H_aN
    signs = {(str(f), str(h)): s for f, h, s in duality_pullbacks(2, 1.0)}
    assert signs[("H_aN[1]", "H_a[1]")] == -1.0
    assert signs[("H_a[1]", "H_aN[1]")] == 1.0


def test_duality_output_in_domain():
    q = duality(random_points(4, 500, seed=1))
    assert isinstance(q, KleinPoint)


# -- oscillator, Coulomb, shifted systems --------------------------------------


def test_oscillator_algebra():
    assert oscillator_algebra_check(2, ModelParams(g=1.0, omega=1.0), samples=100).passed


@pytest.mark.parametrize("N", [2, 3, 4])
def test_coulomb_algebra(N):
    rep = coulomb_algebra_check(N, ModelParams(g=0.7, gamma=1.3), samples=100)
    assert rep.passed, rep.failures


@pytest.mark.parametrize("N", [2, 3])
def test_shifted_systems(N):
    rep = shifted_system_check(N, ModelParams(g=1.0, omega=1.0, gamma=1.0), samples=100)
    assert rep.passed, rep.failures


def test_algebra_checks_need_two_dimensions():
    with pytest.raises(ValueError):
        oscillator_algebra_check(1, ModelParams())


def test_uncorrected_R_Rbar_form_fails():
    params = ModelParams(g=1.0, gamma=1.0)
    p = random_points(2, 50, seed=3)

    def naive(G):
        P = G.g + G.casimir_sum()
        return -1j * (G["HCoul"] - 1j * G.gamma**2 / (2 * P**2)) + 1j * G.gamma**2 * G["H_ab[1,1]"] / (2 * P**3)

    rel = Relation("naive", gid("R_a", 1), gid("R_a", 1, bar=True), naive)
    assert not check_relations([rel], p, params, 1e-9).passed


class _PerturbedR(Generators):
    def R_a(self, a):
        denom = (self.g + self.casimir_sum()) * self._sqrt2K
        return self[gid("H_aN", a)] + 1.01j * self.gamma * self[gid("H_a", a)] / denom


def test_perturbed_R_breaks_conservation():
    rep = coulomb_algebra_check(2, ModelParams(g=1.0, gamma=1.0), samples=50, generators=_PerturbedR)
    assert rep.residuals["{HCoul,R[1]} = 0"] > 1e-4


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 2.0), st.floats(-2.0, 2.0), st.integers(0, 10**6))
def test_conservation_for_any_parameters(g, omega, gamma, seed):
    params = ModelParams(g=g, omega=omega, gamma=gamma)
    assert oscillator_algebra_check(3, params, samples=10, seed=seed).passed
    assert coulomb_algebra_check(3, params, samples=10, seed=seed).passed
