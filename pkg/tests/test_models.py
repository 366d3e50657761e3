from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleincp.charts import ActionAngleState, RadialCanonicalPoint, canonical_to_klein
from kleincp.generators import Generators, ModelParams, gid
from kleincp.geometry import sample_points
from kleincp.models import (
    PRESETS,
    AngularModel,
    TildeIntegral,
    angular_hamiltonian,
    build_system,
    preset_angular,
    tilde_action_angle_form,
    tilde_eval,
)
from kleincp.poisson import contract, poisson_tensor

# -- angular models -----------------------------------------------------------


def test_angular_hamiltonian_values():
    assert angular_hamiltonian(AngularModel((1,), 1.0), [0.0]) == pytest.approx(0.5)
    m = preset_angular("monopole", s=2.0)
    assert angular_hamiltonian(m, [0.5, 0.5]) == pytest.approx(4.5)


def test_zero_coupling_rejected():
    with pytest.raises(ValueError, match="shifted"):
        AngularModel((1,), 0.0)


def test_negative_actions_rejected():
    with pytest.raises(ValueError):
        angular_hamiltonian(AngularModel((1,), 1.0), [-0.1])


@pytest.mark.parametrize("n", [(), (0,), (-1, 2)])
def test_bad_resonance(n):
    with pytest.raises(ValueError):
        AngularModel(n, 1.0)


def test_rational_exponents():
    m = AngularModel((Fraction(1, 2), Fraction(2, 3)), 1.0)
    assert m.exponents == (3, 4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=2, max_size=2), st.integers(0, 1), st.floats(0.0, 1.0))
def test_angular_hamiltonian_monotone(I, k, dI):
    m = AngularModel((1, 3), 0.5)
    J = list(I)
    J[k] += dI
    assert angular_hamiltonian(m, J) >= angular_hamiltonian(m, I)


# -- presets ------------------------------------------------------------------


def test_monopole_preset():
    m = preset_angular("monopole", s=-2.0)
    assert m.n == (1, 1) and m.g == 2.0


def test_sw_preset():
    m = preset_angular("smorodinsky_winternitz", omega=1.0, g_a=[1.0, -2.0, 0.5])
    assert m.g == pytest.approx(3.5)
    assert m.n == (2, 2)
    assert m.note


def test_calogero_preset():
    m = preset_angular("calogero", degrees=[2, 3], multiplicities=[0.5, 0.25, 0.25])
    assert m.n == (2, 3) and m.g == pytest.approx(1.0)
    with pytest.raises(ValueError):
        preset_angular("calogero", degrees=[], multiplicities=[])
    with pytest.raises(KeyError):
        preset_angular("nope")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_named_presets_build(name):
    m = PRESETS[name]()
    assert m.g > 0 and len(m.n) == m.N - 1


# -- tilde integrals -------------------------------------------------------------


def test_tilde_of_unit_resonance_is_base():
    m = AngularModel((1,), 1.0)
    c = RadialCanonicalPoint(1.1, 0.3, [0.7], [0.4])
    params = ModelParams(g=1.0)
    base = Generators(canonical_to_klein(c, 1.0), params).value(gid("H_a", 1))
    assert tilde_eval(TildeIntegral(gid("H_a", 1)), c, m, params) == base


def test_tilde_vanishes_with_base():
    m = AngularModel((2,), 1.0)
    c = RadialCanonicalPoint(1.0, 0.3, [0.7], [0.0])
    assert tilde_eval(TildeIntegral(gid("H_a", 1)), c, m, ModelParams()) == 0


def test_tilde_is_power_of_base():
    m = AngularModel((2,), 1.0)
    c = RadialCanonicalPoint(1.0, 0.3, [0.7], [0.4])
    base = Generators(canonical_to_klein(c, 1.0), ModelParams()).value(gid("H_a", 1))
    assert abs(tilde_eval(TildeIntegral(gid("H_a", 1)), c, m, ModelParams()) - base * base) < 1e-14


def test_tilde_rejects_unknown_base():
    with pytest.raises(ValueError):
        TildeIntegral(gid("H"))
    with pytest.raises(ValueError):
        TildeIntegral(gid("H_a", 1, bar=True))


def _tilde_ids(N):
    r = range(1, N)
    out = [gid("H_a", a) for a in r] + [gid("H_aN", a) for a in r] + [gid("R_a", a) for a in r]
    return out + [gid("H_ab", a, b) for a in r for b in r] + [gid("M_ab", a, b) for a in r for b in r]


@pytest.mark.parametrize("n", [(1, 2), (2, 3), (3, 1)])
def test_closed_form_matches_literal_power(n):
    m = AngularModel(n, 1.3)
    params = ModelParams(g=1.3, omega=0.8, gamma=1.1)
    rng = np.random.default_rng(0)
    s = ActionAngleState(rng.uniform(0.05, 1, (20, 2)), rng.uniform(0, 2 * np.pi, (20, 2)), m.n)
    r, p_r = rng.uniform(0.5, 2, 20), rng.normal(size=20)
    for key in _tilde_ids(3):
        t = TildeIntegral(key)
        a = tilde_eval(t, s, m, params, r=r, p_r=p_r)
        b = tilde_action_angle_form(t, s, r, p_r, m, params)
        assert np.max(np.abs(a - b) / np.maximum(1, np.abs(a))) < 1e-12, key


def test_action_angle_state_needs_radial_pair():
    m = AngularModel((1,), 1.0)
    with pytest.raises(ValueError):
        tilde_eval(TildeIntegral(gid("H_a", 1)), ActionAngleState([0.1], [0.0], m.n), m, ModelParams())


@pytest.mark.parametrize("key", _tilde_ids(3))
def test_tilde_single_valued(key):
    m = AngularModel((2, 3), 1.0)
    params = ModelParams(g=1.0, omega=1.0, gamma=1.0)
    I, Phi = np.array([0.3, 0.5]), np.array([0.4, 1.1])
    t = TildeIntegral(key)
    v0 = tilde_action_angle_form(t, ActionAngleState(I, Phi, m.n), 1.2, 0.1, m, params)
    for k in range(2):
        shifted = Phi.copy()
        shifted[k] += 2 * np.pi
        v1 = tilde_action_angle_form(t, ActionAngleState(I, shifted, m.n), 1.2, 0.1, m, params)
        assert abs(v1 - v0) < 1e-13 * max(1, abs(v0))


def test_base_generator_not_single_valued():
    # H_a with n_a = 2: e^{-i phi_a} = e^{-i Phi_a / 2} flips sign under Phi_a -> Phi_a + 2 pi
    m = AngularModel((2,), 1.0)
    params = ModelParams()
    t = TildeIntegral(gid("H_a", 1))

    def base(Phi):
        s = ActionAngleState([0.3], [0.0], m.n)
        phi = np.array([Phi / 2])
        c = RadialCanonicalPoint(1.0, 0.2, phi, 2 * s.I)
        return Generators(canonical_to_klein(c, 1.0), params).value(t.base)

    assert abs(base(0.5) + base(0.5 + 2 * np.pi)) < 1e-14
    assert abs(base(0.5)) > 0.1


# -- systems --------------------------------------------------------------------


def test_system_energies_at_reference_point():
    c = RadialCanonicalPoint(1.0, 0.0, [0.0], [0.0])
    m = AngularModel((1,), 1.0)
    osc = build_system("oscillator", m, ModelParams(g=1.0, omega=1.0))
    coul = build_system("coulomb", m, ModelParams(g=1.0, gamma=1.0))
    assert osc.energy(c) == pytest.approx(1.0)
    assert coul.energy(c) == pytest.approx(-0.5)
    p = canonical_to_klein(c, 1.0)
    assert osc.hamiltonian(Generators(p, osc.params)).value == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["conformal", "oscillator", "coulomb"])
@pytest.mark.parametrize("shifted", [False, True])
def test_integrals_commute_with_hamiltonian(kind, shifted):
    m = AngularModel((1, 2), 0.9)
    params = ModelParams(g=0.9, omega=1.1, gamma=0.7)
    s = build_system(kind, m, params, shifted=shifted)
    p = sample_points(3, 100, np.random.default_rng(1))
    G = Generators(p, params)
    P = poisson_tensor(p, params.g)
    H = s.hamiltonian(G)
    for name, f in s.integrals.items():
        F = f(G)
        res = np.abs(contract(F, H, P)) / np.maximum(1.0, np.abs(F.value) * np.abs(H.value))
        assert np.max(res) < 1e-9, name


def test_energy_matches_klein_hamiltonian():
    rng = np.random.default_rng(3)
    m = AngularModel((1, 1), 1.5)
    params = ModelParams(g=1.5, omega=0.6, gamma=0.4)
    c = RadialCanonicalPoint(rng.uniform(0.5, 2, 50), rng.normal(size=50), rng.uniform(0, 6, (50, 2)), rng.uniform(0, 2, (50, 2)))
    p = canonical_to_klein(c, 1.5)
    for kind in ("conformal", "oscillator", "coulomb"):
        s = build_system(kind, m, params)
        np.testing.assert_allclose(s.energy(c), s.hamiltonian(Generators(p, params)).value.real, rtol=1e-12)


def test_build_system_errors():
    m = AngularModel((1,), 1.0)
    with pytest.raises(ValueError):
        build_system("kepler", m)
    with pytest.raises(ValueError):
        build_system("oscillator", m, ModelParams(g=2.0))
    with pytest.raises(ValueError):
        build_system("generic", m)


def test_generic_system_matches_conformal_angular_part():
    m = AngularModel((1, 1), 1.0)
    s = build_system("generic", m, angular_gen=lambda pi, phi: 0.5 * (np.sum(pi, axis=-1) + 1.0) ** 2)
    conf = build_system("conformal", m)
    c = RadialCanonicalPoint(1.3, 0.2, [0.1, 0.5], [0.3, 0.2])
    assert s.energy(c) == pytest.approx(conf.energy(c), abs=1e-15)
    assert not s.phase_independent
