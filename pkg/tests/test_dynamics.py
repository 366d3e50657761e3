import numpy as np
import pytest

from kleincp.charts import RadialCanonicalPoint, canonical_to_klein, klein_to_canonical
from kleincp.dynamics import IntegratorConfig, audit, flow_canonical, flow_complex, reverse
from kleincp.generators import ModelParams
from kleincp.geometry import DomainError
from kleincp.models import AngularModel, build_system

SPLIT = "canonical-splitting"


def _conformal():
    return build_system("conformal", AngularModel((1,), 1.0), ModelParams(g=1.0))


def _start(r=1.0, p=0.0, phi=(0.0,), pi=(0.0,)):
    return RadialCanonicalPoint(r, p, phi, pi)


# -- configuration --------------------------------------------------------------


def test_config_defaults_and_validation():
    cfg = IntegratorConfig(t_final=2.0)
    assert cfg.rel_tol == 1e-10 and cfg.abs_tol == 1e-12
    assert cfg.interval == pytest.approx(2e-3)
    assert len(cfg.sample_times()) == 1001
    for bad in ({"rel_tol": 0}, {"scheme": "euler"}, {"t_final": -1}, {"order": 3}):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)


# -- conformal closed form ----------------------------------------------------------


@pytest.mark.parametrize("scheme", ["adaptive-complex", SPLIT])
def test_conformal_K_law(scheme):
    s = _conformal()
    cfg = IntegratorConfig(scheme=scheme, t_final=5.0)
    c0 = _start()
    tr = flow_canonical(s, c0, cfg, {"K": "K"}) if scheme == SPLIT else flow_complex(s, canonical_to_klein(c0, 1.0), s.params, cfg, {"K": "K"})
    K = tr.values["K"].real
    assert np.max(np.abs(K - (0.5 + 0.5 * tr.t**2))) < 1e-6
    i = np.argmin(np.abs(tr.t - 1.0))
    assert tr.canonical.r[i] == pytest.approx(np.sqrt(2.0), abs=1e-6)


def test_second_differences_of_K_and_D():
    s = _conformal()
    c0 = _start(1.3, 0.4, [0.2], [0.3])
    tr = flow_canonical(s, c0, IntegratorConfig(scheme=SPLIT, t_final=2.0), {"K": "K", "D": "D", "H": "H"})
    dt = tr.t[1] - tr.t[0]
    K, D, H = (tr.values[k].real for k in ("K", "D", "H"))
    assert np.max(np.abs((K[2:] - 2 * K[1:-1] + K[:-2]) / dt**2 - 2 * H[1:-1])) < 1e-4
    assert np.max(np.abs((D[2:] - D[:-2]) / (2 * dt) - 2 * H[1:-1])) < 1e-4


def test_zero_time_flow_is_identity():
    s = _conformal()
    p0 = canonical_to_klein(_start(1.2, 0.3, [0.5], [0.2]), 1.0)
    tr = flow_complex(s, p0, s.params, IntegratorConfig(t_final=0.0))
    assert len(tr) == 1
    assert np.array_equal(tr.klein.coords()[0], p0.coords())
    drift = audit(tr)
    assert all(v == 0 for v in drift.max_rel_drift.values())


# -- oscillator ------------------------------------------------------------------------


def test_oscillator_radial_period():
    # H = p^2/2 + I/r^2 + r^2/2: r^2 oscillates with period pi / omega
    s = build_system("oscillator", AngularModel((1,), 1.0), ModelParams(g=1.0, omega=1.0))
    tr = flow_canonical(s, _start(1.5), IntegratorConfig(scheme=SPLIT, t_final=np.pi))
    assert abs(tr.canonical.r[-1] - 1.5) < 1e-6
    assert abs(tr.canonical.r[len(tr) // 2] - 1.5) > 0.1


def test_pi_is_held_exactly():
    s = build_system("oscillator", AngularModel((1, 2), 1.0), ModelParams(g=1.0, omega=1.0))
    c0 = _start(1.2, 0.3, [0.4, 1.0], [0.5, 0.7])
    tr = flow_canonical(s, c0, IntegratorConfig(scheme=SPLIT, t_final=20.0))
    assert np.all(tr.canonical.pi == c0.pi)


def test_time_reversal():
    s = build_system("oscillator", AngularModel((1, 2), 1.0), ModelParams(g=1.0, omega=1.3))
    c0 = _start(1.2, 0.3, [0.4, 1.0], [0.5, 0.7])
    cfg = IntegratorConfig(scheme=SPLIT, t_final=20.0)
    end = flow_canonical(s, c0, cfg).canonical[-1]
    back = reverse(s, end, cfg)
    assert abs(back.r - c0.r) < 1e-8 and abs(back.p_r - c0.p_r) < 1e-8
    d = np.abs(np.angle(np.exp(1j * (back.phi - c0.phi))))
    assert np.max(d) < 1e-8


@pytest.mark.parametrize("n", [(1, 1), (1, 2), (2,)])
def test_oscillator_conservation(n):
    N = len(n) + 1
    s = build_system("oscillator", AngularModel(n, 1.0), ModelParams(g=1.0, omega=1.0))
    c0 = _start(1.2, 0.3, [0.4, 1.0][: N - 1], [0.5, 0.7][: N - 1])
    tr = flow_canonical(s, c0, IntegratorConfig(scheme=SPLIT, t_final=50.0))
    drift = audit(tr)
    assert any(k.startswith("~M_ab") for k in drift.max_rel_drift)
    assert drift.passed(1e-6), drift.max_rel_drift


def test_coulomb_bound_orbit_conservation():
    s = build_system("coulomb", AngularModel((1,), 1.0), ModelParams(g=1.0, gamma=1.0))
    c0 = _start(1.0, 0.2, [0.4], [0.3])
    assert s.energy(c0) < 0
    p0 = canonical_to_klein(c0, 1.0)
    tr = flow_complex(s, p0, s.params, IntegratorConfig(t_final=50.0))
    drift = audit(tr)
    assert "R_a[1]" in drift.max_rel_drift
    assert drift.passed(1e-6), drift.max_rel_drift


# -- cross-chart agreement and domain exit ------------------------------------------------


@pytest.mark.parametrize("kind", ["conformal", "oscillator", "coulomb"])
def test_cross_chart_agreement(kind):
    s = build_system(kind, AngularModel((1, 1), 1.0), ModelParams(g=1.0, omega=0.8, gamma=0.6))
    c0 = _start(1.1, -0.2, [0.3, 2.0], [0.4, 0.25])
    cfg_c = IntegratorConfig(t_final=3.0)
    cfg_s = IntegratorConfig(scheme=SPLIT, t_final=3.0)
    a = flow_complex(s, canonical_to_klein(c0, 1.0), s.params, cfg_c).final
    b = flow_canonical(s, c0, cfg_s).final
    assert np.max(np.abs(a.coords() - b.coords())) < 10 * np.sqrt(1e-10)
    assert np.max(np.abs(a.coords() - b.coords())) < 1e-5


def test_generic_fallback_matches_splitting():
    m = AngularModel((1, 1), 1.0)
    gen = build_system("generic", m, angular_gen=lambda pi, phi: 0.5 * (np.sum(pi, axis=-1) + 1.0) ** 2)
    conf = build_system("conformal", m)
    c0 = _start(1.1, 0.2, [0.3, 2.0], [0.4, 0.25])
    a = flow_canonical(gen, c0, IntegratorConfig(scheme=SPLIT, t_final=2.0)).final
    b = flow_canonical(conf, c0, IntegratorConfig(scheme=SPLIT, t_final=2.0)).final
    assert np.max(np.abs(a.coords() - b.coords())) < 1e-6


def test_domain_exit_is_reported():
    s = _conformal()
    p0 = canonical_to_klein(_start(1.0, 2000.0), 1.0)
    tr = flow_complex(s, p0, s.params, IntegratorConfig(t_final=50.0))
    assert tr.status == "domain_exit"
    assert tr.t[-1] < 50.0 and len(tr) > 1


def test_zero_angular_part_rejected():
    s = build_system("conformal", AngularModel((1,), 1.0), shifted=True)
    with pytest.raises(DomainError):
        flow_canonical(s, _start(), IntegratorConfig(scheme=SPLIT))


def test_audit_needs_params_for_new_integrals():
    s = _conformal()
    tr = flow_canonical(s, _start(), IntegratorConfig(scheme=SPLIT, t_final=0.1))
    with pytest.raises(ValueError):
        audit(tr, {"K": "K"})
    drift = audit(tr, {"H": "H"}, s.params)
    assert drift.max_rel_drift["H"] < 1e-12
