"""Hamiltonian flows on the Klein model and conservation audits.

Two integrators:

* :func:`flow_complex` integrates ``du^a/dt = {u^a, H}`` in the complex chart
  with an adaptive embedded Runge-Kutta pair (scipy's DOP853); the Poisson
  tensor is state dependent there, so conservation is monitored, not enforced.
* :func:`flow_canonical` advances ``(r, p_r)`` with a symmetric composition of
  kick-drift-kick Strang steps, transports ``pi`` exactly and advances ``phi``
  inside the kicks.  The scheme is symplectic and time reversible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .charts import RadialCanonicalPoint, canonical_to_klein, klein_to_canonical, wrap
from .generators import Generators, GeneratorId, ModelParams, as_id
from .geometry import A_FLOOR, DomainError, KleinPoint, _delta
from .jet import Jet
from .models import HamiltonianSystem
from .poisson import poisson_tensor

log = logging.getLogger(__name__)

# Yoshida's sixth-order composition (solution A), outermost weight first
_YOSHIDA6 = (0.784513610477560, 0.235573213359357, -1.17767998417887)
_YOSHIDA6 = _YOSHIDA6 + (1.0 - 2.0 * sum(_YOSHIDA6),) + _YOSHIDA6[::-1]
_COMPOSITIONS = {
    2: (1.0,),
    4: (1.0 / (2.0 - 2.0 ** (1 / 3)), -(2.0 ** (1 / 3)) / (2.0 - 2.0 ** (1 / 3)), 1.0 / (2.0 - 2.0 ** (1 / 3))),
    6: _YOSHIDA6,
}


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "adaptive-complex"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    t_final: float = 1.0
    sample_interval: float | None = None
    order: int = 6

    def __post_init__(self):
        if self.scheme not in ("adaptive-complex", "canonical-splitting"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.order not in _COMPOSITIONS:
            raise ValueError(f"order must be one of {sorted(_COMPOSITIONS)}")

    @property
    def interval(self) -> float:
        if self.sample_interval:
            return self.sample_interval
        return self.t_final / 1000 if self.t_final > 0 else 1.0

    def sample_times(self) -> np.ndarray:
        if self.t_final == 0:
            return np.zeros(1)
        n = max(1, int(round(self.t_final / self.interval)))
        return np.linspace(0.0, self.t_final, n + 1)

    def splitting_step(self) -> float:
        """Step of the composition: local error ~ rel_tol per unit time for O(1) frequencies."""
        return min(self.max_step, self.rel_tol ** (1.0 / self.order))


@dataclass
class Trajectory:
    chart: str
    t: np.ndarray
    klein: KleinPoint
    canonical: RadialCanonicalPoint
    g: float
    status: str = "ok"
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def final(self) -> KleinPoint:
        return self.klein[-1]


@dataclass
class InvariantAudit:
    max_rel_drift: dict[str, float]
    max_abs_drift: dict[str, float]
    series: dict[str, np.ndarray]

    def passed(self, tol: float) -> bool:
        return all(v < tol for v in self.max_rel_drift.values())

    def as_dict(self) -> dict:
        return {
            "integrals": [
                {"name": k, "max_rel_drift": self.max_rel_drift[k], "max_abs_drift": self.max_abs_drift[k]}
                for k in self.max_rel_drift
            ]
        }


# ---------------------------------------------------------------------------
# complex chart


def _hamiltonian_fn(h, params: ModelParams) -> Callable[[Generators], Jet]:
    if isinstance(h, HamiltonianSystem):
        if h.hamiltonian is None:
            raise ValueError("this system has no Klein-chart Hamiltonian; use flow_canonical")
        return h.hamiltonian
    if callable(h) and not isinstance(h, (str, GeneratorId)):
        return h
    key = as_id(h)
    return lambda G: G[key]


def _pack(p: KleinPoint) -> np.ndarray:
    u = p.coords()
    return np.concatenate([u.real, u.imag])


def _unpack(y: np.ndarray, N: int) -> KleinPoint:
    return KleinPoint.from_coords(y[:N] + 1j * y[N:], check=False)


def _integrals_of(system, integrals) -> dict:
    if integrals is not None:
        return {str(k): (v if callable(v) else (lambda G, k=as_id(v): G[k])) for k, v in integrals.items()}
    if isinstance(system, HamiltonianSystem):
        return dict(system.integrals)
    return {}


def _values(integrals: dict, p: KleinPoint, params: ModelParams) -> dict[str, np.ndarray]:
    if not integrals:
        return {}
    G = Generators(p, params)
    return {k: f(G).value for k, f in integrals.items()}


def flow_complex(
    h,
    p0: KleinPoint,
    params: ModelParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    integrals: dict | None = None,
) -> Trajectory:
    """Integrate ``du/dt = {u, H}`` for ``u = (w, z)``.

    ``h`` is a generator id, a system, or a callable ``Generators -> Jet``.
    Leaving the domain (``A`` falling to the floor) ends the run with
    ``status == "domain_exit"`` and the partial trajectory.
    """
    ham = _hamiltonian_fn(h, params)
    N, g = p0.N, params.g
    ts = cfg.sample_times()

    def rhs(_t, y):
        p = _unpack(y, N)
        P = poisson_tensor(p, g)
        udot = P @ ham(Generators(p, params)).db
        return np.concatenate([udot.real, udot.imag])

    def boundary(_t, y):
        return _delta(_unpack(y, N)) / g - A_FLOOR

    boundary.terminal = True
    boundary.direction = -1

    status = "ok"
    if cfg.t_final == 0:
        ys = _pack(p0)[:, None]
    else:
        sol = solve_ivp(
            rhs, (0.0, cfg.t_final), _pack(p0), method="DOP853", t_eval=ts,
            rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step, events=boundary,
        )  # fmt: skip
        if sol.status == 1:
            status = "domain_exit"
            log.warning("trajectory reached the boundary at t=%g", sol.t_events[0][0])
        elif sol.status < 0:
            raise RuntimeError(f"integration failed: {sol.message}")
        ts, ys = sol.t, sol.y
    u = ys[:N].T + 1j * ys[N:].T
    klein = KleinPoint.from_coords(u, check=False)
    inside = _delta(klein) > 0
    klein, ts = klein[inside], ts[inside]
    traj = Trajectory("klein", ts, klein, klein_to_canonical(klein, g), g, status)
    traj.values = _values(_integrals_of(h, integrals), klein, params)
    return traj


# ---------------------------------------------------------------------------
# canonical chart


def _kdk(system: HamiltonianSystem, r, p, phi, pi, h):
    """One Strang step (kick h/2, drift h, kick h/2) for phase-independent angular parts."""
    ang = system.angular(pi, phi)
    dang = system.angular_grad(pi, phi)

    def kick(r, p, phi, dt):
        force = 2.0 * ang / r**3 - system.potential_grad(r)
        return p + dt * force, phi + dt * dang / r**2

    p, phi = kick(r, p, phi, 0.5 * h)
    r = r + h * p
    if r <= 0:
        raise DomainError("splitting step crossed r = 0; reduce max_step")
    p, phi = kick(r, p, phi, 0.5 * h)
    return r, p, phi


def _generic_rhs(system: HamiltonianSystem, eps: float = 1e-6):
    n = system.N - 1

    def rhs(_t, y):
        r, p, phi, pi = y[0], y[1], y[2 : 2 + n], y[2 + n :]
        ang = system.angular(pi, phi)
        dpi = np.empty(n)
        dphi = np.empty(n)
        for a in range(n):
            e = np.zeros(n)
            e[a] = eps
            dpi[a] = (system.angular(pi + e, phi) - system.angular(pi - e, phi)) / (2 * eps)
            dphi[a] = (system.angular(pi, phi + e) - system.angular(pi, phi - e)) / (2 * eps)
        return np.concatenate(
            [[p, 2.0 * ang / r**3 - system.potential_grad(r)], dpi / r**2, -dphi / r**2]
        )

    return rhs


def flow_canonical(
    system: HamiltonianSystem,
    c0: RadialCanonicalPoint,
    cfg: IntegratorConfig = IntegratorConfig(scheme="canonical-splitting"),
    integrals: dict | None = None,
) -> Trajectory:
    """Integrate a system in ``(r, p_r, phi, pi)``.

    Phase-independent angular parts use the symmetric splitting with step
    :meth:`IntegratorConfig.splitting_step`; ``pi`` is held exactly constant.
    Generic angular parts ``I(pi, phi)`` fall back to the adaptive pair with
    central-difference angular gradients.
    """
    if c0.N != system.N:
        raise ValueError("initial point and system have different N")
    if not system.angular(c0.pi, c0.phi) > 0:
        raise DomainError("angular part must be positive to keep r away from 0")
    g = system.params.g
    ts = cfg.sample_times()
    n = system.N - 1

    if system.phase_independent:
        weights = _COMPOSITIONS[cfg.order]
        h_max = cfg.splitting_step()
        r, p = float(c0.r), float(c0.p_r)
        phi, pi = np.array(c0.phi, dtype=float), np.array(c0.pi, dtype=float)
        direction = 1.0 if cfg.t_final >= 0 else -1.0
        rs, ps, phis = [r], [p], [phi.copy()]
        for t0, t1 in zip(ts[:-1], ts[1:]):
            steps = max(1, int(np.ceil((t1 - t0) / h_max - 1e-9)))
            h = (t1 - t0) / steps * direction
            for _ in range(steps):
                for c in weights:
                    r, p, phi = _kdk(system, r, p, phi, pi, c * h)
            rs.append(r)
            ps.append(p)
            phis.append(phi.copy())
        k = len(rs)
        canon = RadialCanonicalPoint(
            np.array(rs), np.array(ps), wrap(np.array(phis).reshape(k, n)), np.tile(pi, (k, 1))
        )
    else:
        y0 = np.concatenate([[float(c0.r), float(c0.p_r)], np.ravel(c0.phi), np.ravel(c0.pi)])
        if cfg.t_final == 0:
            ys = y0[:, None]
        else:
            sol = solve_ivp(
                _generic_rhs(system), (0.0, cfg.t_final), y0, method="DOP853", t_eval=ts,
                rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
            )  # fmt: skip
            if sol.status < 0:
                raise RuntimeError(f"integration failed: {sol.message}")
            ts, ys = sol.t, sol.y
        canon = RadialCanonicalPoint(ys[0], ys[1], wrap(ys[2 : 2 + n].T), ys[2 + n :].T)

    klein = canonical_to_klein(canon, g)
    traj = Trajectory("canonical", ts, klein, canon, g)
    traj.values = _values(_integrals_of(system, integrals), klein, system.params)
    return traj


def reverse(system: HamiltonianSystem, c: RadialCanonicalPoint, cfg: IntegratorConfig) -> RadialCanonicalPoint:
    """Integrate backwards by ``cfg.t_final`` with the same step sequence."""
    weights = _COMPOSITIONS[cfg.order]
    ts = cfg.sample_times()
    h_max = cfg.splitting_step()
    r, p = float(c.r), float(c.p_r)
    phi, pi = np.array(c.phi, dtype=float), np.array(c.pi, dtype=float)
    for t0, t1 in zip(ts[:-1][::-1], ts[1:][::-1]):
        steps = max(1, int(np.ceil((t1 - t0) / h_max - 1e-9)))
        h = -(t1 - t0) / steps
        for _ in range(steps):
            for w in weights[::-1]:
                r, p, phi = _kdk(system, r, p, phi, pi, w * h)
    return RadialCanonicalPoint(r, p, wrap(phi), pi)


# ---------------------------------------------------------------------------
# audit


def audit(traj: Trajectory, integrals: dict | None = None, params: ModelParams | None = None) -> InvariantAudit:
    """Drift ``|F(t) - F(0)| / max(1, |F(0)|)`` of every integral along the trajectory."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if integrals is not None:
        if params is None:
            raise ValueError("params are needed to evaluate integrals")
        values = _values(_integrals_of(None, integrals), traj.klein, params)
    else:
        values = traj.values
    rel, ab, series = {}, {}, {}
    for name, v in values.items():
        d = np.abs(v - v[0])
        s = d / max(1.0, abs(v[0]))
        rel[name], ab[name], series[name] = float(np.max(s)), float(np.max(d)), s
    return InvariantAudit(rel, ab, series)
