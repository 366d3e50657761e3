"""Coordinate charts: Poincaré ball, Klein model, canonical and action-angle variables.

The canonical chart is ``(r, p_r, phi_a, pi_a)`` with

    w = p_r / r - i (pi + g) / r^2,   z^a = sqrt(2 pi_a) / r * exp(i phi_a),

so that ``A = 2 / r^2``.  The intermediate chart ``(x, p_x) = (p_r / r, -r^2 / 2)``
has ``x = Re w`` and ``p_x = -1/A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .generators import Generators, ModelParams, gid
from .geometry import DomainError, KleinPoint, PoincarePoint, coordinate_jets, factor_A
from .jet import Jet

TWO_PI = 2.0 * np.pi


def wrap(angle):
    """Reduce angles to ``[0, 2 pi)``."""
    out = np.mod(angle, TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def angle_distance(a, b):
    """Distance on the circle."""
    d = np.abs(wrap(np.asarray(a) - np.asarray(b)))
    return np.minimum(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# Poincaré <-> Klein


def poincare_to_klein(q: PoincarePoint) -> KleinPoint:
    zN = q.z[..., -1]
    if np.any(np.isclose(zN, -1.0)):
        raise DomainError("z^N = -1 lies on the boundary")
    w = 1j * (zN - 1.0) / (zN + 1.0)
    zt = q.z[..., :-1] * ((1.0 + 1j * w) / np.sqrt(2.0))[..., None]
    return KleinPoint(w, zt)


def klein_to_poincare(p: KleinPoint) -> PoincarePoint:
    s = 1.0 + 1j * p.w
    zN = (1.0 - 1j * p.w) / s
    za = np.sqrt(2.0) * p.z / s[..., None]
    return PoincarePoint(np.concatenate([za, zN[..., None]], axis=-1))


# ---------------------------------------------------------------------------
# canonical charts


@dataclass(frozen=True)
class RadialCanonicalPoint:
    r: np.ndarray
    p_r: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    def __init__(self, r, p_r, phi=(), pi=(), *, check: bool = True):
        r = np.asarray(r, dtype=float)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p_r", np.asarray(p_r, dtype=float))
        phi = np.asarray(phi, dtype=float).reshape(r.shape + (-1,))
        pi = np.asarray(pi, dtype=float).reshape(r.shape + (-1,))
        object.__setattr__(self, "phi", wrap(phi))
        object.__setattr__(self, "pi", pi)
        if check:
            if np.any(r <= 0):
                raise DomainError("r must be positive")
            if np.any(pi < 0):
                raise DomainError("pi_a must be nonnegative")

    @property
    def N(self) -> int:
        return self.pi.shape[-1] + 1

    @property
    def degenerate(self) -> np.ndarray:
        """Where ``z^a = 0`` the phase is undefined and set to 0."""
        return self.pi == 0

    def __getitem__(self, idx) -> "RadialCanonicalPoint":
        return RadialCanonicalPoint(self.r[idx], self.p_r[idx], self.phi[idx], self.pi[idx], check=False)

    def as_dict(self) -> dict:
        return {"r": float(self.r), "p_r": float(self.p_r), "phi": self.phi.tolist(), "pi": self.pi.tolist()}


@dataclass(frozen=True)
class CanonicalXPoint:
    x: np.ndarray
    p_x: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    def __init__(self, x, p_x, phi=(), pi=(), *, check: bool = True):
        x = np.asarray(x, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p_x", np.asarray(p_x, dtype=float))
        object.__setattr__(self, "phi", wrap(np.asarray(phi, dtype=float).reshape(x.shape + (-1,))))
        object.__setattr__(self, "pi", np.asarray(pi, dtype=float).reshape(x.shape + (-1,)))
        if check and (np.any(self.p_x >= 0) or np.any(self.pi < 0)):
            raise DomainError("need p_x < 0 and pi_a >= 0")

    def as_dict(self) -> dict:
        return {"x": float(self.x), "p_x": float(self.p_x), "phi": self.phi.tolist(), "pi": self.pi.tolist()}


def klein_to_canonical(p: KleinPoint, g: float) -> RadialCanonicalPoint:
    A = factor_A(p, g)
    r = np.sqrt(2.0 / A)
    absz2 = np.abs(p.z) ** 2
    return RadialCanonicalPoint(r, r * p.w.real, wrap(np.angle(p.z)), absz2 / A[..., None])


def canonical_to_klein(c: RadialCanonicalPoint, g: float) -> KleinPoint:
    if not g > 0:
        raise DomainError("g must be positive")
    total = np.sum(c.pi, axis=-1)
    w = c.p_r / c.r - 1j * (total + g) / c.r**2
    z = np.sqrt(2.0 * c.pi) / c.r[..., None] * np.exp(1j * c.phi)
    return KleinPoint(w, z)


def canonical_to_x(c: RadialCanonicalPoint) -> CanonicalXPoint:
    return CanonicalXPoint(c.p_r / c.r, -0.5 * c.r**2, c.phi, c.pi)


def x_to_canonical(x: CanonicalXPoint) -> RadialCanonicalPoint:
    r = np.sqrt(-2.0 * x.p_x)
    return RadialCanonicalPoint(r, x.x * r, x.phi, x.pi)


def klein_to_x(p: KleinPoint, g: float) -> CanonicalXPoint:
    return canonical_to_x(klein_to_canonical(p, g))


def x_to_klein(x: CanonicalXPoint, g: float) -> KleinPoint:
    """``w = x + i (pi + g) / (2 p_x)``, ``z^a = sqrt(-pi_a / p_x) exp(i phi_a)``."""
    total = np.sum(x.pi, axis=-1)
    w = x.x + 1j * (total + g) / (2.0 * x.p_x)
    z = np.sqrt(-x.pi / x.p_x[..., None]) * np.exp(1j * x.phi)
    return KleinPoint(w, z)


# ---------------------------------------------------------------------------
# action-angle identification


@dataclass(frozen=True)
class ActionAngleState:
    I: np.ndarray
    Phi: np.ndarray
    n: tuple

    def __init__(self, I, Phi, n):
        I = np.asarray(I, dtype=float)
        n = tuple(Fraction(k) for k in np.atleast_1d(n))
        if any(k <= 0 for k in n):
            raise ValueError("resonance numbers n_a must be positive")
        if np.any(I < 0):
            raise DomainError("actions must be nonnegative")
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "Phi", wrap(np.asarray(Phi, dtype=float)))
        object.__setattr__(self, "n", n)


def _n_array(n) -> np.ndarray:
    return np.array([float(k) for k in n])


def action_angle_embed(s: ActionAngleState) -> tuple[np.ndarray, np.ndarray]:
    """``(phi, pi)`` with ``pi_a = n_a I_a`` and ``phi_a = Phi_a / n_a``.

    The image phases cover only ``[0, 2 pi / n_a)``.
    """
    n = _n_array(s.n)
    return wrap(s.Phi / n), n * s.I


def action_angle_from_canonical(c: RadialCanonicalPoint, n) -> ActionAngleState:
    nn = _n_array(tuple(Fraction(k) for k in np.atleast_1d(n)))
    return ActionAngleState(c.pi / nn, wrap(nn * c.phi), n)


# ---------------------------------------------------------------------------
# canonical coordinates as functions on the Klein model


def canonical_jets(p: KleinPoint, g: float) -> dict[str, Jet]:
    """Jets of ``r, p_r, x, p_x, phi_a, pi_a`` (keys ``phi1``, ``pi1``, ...)."""
    G = Generators(p, ModelParams(g=g))
    w, zs = coordinate_jets(p)
    r = (2.0 * G["K"]).sqrt()
    out = {"r": r, "p_r": r * w.real, "x": w.real, "p_x": -G["K"]}
    for a, z in enumerate(zs, start=1):
        out[f"pi{a}"] = G[gid("H_ab", a, a)]
        zv = z.value
        d = np.zeros_like(z.d)
        db = np.zeros_like(z.db)
        d[..., a] = -0.5j / zv
        db[..., a] = 0.5j / np.conj(zv)
        out[f"phi{a}"] = Jet(wrap(np.angle(zv)), d, db)
    return out


def canonical_generator(tag: str, idx: tuple, c: RadialCanonicalPoint, g: float) -> np.ndarray:
    """Generators written directly in ``(r, p_r, phi, pi)``."""
    total = np.sum(c.pi, axis=-1)
    r, p = c.r, c.p_r
    if tag == "H":
        return p**2 / 2 + (total + g) ** 2 / (2 * r**2)
    if tag == "K":
        return r**2 / 2
    if tag == "D":
        return p * r
    a = idx[0] - 1
    ea = np.exp(-1j * c.phi[..., a])
    if tag == "H_a":
        return r * np.sqrt(c.pi[..., a] / 2) * ea
    if tag == "H_aN":
        return np.sqrt(2 * c.pi[..., a]) * (p / 2 - 1j * (total + g) / (2 * r)) * ea
    if tag == "H_ab":
        b = idx[1] - 1
        return np.sqrt(c.pi[..., a] * c.pi[..., b]) * np.exp(-1j * (c.phi[..., a] - c.phi[..., b]))
    raise KeyError(f"no canonical form for {tag}")


def angular_casimir(c: RadialCanonicalPoint, g: float) -> np.ndarray:
    """``I = (pi + g)^2 / 2``."""
    return 0.5 * (np.sum(c.pi, axis=-1) + g) ** 2


@dataclass
class ChartReport:
    tol: float
    residuals: dict

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    def as_dict(self) -> dict:
        return {
            "tol": self.tol,
            "passed": self.passed,
            "relations": [{"label": k, "residual": v, "passed": v < self.tol} for k, v in self.residuals.items()],
        }


def symplectomorphism_check(N: int, g: float = 1.0, samples: int = 100, seed: int = 0, tol: float = 1e-10) -> ChartReport:
    """Canonical brackets pushed through the Klein fundamental brackets, plus chart roundtrips."""
    from .geometry import sample_points
    from .poisson import contract, poisson_tensor

    rng = np.random.default_rng(seed)
    p = sample_points(N, samples, rng)
    P = poisson_tensor(p, g)
    J = canonical_jets(p, g)
    res = {}

    def put(label, lhs, target):
        res[label] = max(res.get(label, 0.0), float(np.max(np.abs(lhs - target))))

    coords = ["r", "p_r"] + [f"phi{a}" for a in range(1, N)] + [f"pi{a}" for a in range(1, N)]
    conj_pair = {"r": "p_r"}
    conj_pair.update({f"phi{a}": f"pi{a}" for a in range(1, N)})
    for i, u in enumerate(coords):
        for v in coords[i + 1 :]:
            target = 1.0 if conj_pair.get(u) == v else 0.0
            put(f"{{{u},{v}}}", contract(J[u], J[v], P), target)
    put("{x,p_x}", contract(J["x"], J["p_x"], P), 1.0)
    for a in range(1, N):
        put(f"{{x,phi{a}}}", contract(J["x"], J[f"phi{a}"], P), 0.0)
        put(f"{{p_x,pi{a}}}", contract(J["p_x"], J[f"pi{a}"], P), 0.0)

    # roundtrips
    c = klein_to_canonical(p, g)
    back = canonical_to_klein(c, g)
    put("klein->canonical->klein", back.coords(), p.coords())
    xk = x_to_klein(klein_to_x(p, g), g)
    put("klein->x->klein", xk.coords(), p.coords())
    c2 = x_to_canonical(canonical_to_x(c))
    put("canonical->x->canonical", np.concatenate([[c2.r - c.r, c2.p_r - c.p_r]]), 0.0)
    pk = poincare_to_klein(klein_to_poincare(p))
    put("klein->poincare->klein", pk.coords(), p.coords())
    put("pi + g = -2 Im w / A", np.sum(c.pi, axis=-1) + g, -2.0 * p.w.imag / factor_A(p, g))
    return ChartReport(tol, res)
