"""Kähler geometry of the N-dimensional Klein model.

Coordinates are ``(w, z^1, ..., z^{N-1})`` with ``Im w < 0`` and
``sum |z|^2 < -2 Im w``.  The Kähler potential is

    K = -g log[i(w - conj w) - z.conj(z)],

and ``A = [i(w - conj w) - z.conj(z)] / g`` is the positive factor that sets
the scale of the Poisson brackets.  Every function here accepts batched
points: ``w`` of shape ``S`` and ``z`` of shape ``S + (N-1,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .jet import Jet

#: points with A below this are treated as lying on the boundary
A_FLOOR = 1e-8
#: default tolerances for analytic and finite-difference identities
ANALYTIC_TOL = 1e-10
FD_TOL = 1e-6


class DomainError(ValueError):
    """Raised when a point lies outside the Klein (or Poincaré) domain."""


class ConditioningError(ArithmeticError):
    """Raised when a point is too close to the boundary to be evaluated."""


@dataclass(frozen=True)
class KleinPoint:
    """Phase-space point ``(w, z)``, possibly a batch of points."""

    w: np.ndarray
    z: np.ndarray

    def __init__(self, w, z=(), *, check: bool = True):
        w = np.asarray(w, dtype=complex)
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0 or z.shape[:-1] != w.shape:
            if z.size == 0:
                z = np.zeros(w.shape + (0,), dtype=complex)
            else:
                z = np.broadcast_to(z, w.shape + z.shape[-1:]).copy()
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)
        if check:
            validate(self)

    @property
    def N(self) -> int:
        return self.z.shape[-1] + 1

    @property
    def shape(self) -> tuple:
        return self.w.shape

    def __getitem__(self, idx) -> "KleinPoint":
        return KleinPoint(self.w[idx], self.z[idx], check=False)

    def coords(self) -> np.ndarray:
        """Holomorphic coordinates stacked as ``(w, z^1, ...)`` along the last axis."""
        return np.concatenate([self.w[..., None], self.z], axis=-1)

    @classmethod
    def from_coords(cls, u, check: bool = True) -> "KleinPoint":
        u = np.asarray(u, dtype=complex)
        return cls(u[..., 0], u[..., 1:], check=check)

    def as_dict(self) -> dict:
        if self.shape:
            raise ValueError("as_dict expects a single point")
        return {
            "w": [float(self.w.real), float(self.w.imag)],
            "z": [[float(c.real), float(c.imag)] for c in self.z],
        }


@dataclass(frozen=True)
class PoincarePoint:
    """Point ``(z^1, ..., z^N)`` of the unit ball; the last entry is ``z^N``."""

    z: np.ndarray

    def __init__(self, z, *, check: bool = True):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        object.__setattr__(self, "z", z)
        if check and np.any(np.sum(np.abs(z) ** 2, axis=-1) >= 1.0):
            raise DomainError("Poincaré point outside the unit ball")

    @property
    def N(self) -> int:
        return self.z.shape[-1]


def _check_g(g: float) -> float:
    if not np.all(np.asarray(g) > 0):
        raise DomainError(f"coupling g must be positive, got {g}")
    return g


def validate(p: KleinPoint) -> None:
    if np.any(p.w.imag >= 0):
        raise DomainError("Im w must be negative")
    if np.any(np.sum(np.abs(p.z) ** 2, axis=-1) >= -2.0 * p.w.imag):
        raise DomainError("sum |z|^2 must be smaller than -2 Im w")


def _delta(p: KleinPoint) -> np.ndarray:
    # i(w - conj w) - |z|^2 = -2 Im w - |z|^2
    return -2.0 * p.w.imag - np.sum(np.abs(p.z) ** 2, axis=-1)


def factor_A(p: KleinPoint, g: float) -> np.ndarray:
    """``A = (i(w - conj w) - z.conj z) / g``, strictly positive on the domain."""
    _check_g(g)
    validate(p)
    return _delta(p) / g


def kahler_potential(p: KleinPoint, g: float) -> np.ndarray:
    return -g * np.log(g * factor_A(p, g))


# ---------------------------------------------------------------------------
# jets of the coordinates and of A


def coordinate_jets(p: KleinPoint) -> tuple[Jet, list[Jet]]:
    """Jets of ``w`` and ``z^alpha`` at ``p`` (gradient index 0 is ``w``)."""
    n = p.N
    wj = Jet.variable(p.w, 0, n)
    zj = [Jet.variable(p.z[..., a], a + 1, n) for a in range(n - 1)]
    return wj, zj


def A_jet(p: KleinPoint, g: float) -> Jet:
    wj, zj = coordinate_jets(p)
    delta = (wj - wj.conj()) * 1j
    for z in zj:
        delta = delta - z * z.conj()
    return delta / g


# ---------------------------------------------------------------------------
# metric, inverse, Christoffel symbols


@dataclass(frozen=True)
class GeometrySample:
    A: np.ndarray
    kahler_potential: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    christoffel: np.ndarray


def _delta_gradients(p: KleinPoint):
    """``d Delta / du^a`` and ``d Delta / d conj(u^b)`` for ``Delta = gA``."""
    shape = p.shape + (p.N,)
    u = np.empty(shape, dtype=complex)
    v = np.empty(shape, dtype=complex)
    u[..., 0] = 1j
    v[..., 0] = -1j
    u[..., 1:] = -np.conj(p.z)
    v[..., 1:] = -p.z
    return u, v


def _zblock(N: int) -> np.ndarray:
    e = np.eye(N)
    e[0, 0] = 0.0
    return e


def metric(p: KleinPoint, g: float) -> np.ndarray:
    """``g_{a conj(b)}`` as an ``N x N`` matrix (rows holomorphic index)."""
    validate(p)
    delta = _delta(p)[..., None, None]
    u, v = _delta_gradients(p)
    return g * (u[..., :, None] * v[..., None, :] / delta**2 + _zblock(p.N) / delta)


def metric_derivative(p: KleinPoint, g: float) -> np.ndarray:
    """``dG[c, a, b] = d g_{a conj(b)} / du^c`` in closed form."""
    N = p.N
    delta = _delta(p)[..., None, None, None]
    u, v = _delta_gradients(p)
    # d v_b / du^c = -delta_{cb} on the z block, zero otherwise; d u_a / du^c = 0
    dv = -_zblock(N)
    uc = u[..., :, None, None]
    ua = u[..., None, :, None]
    vb = v[..., None, None, :]
    return g * (
        ua * dv[:, None, :] / delta**2
        - 2.0 * ua * vb * uc / delta**3
        - _zblock(N)[None, :, :] * uc / delta**2
    )


def geometry_sample(p: KleinPoint, g: float) -> GeometrySample:
    _check_g(g)
    A = factor_A(p, g)
    if np.any(A < A_FLOOR):
        raise ConditioningError(f"A={np.min(A):.3e} below floor {A_FLOOR:g}")
    G = metric(p, g)
    Ginv = np.linalg.inv(G)
    dG = metric_derivative(p, g)
    # Gamma^c_{ab} = g^{c conj d} d_a g_{b conj d}; g^{c conj d} = inv(G)[d, c]
    gamma = np.einsum("...dc,...abd->...cab", Ginv, dG)
    return GeometrySample(A, kahler_potential(p, g), G, Ginv, gamma)


# ---------------------------------------------------------------------------
# finite-difference helpers (oracle side only)


def fd_wirtinger(f: Callable[[KleinPoint], np.ndarray], p: KleinPoint, rel_step: float = 1e-5):
    """Central-difference Wirtinger gradients of ``f`` with one Richardson pass.

    ``f`` maps a KleinPoint of shape ``S`` to an array of shape ``S + T``.
    Returns ``(d, db)`` of shape ``(N,) + S + T`` for ``df/du^a`` and
    ``df/d conj(u^a)``.  Each point gets its own step
    ``rel_step * max(1, |u^a|)``.
    """
    u0 = p.coords()
    N = p.N

    def partial(a, direction, h):
        up = u0.copy()
        um = u0.copy()
        up[..., a] += direction * h
        um[..., a] -= direction * h
        fp = np.asarray(f(KleinPoint.from_coords(up, check=False)))
        fm = np.asarray(f(KleinPoint.from_coords(um, check=False)))
        hh = h.reshape(h.shape + (1,) * (fp.ndim - h.ndim))
        return (fp - fm) / (2.0 * hh)

    d, db = [], []
    for a in range(N):
        h = rel_step * np.maximum(1.0, np.abs(u0[..., a]))
        dx = (4.0 * partial(a, 1.0, h / 2) - partial(a, 1.0, h)) / 3.0
        dy = (4.0 * partial(a, 1j, h / 2) - partial(a, 1j, h)) / 3.0
        d.append(0.5 * (dx - 1j * dy))
        db.append(0.5 * (dx + 1j * dy))
    return np.array(d), np.array(db)


def killing_residual(
    p: KleinPoint,
    g: float,
    h: Callable[[KleinPoint], Jet],
    rel_step: float = 1e-5,
) -> np.ndarray:
    """``d_a d_b h - Gamma^c_{ab} d_c h`` as an ``N x N`` matrix per point.

    ``h`` returns a :class:`Jet`; the first derivatives are analytic and the
    holomorphic Hessian is a central difference of the analytic gradient.
    Batched points give a batch of matrices.
    """
    geo = geometry_sample(p, g)
    grad = h(p).d
    d, _ = fd_wirtinger(lambda q: h(q).d, p, rel_step)
    hess = np.moveaxis(d, 0, -2)  # hess[..., a, b] = d_a d_b h
    return hess - np.einsum("...cab,...c->...ab", geo.christoffel, grad)


# ---------------------------------------------------------------------------
# sampling


def sample_points(N: int, count: int, rng: np.random.Generator) -> KleinPoint:
    """Random batch inside the domain.

    ``Im w ~ U[-3, -0.1]``, ``Re w ~ U[-2, 2]`` and ``z`` uniform in the ball
    of radius ``0.9 sqrt(-2 Im w)``.
    """
    im = rng.uniform(-3.0, -0.1, count)
    re = rng.uniform(-2.0, 2.0, count)
    w = re + 1j * im
    m = N - 1
    if m == 0:
        return KleinPoint(w, np.zeros((count, 0)))
    x = rng.normal(size=(count, 2 * m))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    radius = 0.9 * np.sqrt(-2.0 * im) * rng.uniform(size=count) ** (1.0 / (2 * m))
    x *= radius[:, None]
    z = x[:, :m] + 1j * x[:, m:]
    return KleinPoint(w, z)
