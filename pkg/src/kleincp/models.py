"""Superintegrable systems on the Klein model.

An :class:`AngularModel` fixes the resonance vector ``n`` relating the angular
canonical pairs to action-angle variables (``pi_a = n_a I_a``,
``phi_a = Phi_a / n_a``) and the coupling ``g``.  Its angular Hamiltonian is
``(sum n_a I_a + g)^2 / 2``.

Integer powers of the su(1,N) generators (the "tilde" integrals) are globally
defined in the action-angle variables; :func:`build_system` bundles a
Hamiltonian with its declared integrals for the dynamics module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .charts import ActionAngleState, RadialCanonicalPoint, action_angle_embed, canonical_to_klein
from .generators import Generators, GeneratorId, ModelParams, gid
from .geometry import KleinPoint
from .jet import Jet

G_ZERO_MESSAGE = (
    "g = 0 is excluded: the Kähler structure and the Poisson brackets vanish, "
    "and absorbing g into the actions changes their range. "
    "Use shifted=True to describe the standard (g = 0) systems."
)


@dataclass(frozen=True)
class AngularModel:
    n: tuple
    g: float
    label: str = "custom"
    note: str = ""

    def __post_init__(self):
        n = tuple(Fraction(k).limit_denominator(10**6) for k in self.n)
        if not n:
            raise ValueError("resonance vector must not be empty")
        if any(k <= 0 for k in n):
            raise ValueError("resonance numbers n_a must be positive")
        if not self.g > 0:
            raise ValueError(G_ZERO_MESSAGE)
        object.__setattr__(self, "n", n)

    @property
    def N(self) -> int:
        return len(self.n) + 1

    @property
    def exponents(self) -> tuple[int, ...]:
        """Integer resonance numbers after clearing denominators across the tuple."""
        L = math.lcm(*(k.denominator for k in self.n))
        return tuple(int(k * L) for k in self.n)

    def as_dict(self) -> dict:
        return {"label": self.label, "n": [str(k) for k in self.n], "g": self.g, "note": self.note}


def angular_hamiltonian(m: AngularModel, I) -> np.ndarray:
    """``(sum n_a I_a + g)^2 / 2``."""
    I = np.asarray(I, dtype=float)
    if np.any(I < 0):
        raise ValueError("actions must be nonnegative")
    n = np.array([float(k) for k in m.n])
    return 0.5 * (np.sum(n * I, axis=-1) + m.g) ** 2


# ---------------------------------------------------------------------------
# tilde integrals

TILDE_BASES = {"H_a": 1, "H_aN": 1, "H_ab": 2, "M_ab": 2, "R_a": 1}


@dataclass(frozen=True)
class TildeIntegral:
    base: GeneratorId

    def __post_init__(self):
        if self.base.tag not in TILDE_BASES or self.base.bar:
            raise ValueError(f"no tilde integral for {self.base}")

    def exponent(self, m: AngularModel) -> int:
        k = m.exponents
        idx = self.base.idx
        if len(idx) == 1:
            return k[idx[0] - 1]
        return k[idx[0] - 1] * k[idx[1] - 1]

    def jet(self, G: Generators, m: AngularModel) -> Jet:
        return G[self.base] ** self.exponent(m)

    def __str__(self) -> str:
        return "~" + str(self.base)


def _klein_point(c, m: AngularModel, r=None, p_r=None) -> KleinPoint:
    if isinstance(c, KleinPoint):
        return c
    if isinstance(c, ActionAngleState):
        if r is None or p_r is None:
            raise ValueError("an action-angle state needs the radial pair (r, p_r)")
        phi, pi = action_angle_embed(c)
        c = RadialCanonicalPoint(r, p_r, phi, pi)
    return canonical_to_klein(c, m.g)


def tilde_eval(t: TildeIntegral, c, m: AngularModel, params: ModelParams, r=None, p_r=None) -> np.ndarray:
    """Literal power of the base generator at a Klein, canonical or action-angle point."""
    p = _klein_point(c, m, r, p_r)
    return t.jet(Generators(p, params), m).value


def tilde_action_angle_form(t: TildeIntegral, s: ActionAngleState, r, p_r, m: AngularModel, params: ModelParams):
    """Closed form of a tilde integral in ``(I, Phi, r, p_r)`` (independent of the Klein chart)."""
    n = np.array([float(k) for k in s.n])
    k = m.exponents
    I, Phi = np.moveaxis(np.asarray(s.I, float), -1, 0), np.moveaxis(np.asarray(s.Phi, float), -1, 0)
    total = sum(n[a] * I[a] for a in range(len(n))) + m.g
    idx = [i - 1 for i in t.base.idx]
    # base generator phases are exp(-i phi_a) with phi_a = Phi_a / n_a
    ratio = [k[i] / n[i] for i in idx]
    if t.base.tag == "H_a":
        (a,) = idx
        return (n[a] * I[a] / 2) ** (k[a] / 2) * r ** k[a] * np.exp(-1j * ratio[0] * Phi[a])
    if t.base.tag == "H_aN":
        (a,) = idx
        return (n[a] * I[a] / 2) ** (k[a] / 2) * (p_r - 1j * total / r) ** k[a] * np.exp(-1j * ratio[0] * Phi[a])
    if t.base.tag == "R_a":
        (a,) = idx
        rad = p_r + 1j * params.gamma / total - 1j * total / r
        return (n[a] * I[a] / 2) ** (k[a] / 2) * rad ** k[a] * np.exp(-1j * ratio[0] * Phi[a])
    a, b = idx
    e = k[a] * k[b]
    dab = (n[a] * n[b] * I[a] * I[b]) ** (e / 2)
    if t.base.tag == "H_ab":
        return dab * np.exp(-1j * e * (Phi[a] / n[a] - Phi[b] / n[b]))
    # M_ab = A_a B_b = (1/2) sqrt(pi_a pi_b) e^{-i(phi_a + phi_b)} ((p - i P/r)^2 + w^2 r^2)
    rad = (p_r - 1j * total / r) ** 2 + params.omega**2 * r**2
    return 0.5**e * dab * np.exp(-1j * e * (Phi[a] / n[a] + Phi[b] / n[b])) * rad**e


# ---------------------------------------------------------------------------
# presets


def preset_angular(kind: str, **kw) -> AngularModel:
    """Named angular models.

    ``monopole(s)``: ``n = (1, 1)``, ``g = |s|``.
    ``smorodinsky_winternitz(omega, g_a)``: ``g = sum |g_a|``, ``n_a = 2``.
    ``calogero(degrees, multiplicities)``: ``n = degrees``, ``g = sum multiplicities``.
    """
    if kind == "monopole":
        s = float(kw["s"])
        return AngularModel((1, 1), abs(s), label=f"monopole(s={s:g})")
    if kind in ("smorodinsky_winternitz", "sw"):
        ga = [float(x) for x in kw["g_a"]]
        omega = float(kw.get("omega", 1.0))
        return AngularModel(
            (2,) * (len(ga) - 1),
            sum(abs(x) for x in ga),
            label="smorodinsky_winternitz",
            note=f"k_a = 2 omega read as n_a = 2 with omega = {omega:g} kept as the radial frequency",
        )
    if kind == "calogero":
        degrees = [int(d) for d in kw["degrees"]]
        mult = [float(x) for x in kw["multiplicities"]]
        if not degrees:
            raise ValueError("calogero preset needs at least one degree")
        if any(x < 0 for x in mult):
            raise ValueError("multiplicities must be nonnegative")
        return AngularModel(tuple(degrees), sum(mult), label=f"calogero{tuple(degrees)}")
    raise KeyError(f"unknown preset {kind!r}")


PRESETS = {
    "monopole": lambda: preset_angular("monopole", s=2.0),
    "sw": lambda: preset_angular("smorodinsky_winternitz", omega=1.0, g_a=[1.0, -2.0, 0.5]),
    "calogero_a2": lambda: preset_angular("calogero", degrees=[2, 3], multiplicities=[0.5, 0.5, 0.5]),
}


# ---------------------------------------------------------------------------
# systems

KINDS = ("conformal", "oscillator", "coulomb", "generic")


@dataclass
class HamiltonianSystem:
    """A Hamiltonian with its declared integrals.

    ``integrals`` map names to functions ``Generators -> Jet``.  ``angular``
    is the angular part as a function of ``(pi, phi)`` and ``angular_grad``
    its ``pi``-gradient; ``potential`` is the radial ``V(r)``.
    """

    kind: str
    model: AngularModel
    params: ModelParams
    shifted: bool
    hamiltonian: Callable[[Generators], Jet] | None
    angular: Callable[[np.ndarray, np.ndarray], np.ndarray]
    angular_grad: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    potential: Callable[[np.ndarray], np.ndarray]
    potential_grad: Callable[[np.ndarray], np.ndarray]
    integrals: dict[str, Callable[[Generators], Jet]] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.model.N

    @property
    def phase_independent(self) -> bool:
        return self.angular_grad is not None

    def energy(self, c: RadialCanonicalPoint) -> np.ndarray:
        return c.p_r**2 / 2 + self.angular(c.pi, c.phi) / c.r**2 + self.potential(c.r)

    def integral_values(self, p: KleinPoint) -> dict[str, np.ndarray]:
        G = Generators(p, self.params)
        return {name: f(G).value for name, f in self.integrals.items()}


def _lookup(key: GeneratorId):
    return lambda G: G[key]


def build_system(
    kind: str,
    m: AngularModel,
    params: ModelParams | None = None,
    angular_gen: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    shifted: bool = False,
    tilde: bool = True,
) -> HamiltonianSystem:
    """Bundle one of the conformal, oscillator, Coulomb or generic systems.

    ``params.g`` must match ``m.g``; if ``params`` is omitted it is built from
    the model.  With ``shifted=True`` the g-shifted Hamiltonian and integrals
    are used (angular part ``pi^2 / 2``).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown system kind {kind!r}")
    if not m.g > 0:
        raise ValueError(G_ZERO_MESSAGE)
    params = params or ModelParams(g=m.g)
    if params.g != m.g:
        raise ValueError("model coupling and params.g differ")
    g, omega, gamma = params.g, params.omega, params.gamma
    N = m.N
    r = range(1, N)

    if kind == "generic":
        if angular_gen is None:
            raise ValueError("the generic system needs angular_gen(pi, phi)")
        return HamiltonianSystem(
            kind, m, params, shifted, None, angular_gen, None,
            potential=lambda x: np.zeros_like(x), potential_grad=lambda x: np.zeros_like(x),
        )  # fmt: skip

    if shifted:
        angular = lambda pi, phi: 0.5 * np.sum(pi, axis=-1) ** 2  # noqa: E731
        angular_grad = lambda pi, phi: np.repeat(np.sum(pi, axis=-1, keepdims=True), pi.shape[-1], axis=-1)  # noqa: E731
    else:
        angular = lambda pi, phi: 0.5 * (np.sum(pi, axis=-1) + g) ** 2  # noqa: E731
        angular_grad = lambda pi, phi: np.repeat(np.sum(pi, axis=-1, keepdims=True) + g, pi.shape[-1], axis=-1)  # noqa: E731

    if kind == "conformal":
        ham = gid("SH") if shifted else gid("H")
        potential = lambda x: np.zeros_like(x)  # noqa: E731
        potential_grad = lambda x: np.zeros_like(x)  # noqa: E731
        extra = [gid("SH_aN" if shifted else "H_aN", a) for a in r]
    elif kind == "oscillator":
        ham = gid("SHosc") if shifted else gid("Hosc")
        potential = lambda x: 0.5 * omega**2 * x**2  # noqa: E731
        potential_grad = lambda x: omega**2 * x  # noqa: E731
        extra = [gid("SM_ab" if shifted else "M_ab", a, b) for a in r for b in r]
    else:
        ham = gid("SHCoul") if shifted else gid("HCoul")
        potential = lambda x: -gamma / x  # noqa: E731
        potential_grad = lambda x: gamma / x**2  # noqa: E731
        extra = [gid("SR_a" if shifted else "R_a", a) for a in r]

    integrals = {str(ham): _lookup(ham)}
    for a in r:
        for b in r:
            key = gid("H_ab", a, b)
            integrals[str(key)] = _lookup(key)
    for key in extra:
        integrals[str(key)] = _lookup(key)
    if tilde and not shifted:
        bases = [gid("H_ab", a, b) for a in r for b in r] + [k for k in extra if k.tag in TILDE_BASES]
        for key in bases:
            t = TildeIntegral(key)
            integrals[str(t)] = lambda G, t=t: t.jet(G, m)
    return HamiltonianSystem(
        kind, m, params, shifted, _lookup(ham), angular, angular_grad, potential, potential_grad, integrals
    )
