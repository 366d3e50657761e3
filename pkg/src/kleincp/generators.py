"""Killing potentials of su(1,N) on the Klein model and the integrals built from them.

Generators are addressed by :class:`GeneratorId`.  Greek indices are 1-based
and run over ``1..N-1``; the h-basis additionally admits the index ``N``.
A trailing ``bar`` flag selects the complex conjugate, so ``H_{N conj(b)}``
is ``GeneratorId("H_aN", (b,), bar=True)``.

All closed forms are written on :class:`~kleincp.jet.Jet` objects, which gives
exact Wirtinger gradients for the bracket computations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import A_jet, DomainError, KleinPoint, coordinate_jets
from .jet import Jet

SQRT2 = np.sqrt(2.0)

#: tag -> number of indices
TAGS = {
    "h_ab": 2, "h_a": 1,
    "H": 0, "K": 0, "D": 0, "H_a": 1, "H_aN": 1, "H_ab": 2,
    "A_a": 1, "B_a": 1, "M_ab": 2, "R_a": 1, "Hosc": 0, "HCoul": 0,
    "SH": 0, "SH_aN": 1, "SA_a": 1, "SB_a": 1, "SM_ab": 2, "SR_a": 1,
    "SHosc": 0, "SHCoul": 0,
}  # fmt: skip

#: ids whose values are real on the domain (H_ab only on the diagonal)
REAL_TAGS = {"H", "K", "D", "Hosc", "HCoul", "SH", "SHosc", "SHCoul"}


@dataclass(frozen=True)
class GeneratorId:
    tag: str
    idx: tuple = ()
    bar: bool = False

    def __post_init__(self):
        if self.tag not in TAGS:
            raise KeyError(f"unknown generator {self.tag!r}")
        if len(self.idx) != TAGS[self.tag]:
            raise ValueError(f"{self.tag} takes {TAGS[self.tag]} indices, got {self.idx}")

    @property
    def is_real(self) -> bool:
        if self.tag in REAL_TAGS:
            return True
        return self.tag in ("H_ab", "h_ab") and self.idx[0] == self.idx[1]

    def conj(self) -> "GeneratorId":
        return GeneratorId(self.tag, self.idx, not self.bar)

    def __str__(self) -> str:
        s = self.tag
        if self.idx:
            s += "[" + ",".join(map(str, self.idx)) + "]"
        return s + ("*" if self.bar else "")

    @classmethod
    def parse(cls, text: str) -> "GeneratorId":
        """Parse ``"H_ab[1,2]"``, ``"H_a[1]*"`` (conjugate) or ``"K"``."""
        m = re.fullmatch(r"\s*(\w+)\s*(?:\[([\d,\s]*)\])?\s*(\*?)\s*", text)
        if not m:
            raise ValueError(f"cannot parse generator id {text!r}")
        idx = tuple(int(t) for t in m.group(2).split(",")) if m.group(2) else ()
        return cls(m.group(1), idx, bool(m.group(3)))


def gid(tag: str, *idx: int, bar: bool = False) -> GeneratorId:
    return GeneratorId(tag, tuple(idx), bar)


@dataclass(frozen=True)
class ModelParams:
    g: float = 1.0
    omega: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError(f"coupling g must be positive, got {self.g}")
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")


class Generators:
    """Lazily evaluated generator jets at a (batched) Klein point.

    Subclass and override a method to perturb a single closed form; the
    verification routines accept the class as a parameter.
    """

    def __init__(self, p: KleinPoint, params: ModelParams):
        self.p = p
        self.params = params
        self.g = params.g
        self.omega = params.omega
        self.gamma = params.gamma
        self.N = p.N
        self.w, self.z = coordinate_jets(p)
        self.A = A_jet(p, params.g)
        self._cache: dict[GeneratorId, Jet] = {}

    # -- access -------------------------------------------------------
    def __getitem__(self, key) -> Jet:
        key = as_id(key)
        if key not in self._cache:
            self._check_indices(key)
            if key.bar:
                self._cache[key] = self[key.conj()].conj()
            else:
                self._cache[key] = getattr(self, key.tag)(*key.idx)
        return self._cache[key]

    def value(self, key) -> np.ndarray:
        return self[key].value

    def _check_indices(self, key: GeneratorId) -> None:
        top = self.N if key.tag in ("h_ab", "h_a") else self.N - 1
        for i in key.idx:
            if not 1 <= i <= top:
                raise IndexError(f"index {i} out of range 1..{top} for {key}")

    def _zb(self, a: int) -> Jet:
        return self.z[a - 1].conj()

    # -- h-basis --------------------------------------------------------
    def h_ab(self, a: int, b: int) -> Jet:
        N, w, A = self.N, self.w, self.A
        if a == N and b == N:
            return (w * w.conj() + 1.0) / A
        if b == N:
            return self._zb(a) * (1.0 - 1j * w) / (SQRT2 * A)
        if a == N:
            return self[gid("h_ab", b, N)].conj()
        out = self._zb(a) * self.z[b - 1]
        if a == b:
            out = out + 0.5 * (1.0 + 1j * w) * (1.0 - 1j * w.conj())
        return out / A

    def h_a(self, a: int) -> Jet:
        w, A = self.w, self.A
        if a == self.N:
            return (1.0 + 1j * w) * (1.0 + 1j * w.conj()) / A
        return SQRT2 * self._zb(a) * (1.0 + 1j * w) / A

    # -- convenient basis -----------------------------------------------
    def H(self) -> Jet:
        return self.w * self.w.conj() / self.A

    def K(self) -> Jet:
        return self.A.reciprocal()

    def D(self) -> Jet:
        return (self.w + self.w.conj()) / self.A

    def H_a(self, a: int) -> Jet:
        return self._zb(a) / self.A

    def H_aN(self, a: int) -> Jet:
        return self._zb(a) * self.w / self.A

    def H_ab(self, a: int, b: int) -> Jet:
        return self._zb(a) * self.z[b - 1] / self.A

    def casimir_sum(self) -> Jet:
        """``sum_gamma H_{gamma conj(gamma)}``."""
        out = Jet.constant(0.0, self.A)
        for c in range(1, self.N):
            out = out + self[gid("H_ab", c, c)]
        return out

    # -- oscillator -----------------------------------------------------
    def Hosc(self) -> Jet:
        return self["H"] + self.omega**2 * self["K"]

    def A_a(self, a: int) -> Jet:
        return self[gid("H_aN", a)] + 1j * self.omega * self[gid("H_a", a)]

    def B_a(self, a: int) -> Jet:
        return self[gid("H_aN", a)] - 1j * self.omega * self[gid("H_a", a)]

    def M_ab(self, a: int, b: int) -> Jet:
        return self[gid("A_a", a)] * self[gid("B_a", b)]

    # -- Coulomb --------------------------------------------------------
    @cached_property
    def _sqrt2K(self) -> Jet:
        return (2.0 * self["K"]).sqrt()

    def HCoul(self) -> Jet:
        return self["H"] - self.gamma / self._sqrt2K

    def R_a(self, a: int) -> Jet:
        denom = (self.g + self.casimir_sum()) * self._sqrt2K
        return self[gid("H_aN", a)] + 1j * self.gamma * self[gid("H_a", a)] / denom

    # -- g-shifted systems ----------------------------------------------
    def _shift(self) -> Jet:
        return self.g * (self.g + 2.0 * self.casimir_sum()) / (4.0 * self["K"])

    def SH(self) -> Jet:
        return self["H"] - self._shift()

    def SH_aN(self, a: int) -> Jet:
        return self[gid("H_aN", a)] + 1j * self.g * self[gid("H_a", a)] / (2.0 * self["K"])

    def SA_a(self, a: int) -> Jet:
        return self[gid("SH_aN", a)] + 1j * self.omega * self[gid("H_a", a)]

    def SB_a(self, a: int) -> Jet:
        return self[gid("SH_aN", a)] - 1j * self.omega * self[gid("H_a", a)]

    def SM_ab(self, a: int, b: int) -> Jet:
        return self[gid("SA_a", a)] * self[gid("SB_a", b)]

    def SHosc(self) -> Jet:
        return self["Hosc"] - self._shift()

    def SHCoul(self) -> Jet:
        return self["HCoul"] - self._shift()

    def SR_a(self, a: int) -> Jet:
        s = self.casimir_sum()
        inner = self._sqrt2K.reciprocal() + self.gamma / ((self.g + s) * s)
        return self[gid("R_a", a)] + 1j * self.g * self[gid("H_a", a)] / self._sqrt2K * inner


def as_id(key) -> GeneratorId:
    if isinstance(key, GeneratorId):
        return key
    if isinstance(key, str):
        return GeneratorId.parse(key)
    if isinstance(key, tuple):
        return GeneratorId(key[0], tuple(key[1:]))
    raise TypeError(f"cannot interpret {key!r} as a generator id")


def evaluate(key, p: KleinPoint, params: ModelParams) -> np.ndarray:
    """Value of a single generator at ``p``."""
    return Generators(p, params).value(key)


def all_ids(N: int, include_h_basis: bool = True) -> list[GeneratorId]:
    """Every indexed id of the algebra and of the derived integrals."""
    out = []
    rng = range(1, N)
    for tag, k in TAGS.items():
        if tag in ("h_ab", "h_a"):
            if not include_h_basis:
                continue
            r = range(1, N + 1)
        else:
            r = rng
        if k == 0:
            out.append(GeneratorId(tag))
        elif k == 1:
            out.extend(GeneratorId(tag, (a,)) for a in r)
        else:
            out.extend(GeneratorId(tag, (a, b)) for a in r for b in r)
    return out


def killing_ids(N: int) -> list[GeneratorId]:
    """The su(1,N) Killing potentials: h-basis plus the convenient basis."""
    ids = [gid("H"), gid("K"), gid("D")]
    for a in range(1, N):
        ids += [gid("H_a", a), gid("H_aN", a)]
        ids += [gid("H_ab", a, b) for b in range(1, N)]
    for a in range(1, N + 1):
        ids.append(gid("h_a", a))
        ids += [gid("h_ab", a, b) for b in range(1, N + 1)]
    return ids


# ---------------------------------------------------------------------------
# dependency identities and the duality map


@dataclass
class IdentityReport:
    residuals: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def dependency_identities(p: KleinPoint, params: ModelParams, guard: float = 1e-10) -> IdentityReport:
    """Residuals of ``H = H_aN conj(H_aN) / H_aa`` (each a) and ``H_ab = H_a conj(H_b) / K``.

    The averaged form ``H = (1/2) sum_a H_aN conj(H_aN) / H_aa`` coincides with
    the per-index identity only for ``N = 3``; :func:`averaged_identity_residual`
    evaluates it separately.
    """
    G = Generators(p, params)
    rep = IdentityReport()
    for a in range(1, p.N):
        label = f"H = H_aN[{a}] H_aN[{a}]* / H_ab[{a},{a}]"
        if np.any(np.abs(p.z[..., a - 1]) < guard):
            rep.skipped.append(label)
            continue
        rhs = G.value(gid("H_aN", a)) * G.value(gid("H_aN", a, bar=True)) / G.value(gid("H_ab", a, a))
        rep.residuals[label] = float(np.max(_rel(G.value("H"), rhs)))
    for a in range(1, p.N):
        for b in range(1, p.N):
            rhs = G.value(gid("H_a", a)) * G.value(gid("H_a", b, bar=True)) / G.value("K")
            rep.residuals[f"H_ab[{a},{b}] = H_a H_b* / K"] = float(np.max(_rel(G.value(gid("H_ab", a, b)), rhs)))
    return rep


def averaged_identity_residual(p: KleinPoint, params: ModelParams) -> float:
    """Residual of ``H = (1/2) sum_a H_aN conj(H_aN) / H_aa``; zero only when ``N = 3``."""
    G = Generators(p, params)
    rhs = 0.5 * sum(
        G.value(gid("H_aN", a)) * G.value(gid("H_aN", a, bar=True)) / G.value(gid("H_ab", a, a))
        for a in range(1, p.N)
    )
    return float(np.max(_rel(G.value("H"), rhs)))


def _rel(lhs, rhs):
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))


def duality(p: KleinPoint, phase: complex = 1j) -> KleinPoint:
    """``(w, z) -> (-1/w, phase * z / w)``.

    With ``phase=1`` this is the map as usually written; it squares to
    ``(w, -z)``.  The default ``phase=1j`` is a genuine involution and differs
    only by a U(1) rotation of ``z``, which leaves ``H, K, D, H_ab`` unchanged.
    """
    return KleinPoint(-1.0 / p.w, phase * p.z / p.w[..., None])


def duality_pullbacks(N: int, phase: complex = 1j) -> list[tuple[GeneratorId, GeneratorId, complex]]:
    """``(f, h, s)`` such that ``f(duality(p, phase)) = s * h(p)``."""
    c = np.conj(phase)
    out = [(gid("H"), gid("K"), 1.0), (gid("K"), gid("H"), 1.0), (gid("D"), gid("D"), -1.0)]
    for a in range(1, N):
        out.append((gid("H_aN", a), gid("H_a", a), -c))
        out.append((gid("H_a", a), gid("H_aN", a), c))
        out += [(gid("H_ab", a, b), gid("H_ab", a, b), 1.0) for b in range(1, N)]
    return out


def duality_residuals(p: KleinPoint, params: ModelParams, phase: complex = 1j) -> dict[str, float]:
    G = Generators(p, params)
    Gd = Generators(duality(p, phase), params)
    res = {}
    for f, h, s in duality_pullbacks(p.N, phase):
        res[f"{f}(dual) = {complex(s):g} {h}"] = float(np.max(_rel(Gd.value(f), s * G.value(h))))
    back = duality(duality(p, phase), phase)
    res["dual o dual = id"] = float(np.max(np.abs(back.coords() - p.coords())))
    return res
