"""Poisson structure of the Klein model.

Two independent routes to ``{f, h}`` are provided:

* ``path="chain"`` contracts Wirtinger gradients with the fundamental
  coordinate brackets ``{w, conj w} = -A(w - conj w)``,
  ``{w, conj z^a} = A conj z^a``, ``{z^a, conj z^b} = i A delta``;
* ``path="metric"`` uses ``{z^a, conj z^b} = i g^{conj(b) a}`` with the
  numerically inverted Kähler metric.

Either route serves as the oracle for the other.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .generators import Generators, GeneratorId, ModelParams, gid
from .geometry import A_FLOOR, ConditioningError, KleinPoint, factor_A, metric
from .jet import Jet

# ---------------------------------------------------------------------------
# fundamental brackets


def poisson_tensor(p: KleinPoint, g: float, path: str = "chain") -> np.ndarray:
    """``P[..., a, b] = {u^a, conj u^b}`` with ``u = (w, z^1, ..., z^{N-1})``."""
    if path == "metric":
        G = metric(p, g)
        A = factor_A(p, g)
        if np.any(A < A_FLOOR):
            raise ConditioningError("metric inversion too close to the boundary")
        return 1j * np.swapaxes(np.linalg.inv(G), -1, -2)
    if path != "chain":
        raise ValueError(f"unknown bracket path {path!r}")
    A = factor_A(p, g)
    N = p.N
    P = np.zeros(p.shape + (N, N), dtype=complex)
    P[..., 0, 0] = -A * (p.w - np.conj(p.w))
    P[..., 0, 1:] = A[..., None] * np.conj(p.z)
    P[..., 1:, 0] = -A[..., None] * p.z
    P[..., 1:, 1:] = 1j * A[..., None, None] * np.eye(N - 1)
    return P


_LABEL = re.compile(r"(w|wbar|z(\d+)|zbar(\d+))")


def _parse_label(label: str, N: int) -> tuple[int, bool]:
    m = _LABEL.fullmatch(label)
    if not m:
        raise KeyError(f"unknown coordinate label {label!r}")
    if label in ("w", "wbar"):
        return 0, label == "wbar"
    k = int(m.group(2) or m.group(3))
    if not 1 <= k <= N - 1:
        raise KeyError(f"coordinate {label!r} out of range for N={N}")
    return k, m.group(3) is not None


def fundamental_bracket(p: KleinPoint, g: float, a: str, b: str) -> np.ndarray:
    """Bracket of two coordinate labels (``w``, ``wbar``, ``z1``, ``zbar1``, ...)."""
    ia, bar_a = _parse_label(a, p.N)
    ib, bar_b = _parse_label(b, p.N)
    if bar_a == bar_b:
        return np.zeros(p.shape, dtype=complex)
    P = poisson_tensor(p, g)
    if not bar_a:
        return P[..., ia, ib]
    # {conj u^a, u^b} = -{u^b, conj u^a}
    return -P[..., ib, ia]


# ---------------------------------------------------------------------------
# brackets of scalar fields


def contract(f: Jet, h: Jet, P: np.ndarray) -> np.ndarray:
    """``sum_ab P^{a conj b} (d_a f dbar_b h - dbar_b f d_a h)``."""
    # one product per term keeps {f, f} exactly zero and {f, h} exactly antisymmetric
    return np.einsum("...ab,...ab->...", P, f.d[..., :, None] * h.db[..., None, :] - h.d[..., :, None] * f.db[..., None, :])


def bracket(f, h, p: KleinPoint, g: float, path: str = "metric") -> np.ndarray:
    """``{f, h}`` at ``p``; ``f`` and ``h`` are jets or callables returning jets."""
    if callable(f):
        f = f(p)
    if callable(h):
        h = h(p)
    return contract(f, h, poisson_tensor(p, g, path))


@dataclass(frozen=True)
class VectorField:
    """Holomorphic components ``V^a`` (with ``u = (w, z)``); the antiholomorphic part is ``conj V``."""

    components: np.ndarray

    @property
    def antiholomorphic(self) -> np.ndarray:
        return np.conj(self.components)


def hamiltonian_vector_field(h, p: KleinPoint, g: float, path: str = "metric") -> VectorField:
    """``V^a = i g^{conj(b) a} dbar_b h = {u^a, h}``: the velocity of the h-flow."""
    if callable(h):
        h = h(p)
    P = poisson_tensor(p, g, path)
    return VectorField(np.einsum("...ab,...b->...a", P, h.db))


# ---------------------------------------------------------------------------
# relation tables


@dataclass(frozen=True)
class Relation:
    """``{left, right} = rhs(G)``; ``rhs`` returns a jet or an array."""

    label: str
    left: GeneratorId
    right: GeneratorId
    rhs: Callable[[Generators], object]


@dataclass
class AlgebraReport:
    tol: float
    residuals: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.residuals.items() if not v < self.tol}

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def merge(self, other: "AlgebraReport", prefix: str = "") -> None:
        for k, v in other.residuals.items():
            self.residuals[prefix + k] = max(v, self.residuals.get(prefix + k, 0.0))
        self.notes.extend(other.notes)

    def as_dict(self) -> dict:
        return {
            "tol": self.tol,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "relations": [
                {"label": k, "residual": v, "passed": v < self.tol} for k, v in self.residuals.items()
            ],
            "notes": list(self.notes),
        }


def residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Absolute where ``|rhs| < 1``, relative otherwise; max over the batch."""
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs)), initial=0.0))


def _val(x) -> np.ndarray:
    return x.value if isinstance(x, Jet) else np.asarray(x)


def check_relations(
    relations: list[Relation],
    p: KleinPoint,
    params: ModelParams,
    tol: float,
    generators: type[Generators] = Generators,
    path: str = "chain",
) -> AlgebraReport:
    G = generators(p, params)
    P = poisson_tensor(p, params.g, path)
    rep = AlgebraReport(tol)
    for rel in relations:
        lhs = contract(G[rel.left], G[rel.right], P)
        rep.residuals[rel.label] = residual(lhs, _val(rel.rhs(G)))
    return rep


def _d(a, b) -> float:
    return 1.0 if a == b else 0.0


def conformal_relations() -> list[Relation]:
    return [
        Relation("{H,K} = -D", gid("H"), gid("K"), lambda G: -G["D"]),
        Relation("{H,D} = -2H", gid("H"), gid("D"), lambda G: -2.0 * G["H"]),
        Relation("{K,D} = 2K", gid("K"), gid("D"), lambda G: 2.0 * G["K"]),
    ]


def su1n_relations(N: int) -> list[Relation]:
    """The su(1,N) relations in the (H, K, D, H_a, H_aN, H_ab) basis."""
    R = conformal_relations()
    r = range(1, N)
    H, K, D = gid("H"), gid("K"), gid("D")
    for a in r:
        Ha, HaN = gid("H_a", a), gid("H_aN", a)
        R += [
            Relation(f"{{H,H_a[{a}]}} = -H_aN", H, Ha, lambda G, a=a: -G[gid("H_aN", a)]),
            Relation(f"{{H,H_aN[{a}]}} = 0", H, HaN, lambda G: 0.0),
            Relation(f"{{K,H_aN[{a}]}} = H_a", K, HaN, lambda G, a=a: G[gid("H_a", a)]),
            Relation(f"{{K,H_a[{a}]}} = 0", K, Ha, lambda G: 0.0),
            Relation(f"{{D,H_a[{a}]}} = -H_a", D, Ha, lambda G, a=a: -G[gid("H_a", a)]),
            Relation(f"{{D,H_aN[{a}]}} = H_aN", D, HaN, lambda G, a=a: G[gid("H_aN", a)]),
        ]
        for b in r:
            Hab = gid("H_ab", a, b)
            R += [
                Relation(f"{{H,H_ab[{a},{b}]}} = 0", H, Hab, lambda G: 0.0),
                Relation(f"{{K,H_ab[{a},{b}]}} = 0", K, Hab, lambda G: 0.0),
                Relation(f"{{D,H_ab[{a},{b}]}} = 0", D, Hab, lambda G: 0.0),
                Relation(f"{{H_a[{a}],H_a[{b}]}} = 0", Ha, gid("H_a", b), lambda G: 0.0),
                Relation(f"{{H_aN[{a}],H_aN[{b}]}} = 0", HaN, gid("H_aN", b), lambda G: 0.0),
                Relation(f"{{H_a[{a}],H_aN[{b}]}} = 0", Ha, gid("H_aN", b), lambda G: 0.0),
                Relation(
                    f"{{H_a[{a}],H_a[{b}]*}} = -iK delta",
                    Ha, gid("H_a", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b) * G["K"],
                ),
                Relation(
                    f"{{H_aN[{a}],H_aN[{b}]*}} = -iH delta",
                    HaN, gid("H_aN", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b) * G["H"],
                ),
                Relation(
                    f"{{H_a[{a}],H_aN[{b}]*}} = H_ab + (g + sum H_cc - iD) delta / 2",
                    Ha, gid("H_aN", b, bar=True),
                    lambda G, a=a, b=b: G[gid("H_ab", a, b)]
                    + 0.5 * _d(a, b) * (G.g + G.casimir_sum() - 1j * G["D"]),
                ),
            ]  # fmt: skip
            for c in r:
                R += [
                    Relation(
                        f"{{H_a[{a}],H_ab[{b},{c}]}} = -i H_b delta_ac",
                        Ha, gid("H_ab", b, c),
                        lambda G, a=a, b=b, c=c: -1j * _d(a, c) * G[gid("H_a", b)],
                    ),
                    Relation(
                        f"{{H_aN[{a}],H_ab[{b},{c}]}} = -i H_bN delta_ac",
                        HaN, gid("H_ab", b, c),
                        lambda G, a=a, b=b, c=c: -1j * _d(a, c) * G[gid("H_aN", b)],
                    ),
                ]  # fmt: skip
                for d in r:
                    R.append(
                        Relation(
                            f"{{H_ab[{a},{b}],H_ab[{c},{d}]}} = i(H_ad delta_cb - H_cb delta_ad)",
                            Hab, gid("H_ab", c, d),
                            lambda G, a=a, b=b, c=c, d=d: 1j
                            * (_d(c, b) * G[gid("H_ab", a, d)] - _d(a, d) * G[gid("H_ab", c, b)]),
                        )
                    )  # fmt: skip
    return R


def h_basis_relations(N: int) -> list[Relation]:
    """su(1,N) relations of the h-basis (indices ``1..N``)."""
    R = []
    r = range(1, N + 1)
    for a in r:
        for b in r:
            R.append(Relation(f"{{h_a[{a}],h_a[{b}]}} = 0", gid("h_a", a), gid("h_a", b), lambda G: 0.0))
            R.append(
                Relation(
                    f"{{h_a[{a}],h_a[{b}]*}} = -4i h_ab",
                    gid("h_a", a), gid("h_a", b, bar=True),
                    lambda G, a=a, b=b: -4j * G[gid("h_ab", a, b)],
                )
            )  # fmt: skip
            for c in r:
                R.append(
                    Relation(
                        f"{{h_a[{a}],h_ab[{b},{c}]}} = -i(d_ac h_b + d_bc h_a)",
                        gid("h_a", a), gid("h_ab", b, c),
                        lambda G, a=a, b=b, c=c: -1j
                        * (_d(a, c) * G[gid("h_a", b)] + _d(b, c) * G[gid("h_a", a)]),
                    )
                )  # fmt: skip
                for d in r:
                    R.append(
                        Relation(
                            f"{{h_ab[{a},{b}],h_ab[{c},{d}]}} = -i(d_ad h_cb - d_bc h_ad)",
                            gid("h_ab", a, b), gid("h_ab", c, d),
                            lambda G, a=a, b=b, c=c, d=d: -1j
                            * (_d(a, d) * G[gid("h_ab", c, b)] - _d(b, c) * G[gid("h_ab", a, d)]),
                        )
                    )  # fmt: skip
    return R


def verify_structure_constants(
    N: int,
    g: float,
    samples: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
    generators: type[Generators] = Generators,
    path: str = "chain",
) -> AlgebraReport:
    """Evaluate every su(1,N) relation at random domain points.

    For ``N = 1`` only the conformal triple is checked.
    """
    from .geometry import sample_points

    rng = np.random.default_rng(seed)
    p = sample_points(N, samples, rng)
    params = ModelParams(g=g)
    if N == 1:
        rels = conformal_relations()
        rep = check_relations(rels, p, params, tol, generators, path)
        rep.notes.append("N=1: only the conformal triple {H,K,D} is checked")
        return rep
    rels = su1n_relations(N) + h_basis_relations(N)
    return check_relations(rels, p, params, tol, generators, path)


# ---------------------------------------------------------------------------
# oscillator, Coulomb and g-shifted systems


def oscillator_relations(N: int) -> list[Relation]:
    r = range(1, N)
    Hosc = gid("Hosc")
    R = []
    for a in r:
        A, B = gid("A_a", a), gid("B_a", a)
        R += [
            Relation(f"{{Hosc,A[{a}]}} = -i w A", Hosc, A, lambda G, a=a: -1j * G.omega * G[gid("A_a", a)]),
            Relation(f"{{Hosc,B[{a}]}} = i w B", Hosc, B, lambda G, a=a: 1j * G.omega * G[gid("B_a", a)]),
        ]
        for b in r:
            R += [
                Relation(f"{{Hosc,H_ab[{a},{b}]}} = 0", Hosc, gid("H_ab", a, b), lambda G: 0.0),
                Relation(f"{{Hosc,M[{a},{b}]}} = 0", Hosc, gid("M_ab", a, b), lambda G: 0.0),
                Relation(
                    f"{{A[{a}],A[{b}]*}} = -i(Hosc - w(g+S)) d + 2iw H_ab",
                    A, gid("A_a", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b) * (G["Hosc"] - G.omega * (G.g + G.casimir_sum()))
                    + 2j * G.omega * G[gid("H_ab", a, b)],
                ),
                Relation(
                    f"{{B[{a}],B[{b}]*}} = -i(Hosc + w(g+S)) d - 2iw H_ab",
                    B, gid("B_a", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b) * (G["Hosc"] + G.omega * (G.g + G.casimir_sum()))
                    - 2j * G.omega * G[gid("H_ab", a, b)],
                ),
                Relation(
                    f"{{A[{a}],B[{b}]*}} = -i d (Hosc - 2w^2 K + iwD)",
                    A, gid("B_a", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b)
                    * (G["Hosc"] - 2.0 * G.omega**2 * G["K"] + 1j * G.omega * G["D"]),
                ),
            ]  # fmt: skip
            for c in r:
                R += [
                    Relation(
                        f"{{A[{a}],H_ab[{b},{c}]}} = -i d_ac A_b", A, gid("H_ab", b, c),
                        lambda G, a=a, b=b, c=c: -1j * _d(a, c) * G[gid("A_a", b)],
                    ),
                    Relation(
                        f"{{B[{a}],H_ab[{b},{c}]}} = -i d_ac B_b", B, gid("H_ab", b, c),
                        lambda G, a=a, b=b, c=c: -1j * _d(a, c) * G[gid("B_a", b)],
                    ),
                ]  # fmt: skip
                for d in r:
                    R += [
                        Relation(
                            f"{{H_ab[{a},{b}],M[{c},{d}]}} = i d_bc M_ad + i d_bd M_ca",
                            gid("H_ab", a, b), gid("M_ab", c, d),
                            lambda G, a=a, b=b, c=c, d=d: 1j * _d(b, c) * G[gid("M_ab", a, d)]
                            + 1j * _d(b, d) * G[gid("M_ab", c, a)],
                        ),
                        Relation(
                            f"{{M[{a},{b}],M[{c},{d}]}} = 0",
                            gid("M_ab", a, b), gid("M_ab", c, d), lambda G: 0.0,
                        ),
                    ]  # fmt: skip
    return R


def coulomb_relations(N: int) -> list[Relation]:
    r = range(1, N)
    HC = gid("HCoul")
    R = []

    def pi_total(G):
        return G.g + G.casimir_sum()

    for a in r:
        Ra = gid("R_a", a)
        R.append(Relation(f"{{HCoul,R[{a}]}} = 0", HC, Ra, lambda G: 0.0))
        for b in r:
            R += [
                Relation(f"{{HCoul,H_ab[{a},{b}]}} = 0", HC, gid("H_ab", a, b), lambda G: 0.0),
                Relation(f"{{R[{a}],R[{b}]}} = 0", Ra, gid("R_a", b), lambda G: 0.0),
                Relation(
                    f"{{R[{a}],R[{b}]*}} = -i d (HCoul + y^2/(2P^2)) + i y^2 H_ab / P^3",
                    Ra, gid("R_a", b, bar=True),
                    lambda G, a=a, b=b: -1j * _d(a, b) * (G["HCoul"] + G.gamma**2 / (2.0 * pi_total(G) ** 2))
                    + 1j * G.gamma**2 * G[gid("H_ab", a, b)] / pi_total(G) ** 3,
                ),
            ]  # fmt: skip
            for c in r:
                R.append(
                    Relation(
                        f"{{H_ab[{a},{b}],R[{c}]}} = i d_cb R_a", gid("H_ab", a, b), gid("R_a", c),
                        lambda G, a=a, b=b, c=c: 1j * _d(c, b) * G[gid("R_a", a)],
                    )
                )  # fmt: skip
    return R


def shifted_relations(N: int) -> list[Relation]:
    r = range(1, N)
    R = []
    for a in r:
        R += [
            Relation(f"{{SH,SH_aN[{a}]}} = 0", gid("SH"), gid("SH_aN", a), lambda G: 0.0),
            Relation(f"{{SHCoul,SR[{a}]}} = 0", gid("SHCoul"), gid("SR_a", a), lambda G: 0.0),
        ]
        for b in r:
            R += [
                Relation(f"{{SH,H_ab[{a},{b}]}} = 0", gid("SH"), gid("H_ab", a, b), lambda G: 0.0),
                Relation(f"{{SHosc,H_ab[{a},{b}]}} = 0", gid("SHosc"), gid("H_ab", a, b), lambda G: 0.0),
                Relation(f"{{SHosc,SA[{a}]SB[{b}]}} = 0", gid("SHosc"), gid("SM_ab", a, b), lambda G: 0.0),
                Relation(f"{{SHCoul,H_ab[{a},{b}]}} = 0", gid("SHCoul"), gid("H_ab", a, b), lambda G: 0.0),
            ]
    return R


def _sampled_check(relations, N, params, samples, seed, tol, generators, path="chain"):
    from .geometry import sample_points

    if N < 2:
        raise ValueError("this algebra needs N >= 2")
    p = sample_points(N, samples, np.random.default_rng(seed))
    return check_relations(relations, p, params, tol, generators, path)


def oscillator_algebra_check(N, params, samples=100, seed=0, tol=1e-9, generators=Generators):
    return _sampled_check(oscillator_relations(N), N, params, samples, seed, tol, generators)


def coulomb_algebra_check(N, params, samples=100, seed=0, tol=1e-9, generators=Generators):
    return _sampled_check(coulomb_relations(N), N, params, samples, seed, tol, generators)


def shifted_system_check(N, params, samples=100, seed=0, tol=1e-9, generators=Generators):
    return _sampled_check(shifted_relations(N), N, params, samples, seed, tol, generators)
