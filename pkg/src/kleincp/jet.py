"""First-order Wirtinger jets.

A :class:`Jet` carries the value of a (generally non-holomorphic) function of
the complex coordinates ``u^a`` together with both Wirtinger gradients
``df/du^a`` and ``df/d(conj u^a)``.  The coordinate and its conjugate are
treated as independent variables, so products, quotients and powers propagate
exact derivatives through the closed-form expressions of the generators.

Values have an arbitrary batch shape ``S``; gradients have shape ``S + (n,)``.
"""

from __future__ import annotations

import numpy as np


def _as_array(x):
    return np.asarray(x, dtype=complex)


class Jet:
    __slots__ = ("value", "d", "db")
    __array_priority__ = 1000

    def __init__(self, value, d, db):
        self.value = _as_array(value)
        self.d = _as_array(d)
        self.db = _as_array(db)

    # -- constructors -------------------------------------------------
    @classmethod
    def variable(cls, values, index: int, n: int) -> "Jet":
        """Coordinate ``u^index`` (holomorphic) as a jet."""
        v = _as_array(values)
        d = np.zeros(v.shape + (n,), dtype=complex)
        d[..., index] = 1.0
        return cls(v, d, np.zeros_like(d))

    @classmethod
    def constant(cls, c, like: "Jet") -> "Jet":
        v = np.broadcast_to(_as_array(c), like.value.shape).copy()
        z = np.zeros_like(like.d)
        return cls(v, z, z.copy())

    @property
    def n(self) -> int:
        return self.d.shape[-1]

    def conj(self) -> "Jet":
        return Jet(np.conj(self.value), np.conj(self.db), np.conj(self.d))

    @property
    def real(self) -> "Jet":
        return (self + self.conj()) * 0.5

    @property
    def imag(self) -> "Jet":
        return (self - self.conj()) * (-0.5j)

    # -- arithmetic ---------------------------------------------------
    def _lift(self, other) -> "Jet":
        return other if isinstance(other, Jet) else Jet.constant(other, self)

    def __neg__(self):
        return Jet(-self.value, -self.d, -self.db)

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.d, self.db)
        return Jet(self.value + other.value, self.d + other.d, self.db + other.db)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = _as_array(other)
            return Jet(self.value * c, self.d * c[..., None], self.db * c[..., None])
        fv, hv = self.value[..., None], other.value[..., None]
        return Jet(
            self.value * other.value,
            self.d * hv + fv * other.d,
            self.db * hv + fv * other.db,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.value
        s = -(inv * inv)[..., None]
        return Jet(inv, self.d * s, self.db * s)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / _as_array(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        """Real power on the principal branch; integer powers are exact."""
        if isinstance(k, (int, np.integer)):
            if k == 0:
                return Jet.constant(1.0, self)
            if k < 0:
                return self.reciprocal() ** (-k)
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        v = self.value ** k
        s = (k * self.value ** (k - 1))[..., None]
        return Jet(v, self.d * s, self.db * s)

    def sqrt(self) -> "Jet":
        v = np.sqrt(self.value)
        s = (0.5 / v)[..., None]
        return Jet(v, self.d * s, self.db * s)

    def log(self) -> "Jet":
        s = (1.0 / self.value)[..., None]
        return Jet(np.log(self.value), self.d * s, self.db * s)

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r})"
