"""Truncated Taylor-series (jet) arithmetic.

A :class:`Jet` represents sum_k c_k t^k truncated at a fixed order.
Coefficients are floats or nested Jets; nesting is what makes iterated
directional derivatives (and hence nested Lie brackets) work: to
differentiate a quantity that is itself a first-order jet, evaluate it with
coefficients that are jets in a second, independent parameter.

All binary operations between two jets require equal truncation order,
which holds by construction everywhere in this package. Plain numbers are
lifted to constant jets on demand.
"""

import math


def _is_number(v):
    return isinstance(v, (int, float))


def _zero_like(exemplar):
    return lift(0.0, exemplar)


def lift(value, exemplar):
    """Embed the constant `value` into the coefficient ring of `exemplar`."""
    if isinstance(exemplar, Jet):
        c0 = exemplar.coeffs[0]
        rest = len(exemplar.coeffs) - 1
        return Jet([lift(value, c0)] + [_zero_like(c0)] * rest)
    return float(value)


class Jet:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = tuple(coeffs)
        if not self.coeffs:
            raise ValueError("jet needs at least one coefficient")

    @property
    def order(self):
        return len(self.coeffs) - 1

    def __repr__(self):
        return "Jet(%s)" % (list(self.coeffs),)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet([a + b for a, b in zip(self.coeffs, other.coeffs)])
        if _is_number(other):
            cs = list(self.coeffs)
            cs[0] = cs[0] + float(other)
            return Jet(cs)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet([-c for c in self.coeffs])

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet([a - b for a, b in zip(self.coeffs, other.coeffs)])
        if _is_number(other):
            cs = list(self.coeffs)
            cs[0] = cs[0] - float(other)
            return Jet(cs)
        return NotImplemented

    def __rsub__(self, other):
        if _is_number(other):
            return (-self) + float(other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self.coeffs, other.coeffs
            out = []
            for k in range(len(a)):
                s = a[0] * b[k]
                for j in range(1, k + 1):
                    s = s + a[j] * b[k - j]
                out.append(s)
            return Jet(out)
        if _is_number(other):
            f = float(other)
            return Jet([c * f for c in self.coeffs])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_number(other):
            return self * (1.0 / float(other))
        if isinstance(other, Jet):
            p, q = self.coeffs, other.coeffs
            d = [p[0] / q[0]]
            for k in range(1, len(p)):
                acc = p[k]
                for j in range(k):
                    acc = acc - d[j] * q[k - j]
                d.append(acc / q[0])
            return Jet(d)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_number(other):
            return lift(other, self) / self
        return NotImplemented


# -- elementary functions (work on numbers and jets alike) ------------------


def jexp(u):
    if _is_number(u):
        return math.exp(u)
    cs = u.coeffs
    e = [jexp(cs[0])]
    for k in range(1, len(cs)):
        acc = cs[1] * e[k - 1]
        for j in range(2, k + 1):
            acc = acc + (cs[j] * e[k - j]) * float(j)
        e.append(acc * (1.0 / k))
    return Jet(e)


def _sincos(u):
    cs = u.coeffs
    s = [jsin(cs[0])]
    c = [jcos(cs[0])]
    for k in range(1, len(cs)):
        sa = cs[1] * c[k - 1]
        ca = cs[1] * s[k - 1]
        for j in range(2, k + 1):
            sa = sa + (cs[j] * c[k - j]) * float(j)
            ca = ca + (cs[j] * s[k - j]) * float(j)
        s.append(sa * (1.0 / k))
        c.append(ca * (-1.0 / k))
    return Jet(s), Jet(c)


def jsin(u):
    if _is_number(u):
        return math.sin(u)
    return _sincos(u)[0]


def jcos(u):
    if _is_number(u):
        return math.cos(u)
    return _sincos(u)[1]


def jpow(u, p):
    """Integer power by repeated squaring; negative powers via reciprocal."""
    if not isinstance(p, int):
        raise ValueError("jet powers must have integer exponents")
    if _is_number(u):
        return float(u) ** p
    if p == 0:
        return lift(1.0, u)
    if p < 0:
        return lift(1.0, u) / jpow(u, -p)
    acc = None
    base = u
    n = p
    while n:
        if n & 1:
            acc = base if acc is None else acc * base
        n >>= 1
        if n:
            base = base * base
    return acc


# -- extraction helpers ------------------------------------------------------


def coeff(w, k):
    """k-th Taylor coefficient of `w`; plain numbers are constant jets."""
    if isinstance(w, Jet):
        return w.coeffs[k]
    return float(w) if k == 0 else 0.0


def magnitude(w):
    """Largest absolute value among all (nested) coefficients of `w`."""
    if isinstance(w, Jet):
        return max(magnitude(c) for c in w.coeffs)
    return abs(w)
