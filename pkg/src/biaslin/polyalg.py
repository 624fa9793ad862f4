"""Sparse multivariate polynomials over the rationals.

Exponent vectors are dense fixed-length tuples; only nonzero terms are
stored.  Everything here is exact, immutable, and pure.
"""

import itertools
from fractions import Fraction

from .errors import InvalidArityError, ValidationError

MAX_SYM_VARS = 10  # k! permutations are enumerated

ZERO = Fraction(0)


class SparsePoly:
    """Polynomial in `nvars` variables; terms map exponent tuples to coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        if nvars < 1:
            raise InvalidArityError("nvars must be positive")
        self.nvars = nvars
        clean = {}
        for expo, coeff in (terms or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != nvars or any(e < 0 for e in expo):
                raise ValidationError(f"bad exponent vector {expo} for nvars={nvars}")
            coeff = Fraction(coeff)
            if coeff != 0:
                clean[expo] = clean.get(expo, ZERO) + coeff
        self.terms = {e: c for e, c in clean.items() if c != 0}

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: Fraction(value)})

    @classmethod
    def variable(cls, nvars, i):
        expo = [0] * nvars
        expo[i] = 1
        return cls(nvars, {tuple(expo): Fraction(1)})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (
            isinstance(other, SparsePoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"SparsePoly(nvars={self.nvars}, terms={len(self.terms)})"

    def _check_same(self, other):
        if self.nvars != other.nvars:
            raise ValidationError("nvars mismatch")

    def __add__(self, other):
        self._check_same(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, ZERO) + c
        return SparsePoly(self.nvars, terms)

    def __neg__(self):
        return SparsePoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return SparsePoly(
                self.nvars, {e: c * other for e, c in self.terms.items()}
            )
        self._check_same(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, ZERO) + c1 * c2
        return SparsePoly(self.nvars, terms)

    __rmul__ = __mul__

    def deriv(self, i):
        terms = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                ne = list(e)
                ne[i] -= 1
                terms[tuple(ne)] = c * e[i]
        return SparsePoly(self.nvars, terms)

    def permute(self, pi):
        """Returns g with g(x) = f(x_pi), where (x_pi)_i = x_{pi(i)}."""
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * self.nvars
            for i in range(self.nvars):
                ne[pi[i]] = e[i]
            ne = tuple(ne)
            terms[ne] = terms.get(ne, ZERO) + c
        return SparsePoly(self.nvars, terms)

    def evaluate(self, point):
        if len(point) != self.nvars:
            raise ValidationError("point has wrong dimension")
        total = ZERO
        for e, c in self.terms.items():
            v = c
            for x, p in zip(point, e):
                if p:
                    v *= Fraction(x) ** p
            total += v
        return total


def poly_pow(q, d):
    """q**d by repeated sparse multiplication."""
    if d < 0:
        raise ValidationError("exponent must be nonnegative")
    result = SparsePoly.constant(q.nvars, 1)
    for _ in range(d):
        result = result * q
    return result


def symmetrize(f):
    """Sum of f over all coordinate permutations (no normalization)."""
    k = f.nvars
    if k > MAX_SYM_VARS:
        raise InvalidArityError(f"symmetrize is limited to {MAX_SYM_VARS} variables")
    terms = {}
    for pi in itertools.permutations(range(k)):
        for e, c in f.terms.items():
            ne = tuple(e[pi[i]] for i in range(k))
            terms[ne] = terms.get(ne, ZERO) + c
    return SparsePoly(k, terms)


def coefficient(f, s):
    """Coefficient of the monomial with exponent vector s (zero if absent)."""
    s = tuple(int(v) for v in s)
    if len(s) != f.nvars:
        raise ValidationError("exponent vector has wrong length")
    return f.terms.get(s, ZERO)


def find_all_coordinates_monomial(q, d_max=12):
    """Smallest d <= d_max with a monomial of Sym(q^d) touching every variable.

    Returns (d, s) with every s_i >= 1 and a nonzero symmetrized
    coefficient, scanning d upward and s lexicographically; None if the
    scan is exhausted.  Requires q to depend on every variable.
    """
    k = q.nvars
    for i in range(k):
        if q.deriv(i).is_zero():
            raise ValidationError(
                f"q has identically-zero partial derivative in variable {i + 1}"
            )
    power = SparsePoly.constant(k, 1)
    for d in range(1, d_max + 1):
        power = power * q
        sym = symmetrize(power)
        candidates = [s for s in sym.terms if all(e >= 1 for e in s)]
        if candidates:
            return d, min(candidates)
    return None
