"""Probabilists' Hermite polynomials and exact correlated-Gaussian moments.

The exact moment path runs through sparse polynomial coefficient
extraction and stays rational; the Monte Carlo estimator is the only
floating-point route and serves as an independent cross-check.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import MatrixError, ValidationError
from .polyalg import SparsePoly, coefficient, poly_pow
from .rational import as_rational

MAX_HERMITE_DEGREE = 64
PSD_TOL = 1e-9

ZERO = Fraction(0)


def hermite_eval(j, x):
    """Monic probabilists' Hermite polynomial H_j at x (scalar or ndarray).

    Three-term recurrence: H_{j+1} = x H_j - j H_{j-1}, H_0 = 1, H_1 = x.
    """
    if j < 0 or j > MAX_HERMITE_DEGREE:
        raise ValidationError(f"Hermite degree must lie in [0, {MAX_HERMITE_DEGREE}]")
    if isinstance(x, np.ndarray):
        prev = np.ones_like(x, dtype=float)
    else:
        prev = 1.0
    if j == 0:
        return prev
    cur = x * 1.0
    for m in range(1, j):
        prev, cur = cur, x * cur - m * prev
    return cur


@dataclass(frozen=True)
class CovarianceMatrix:
    """Unit-diagonal symmetric PSD matrix with exact rational entries."""

    k: int
    entries: tuple  # tuple of tuples of Fraction

    def __post_init__(self):
        entries = tuple(
            tuple(as_rational(v, "Sigma entry") for v in row) for row in self.entries
        )
        object.__setattr__(self, "entries", entries)
        if len(entries) != self.k or any(len(r) != self.k for r in entries):
            raise ValidationError(f"Sigma must be {self.k}x{self.k}")
        for i in range(self.k):
            if entries[i][i] != 1:
                raise ValidationError(f"Sigma[{i}][{i}] = {entries[i][i]}, expected 1")
            for j in range(self.k):
                if entries[i][j] != entries[j][i]:
                    raise ValidationError("Sigma is not symmetric")
        evals = np.linalg.eigvalsh(self.as_float())
        if evals.min() < -PSD_TOL:
            raise ValidationError(
                f"Sigma is not PSD: min eigenvalue {evals.min():.3e}"
            )

    def as_float(self):
        return np.array([[float(v) for v in row] for row in self.entries])

    def v_matrix(self):
        """V = Sigma - I as rational entries."""
        return tuple(
            tuple(v - (1 if i == j else 0) for j, v in enumerate(row))
            for i, row in enumerate(self.entries)
        )

    def v_has_zero_row(self):
        V = self.v_matrix()
        return [i for i in range(self.k) if all(v == 0 for v in V[i])]

    def sqrt_factor(self):
        """Matrix L with L L^T = Sigma (numerically), for Gaussian sampling."""
        S = self.as_float()
        try:
            return np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            evals, vecs = np.linalg.eigh(S)
            if evals.min() < -PSD_TOL:
                raise MatrixError("Sigma is not PSD within tolerance") from None
            return vecs * np.sqrt(np.clip(evals, 0.0, None))

    @classmethod
    def from_offdiagonal(cls, k, rho):
        """Equicorrelated matrix: 1 on the diagonal, rho elsewhere."""
        rho = as_rational(rho, "rho")
        entries = tuple(
            tuple(Fraction(1) if i == j else rho for j in range(k)) for i in range(k)
        )
        return cls(k=k, entries=entries)


def covariance_from_distribution(d):
    """Normalized covariance: Sigma_ij = E[(X_i - p)(X_j - p)] / (p - p^2)."""
    p = d.p
    denom = p - p * p
    entries = []
    for i in range(d.k):
        row = []
        for j in range(d.k):
            row.append((d.pair_expectation(i, j) - p * p) / denom)
        entries.append(tuple(row))
    return CovarianceMatrix(k=d.k, entries=tuple(entries))


def quadratic_form_poly(V):
    """t^T V t as a sparse polynomial in t_1..t_k."""
    k = len(V)
    terms = {}
    for i in range(k):
        for j in range(k):
            if V[i][j] == 0:
                continue
            e = [0] * k
            e[i] += 1
            e[j] += 1
            e = tuple(e)
            terms[e] = terms.get(e, ZERO) + Fraction(V[i][j])
    return SparsePoly(k, terms)


def hermite_product_expectation(s, sigma):
    """Exact E[ H_{s_1}(X_1) ... H_{s_k}(X_k) ] under N(0, Sigma).

    Zero for odd total degree; otherwise (prod s_i!) / (d! 2^d) times the
    coefficient of t^s in (t^T V t)^d, with 2d the total degree.
    """
    s = tuple(int(v) for v in s)
    if len(s) != sigma.k:
        raise ValidationError("degree vector length must equal k")
    if any(v < 0 for v in s):
        raise ValidationError("degrees must be nonnegative")
    total = sum(s)
    if total % 2 == 1:
        return ZERO
    d = total // 2
    q = quadratic_form_poly(sigma.v_matrix())
    coeff = coefficient(poly_pow(q, d), s)
    if coeff == 0:
        return ZERO
    num = Fraction(1)
    for v in s:
        num *= Fraction(_factorial(v))
    return num / (Fraction(_factorial(d)) * 2**d) * coeff


def _factorial(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def gaussian_mc_moment(s, sigma, samples, seed, shards=1, chunk=200_000):
    """Seeded MC estimate of the Hermite product moment; returns (mean, stderr).

    Samples are split across `shards` with per-shard seeds seed + shard;
    the result is identical for a fixed (seed, shards).
    """
    s = tuple(int(v) for v in s)
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    L = sigma.sqrt_factor()
    per_shard = [samples // shards] * shards
    for i in range(samples % shards):
        per_shard[i] += 1
    total = 0.0
    total_sq = 0.0
    for shard, m in enumerate(per_shard):
        rng = np.random.default_rng(seed + shard)
        done = 0
        while done < m:
            batch = min(chunk, m - done)
            z = rng.standard_normal((batch, sigma.k)) @ L.T
            vals = np.ones(batch)
            for i, deg in enumerate(s):
                if deg:
                    vals *= hermite_eval(deg, z[:, i])
            total += vals.sum()
            total_sq += (vals * vals).sum()
            done += batch
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = np.sqrt(var / samples)
    return mean, float(stderr)
