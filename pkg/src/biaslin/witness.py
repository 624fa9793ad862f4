"""Counterexample pipeline: Gaussian witness, truncation, CLT embedding, rounding.

Starting from a correlated Gaussian whose covariance comes from a
distribution with no pairwise independent coordinate, build a mean-zero
function of one variable with a nonvanishing k-fold product moment, push
it onto the cube through the normalized coordinate sum, and round to
+-1 values with a keyed hash.
"""

import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.stats import norm

from .cube import RANGE_INTERVAL, RANGE_SIGNS, HandleFunction, sample_biased_bits
from .errors import (
    ConvergenceError,
    NotFoundError,
    PairwiseIndependenceError,
    ValidationError,
)
from .hermite import (
    covariance_from_distribution,
    hermite_product_expectation,
    quadratic_form_poly,
)
from .polyalg import find_all_coordinates_monomial
from .rational import as_rational, format_rational

ZERO = Fraction(0)

ALPHA_RANGE = 3  # candidate coefficients drawn from {-3..3}^k \ {0}
MAX_ALPHA_RETRIES = 100
MAX_TRUNCATION_DOUBLINGS = 20


def derive_seed(seed, component):
    """Stable per-component sub-seed so one flag reproduces a whole run."""
    digest = hashlib.blake2b(
        component.encode(), key=int(seed).to_bytes(8, "big", signed=False), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") % (2**63)


def hermite_coefficients(j):
    """Integer monomial coefficients of H_j, lowest degree first."""
    prev = [1]
    if j == 0:
        return prev
    cur = [0, 1]
    for m in range(1, j):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= m * c
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class HermiteWitness:
    """Mean-zero univariate polynomial with nonzero k-fold product moment."""

    s: tuple  # degree vector, all entries >= 1
    alpha: tuple  # rational coefficient vector, length k
    product_moment: Fraction

    def __post_init__(self):
        if any(v < 1 for v in self.s):
            raise ValidationError("all witness degrees must be >= 1")
        if self.product_moment == 0:
            raise ValidationError("witness product moment must be nonzero")

    def coefficients(self):
        """Rational monomial coefficients of f = sum_j alpha_j H_{s_j}."""
        deg = max(self.s)
        coeffs = [ZERO] * (deg + 1)
        for a, sj in zip(self.alpha, self.s):
            if a == 0:
                continue
            for i, c in enumerate(hermite_coefficients(sj)):
                coeffs[i] += a * c
        return coeffs

    def poly_eval(self, x):
        c = np.array([float(v) for v in self.coefficients()])
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)


@dataclass(frozen=True)
class BoundedWitnessFunction:
    """h = (clamp(f, +-M) - center) / (2M): range [-1,1], Gaussian mean 0."""

    base: HermiteWitness
    M: float
    center: float
    lipschitz_note: str

    def __call__(self, x):
        clipped = np.clip(self.base.poly_eval(x), -self.M, self.M)
        return (clipped - self.center) / (2.0 * self.M)


def _moment_of_alpha(s, sigma, alpha, cache):
    """Exact E[prod_i f_{s,alpha}(X_i)] by multilinear expansion."""
    k = sigma.k
    total = ZERO
    for assign in np.ndindex(*([k] * k)):
        coeff = Fraction(1)
        for j in assign:
            coeff *= alpha[j]
            if coeff == 0:
                break
        if coeff == 0:
            continue
        degs = tuple(s[j] for j in assign)
        if degs not in cache:
            cache[degs] = hermite_product_expectation(degs, sigma)
        total += coeff * cache[degs]
    return total


def find_hermite_witness(sigma, d_max=12, seed=0, alpha=None):
    """Locate (s, alpha) with every degree >= 1 and a nonzero product moment.

    Fails with PairwiseIndependenceError when V = Sigma - I has a zero row:
    that coordinate is independent of the rest and no witness can exist.
    """
    zero_rows = sigma.v_has_zero_row()
    if zero_rows:
        raise PairwiseIndependenceError(
            f"coordinate {zero_rows[0] + 1} is independent of the rest "
            "(zero row in Sigma - I); the construction must fail"
        )
    q = quadratic_form_poly(sigma.v_matrix())
    found = find_all_coordinates_monomial(q, d_max=d_max)
    if found is None:
        raise NotFoundError(
            f"no all-coordinates monomial in Sym(q^d) for d <= {d_max}"
        )
    _, s = found
    cache = {}
    if alpha is not None:
        alpha = tuple(as_rational(a, "alpha") for a in alpha)
        if len(alpha) != sigma.k:
            raise ValidationError("alpha must have length k")
        moment = _moment_of_alpha(s, sigma, alpha, cache)
        if moment == 0:
            raise NotFoundError("forced alpha gives a zero product moment")
        return HermiteWitness(s=s, alpha=alpha, product_moment=moment)
    rng = random.Random(seed)
    for _ in range(MAX_ALPHA_RETRIES):
        cand = tuple(
            Fraction(rng.randint(-ALPHA_RANGE, ALPHA_RANGE)) for _ in range(sigma.k)
        )
        if all(a == 0 for a in cand):
            continue
        moment = _moment_of_alpha(s, sigma, cand, cache)
        if moment != 0:
            return HermiteWitness(s=s, alpha=cand, product_moment=moment)
    raise NotFoundError("alpha search exhausted without a nonzero moment")


# -- truncation --------------------------------------------------------


def _gaussian_poly_segment_integral(coeffs, a, b):
    """integral over [a,b] of (sum_i coeffs[i] x^i) phi(x) dx, closed form.

    Uses I_0 = Phi(b) - Phi(a), I_1 = phi(a) - phi(b),
    I_m = [-(x^(m-1)) phi(x)]_a^b + (m-1) I_(m-2).
    """

    def phi(x):
        return 0.0 if np.isinf(x) else float(norm.pdf(x))

    def xpow_phi(x, m):
        return 0.0 if np.isinf(x) else float(x**m * norm.pdf(x))

    deg = len(coeffs) - 1
    I = [0.0] * (deg + 1)
    I[0] = float(norm.cdf(b) - norm.cdf(a))
    if deg >= 1:
        I[1] = phi(a) - phi(b)
    for m in range(2, deg + 1):
        I[m] = (xpow_phi(a, m - 1) - xpow_phi(b, m - 1)) + (m - 1) * I[m - 2]
    return sum(c * I[m] for m, c in enumerate(coeffs))


def gaussian_mean_clamped(witness, M):
    """E_{N(0,1)}[clamp(f, +-M)] by exact segment-wise integration.

    Splits the line at the clamp crossings; clamped tails integrate in
    closed form through the normal CDF, interior pieces through moment
    recurrences, so the result is accurate to machine precision.
    """
    coeffs = [float(v) for v in witness.coefficients()]
    deg = len(coeffs) - 1
    while deg > 0 and coeffs[deg] == 0.0:
        deg -= 1
    coeffs = coeffs[: deg + 1]
    if deg == 0:
        return float(np.clip(coeffs[0], -M, M))
    crossings = []
    for shift in (-M, M):
        c = list(coeffs)
        c[0] -= shift
        roots = np.polynomial.polynomial.polyroots(c)
        crossings.extend(r.real for r in roots if abs(r.imag) < 1e-9)
    points = [-np.inf] + sorted(crossings) + [np.inf]
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        if b - a < 1e-14:
            continue
        if np.isinf(a) and np.isinf(b):
            mid = 0.0
        elif np.isinf(a):
            mid = b - 1.0
        elif np.isinf(b):
            mid = a + 1.0
        else:
            mid = (a + b) / 2.0
        val = float(np.polynomial.polynomial.polyval(mid, coeffs))
        if val > M:
            total += M * float(norm.cdf(b) - norm.cdf(a))
        elif val < -M:
            total += -M * float(norm.cdf(b) - norm.cdf(a))
        else:
            total += _gaussian_poly_segment_integral(coeffs, a, b)
    return total


def truncate_and_center(witness, M):
    """Clamp to [-M, M], subtract the Gaussian mean, rescale into [-1, 1]."""
    if M <= 0:
        raise ValidationError("truncation level M must be positive")
    center = gaussian_mean_clamped(witness, float(M))
    coeffs = [float(v) for v in witness.coefficients()]
    dcoeffs = [m * c for m, c in enumerate(coeffs)][1:]
    grid = np.linspace(-12.0, 12.0, 4001)
    K = float(
        np.abs(np.polynomial.polynomial.polyval(grid, dcoeffs or [0.0])).max()
        / (2.0 * M)
    )
    note = (
        f"numerical bound max|f'| / (2M) <= {K:.6g} on [-12, 12]; "
        "the clamp only lowers the slope"
    )
    return BoundedWitnessFunction(
        base=witness, M=float(M), center=center, lipschitz_note=note
    )


def _gaussian_product_mc(h, sigma, samples, seed, chunk=200_000):
    """MC estimate of E_{N(0,Sigma)}[prod_i h(Z_i)]; returns (mean, stderr)."""
    L = sigma.sqrt_factor()
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        z = rng.standard_normal((m, sigma.k)) @ L.T
        vals = np.ones(m)
        for i in range(sigma.k):
            vals *= h(z[:, i])
        total += vals.sum()
        total_sq += (vals * vals).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return float(mean), float(np.sqrt(var / samples))


def choose_truncation_level(witness, sigma, samples, seed):
    """First M on a doubling schedule keeping half the normalized raw moment.

    Accepts M when the MC estimate of |E[prod h(Z_i)]| clears
    |product_moment| / (2 (2M)^k) minus three standard errors.
    """
    k = sigma.k
    max_alpha = max(abs(a) for a in witness.alpha)
    M = 2.0 * max(1.0, float(max_alpha) * max(witness.s))
    for _ in range(MAX_TRUNCATION_DOUBLINGS):
        h = truncate_and_center(witness, M)
        est, stderr = _gaussian_product_mc(h, sigma, samples, seed)
        target = abs(witness.product_moment) / (2.0 * (2.0 * M) ** k)
        if abs(est) >= target - 3.0 * stderr:
            return M, est
        M *= 2.0
    raise ConvergenceError(
        f"truncation schedule exhausted after {MAX_TRUNCATION_DOUBLINGS} doublings"
    )


# -- cube embedding ----------------------------------------------------


def clt_cube_function(h, p, n):
    """Cube function x -> h of the normalized, centered coordinate sum."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    p = as_rational(p, "p")
    pf = float(p)
    scale = np.sqrt(n * pf * (1.0 - pf))

    def func(bits):
        bits = np.asarray(bits)
        z = (bits.sum(axis=-1) - n * pf) / scale
        return h(z)

    return HandleFunction(n, func, range_tag=RANGE_INTERVAL, label="clt-witness")


def round_to_signs(f, seed):
    """Deterministic +-1 rounding: a keyed hash of the point plays the coin.

    g(x) = +1 iff hash-uniform(seed, x) < (1 + f(x)) / 2, so g is a fixed
    function per seed and averages to f over seeds.
    """
    key = int(seed).to_bytes(8, "big", signed=False)

    def func(bits):
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        fvals = np.asarray(f(bits), dtype=float)
        packed = np.packbits(bits, axis=1)
        out = np.empty(len(fvals))
        for i, row in enumerate(packed):
            digest = hashlib.blake2b(row.tobytes(), key=key, digest_size=8).digest()
            u = int.from_bytes(digest, "big") / 2.0**64
            out[i] = 1.0 if u < (1.0 + fvals[i]) / 2.0 else -1.0
        return out

    return HandleFunction(f.n, func, range_tag=RANGE_SIGNS, label="rounded-signs")


# -- end-to-end pipeline ----------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    witness: HermiteWitness
    M: float
    h: BoundedWitnessFunction
    alpha_const: float  # half the measured Gaussian product moment of h
    gaussian_estimate: float
    f: HandleFunction  # range [-1, 1]
    g: HandleFunction  # range {-1, 1}
    n: int
    seed: int

    def to_json_dict(self):
        return {
            "s": list(self.witness.s),
            "alpha": [format_rational(a) for a in self.witness.alpha],
            "product_moment": format_rational(self.witness.product_moment),
            "M": self.M,
            "center": self.h.center,
            "seed": self.seed,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)


def build_counterexample(d, n=2000, samples=100_000, seed=0, d_max=12, alpha=None):
    """Run the whole pipeline against a distribution's covariance matrix."""
    sigma = covariance_from_distribution(d)
    witness = find_hermite_witness(
        sigma, d_max=d_max, seed=derive_seed(seed, "alpha-search"), alpha=alpha
    )
    M, gauss_est = choose_truncation_level(
        witness, sigma, samples=samples, seed=derive_seed(seed, "truncation")
    )
    h = truncate_and_center(witness, M)
    f = clt_cube_function(h, d.p, n)
    g = round_to_signs(f, seed=derive_seed(seed, "rounding"))
    return Counterexample(
        witness=witness,
        M=M,
        h=h,
        alpha_const=abs(gauss_est) / 2.0,
        gaussian_estimate=gauss_est,
        f=f,
        g=g,
        n=n,
        seed=seed,
    )


def correlation_probes(f, p, n, samples, seed, num_pairs=100, chunk=5_000):
    """One-pass MC probes of E_{mu_p}[f * chi_S] for many S at once.

    Probes every singleton, `num_pairs` seeded random pairs, and S = [n].
    Returns per-family worst absolute correlations plus an error scale.
    """
    rng_pairs = random.Random(derive_seed(seed, "probe-pairs"))
    pairs = []
    while len(pairs) < num_pairs:
        a, b = rng_pairs.randrange(n), rng_pairs.randrange(n)
        if a != b:
            pairs.append((a, b))
    pair_idx = np.array(pairs)

    rng = np.random.default_rng(derive_seed(seed, "probe-samples"))
    single_sum = np.zeros(n)
    pair_sum = np.zeros(num_pairs)
    full_sum = 0.0
    f_sum = 0.0
    f_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        bits = sample_biased_bits(rng, m, n, p)
        signs = 1.0 - 2.0 * bits
        fv = np.asarray(f(bits), dtype=float)
        single_sum += fv @ signs
        pair_sum += fv @ (signs[:, pair_idx[:, 0]] * signs[:, pair_idx[:, 1]])
        parity = bits.sum(axis=1) % 2
        full_sum += (fv * (1.0 - 2.0 * parity)).sum()
        f_sum += fv.sum()
        f_sq += (fv * fv).sum()
        done += m
    singles = single_sum / samples
    pairs_corr = pair_sum / samples
    f_mean = f_sum / samples
    f_var = max(f_sq / samples - f_mean * f_mean, 0.0)
    return {
        "singleton_max": float(np.abs(singles).max()),
        "pair_max": float(np.abs(pairs_corr).max()),
        "full_set": float(full_sum / samples),
        "mean": float(f_mean),
        "stderr_scale": float(np.sqrt(max(f_var, 1.0 / 12.0) / samples)),
        "samples": samples,
    }
