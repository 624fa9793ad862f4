"""The k-query product test: exact enumeration at small n, seeded MC at scale.

Probabilities are combined as exact rationals in exact mode; function
values enter as reals (and products of +-1 values stay exact).
"""

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .cube import RANGE_SIGNS
from .errors import SizeError, ValidationError

ENUMERATION_BUDGET = 10**8

MODE_EXACT = "exact"
MODE_MC = "monte-carlo"


@dataclass(frozen=True)
class TestReport:
    product_expectation: float
    stderr: float
    mode: str
    acceptance_probability: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.acceptance_probability is not None and not (
            -1e-12 <= self.acceptance_probability <= 1 + 1e-12
        ):
            raise ValidationError("acceptance probability out of [0,1]")
        if self.mode == MODE_EXACT and self.stderr != 0.0:
            raise ValidationError("exact mode must report stderr 0")

    def to_json_dict(self):
        return {
            "expectation": self.product_expectation,
            "stderr": self.stderr,
            "acceptance": self.acceptance_probability,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)


def _acceptance(f, expectation):
    if f.range_tag == RANGE_SIGNS:
        return (1.0 + expectation) / 2.0
    return None


def _product_form_factors(f):
    """Factor a dense nonzero table as s * prod_j c_j^(x_j), or None.

    When f splits over coordinates the test expectation tensorizes over
    blocks, which turns the |supp|^n enumeration into n cheap sums.
    """
    if not getattr(f, "is_dense", False):
        return None
    values = f.values
    if np.any(values == 0.0):
        return None
    scale = Fraction(float(values[0]))
    factors = []
    for j in range(f.n):
        shaped = values.reshape(2**j, 2, -1)
        ratio = shaped[:, 1, :] / shaped[:, 0, :]
        c = ratio.flat[0]
        if not np.all(ratio == c):
            return None
        factors.append(Fraction(float(c)))
    return scale, factors


def _tensorized_expectation(d, n, scale, factors, negate):
    """E[prod_i f(X_i)] = s^k * prod_j E_nu[c_j^W], W the block weight."""
    k = d.k
    if negate:
        for c in factors:
            scale *= c
        factors = [1 / c for c in factors]
    total = scale**k
    for c in factors:
        block = sum(
            (pr * c ** sum(y) for y, pr in d.probs.items()), Fraction(0)
        )
        total *= block
    return total


def product_expectation_exact(f, d, n, negate=False):
    """Exact E over supp(nu)^n of the probability-weighted query product."""
    if f.n != n:
        raise ValidationError(f"function is on n={f.n}, test asked for n={n}")
    split = _product_form_factors(f)
    if split is not None:
        expectation = float(_tensorized_expectation(d, n, *split, negate))
        return TestReport(
            product_expectation=expectation,
            stderr=0.0,
            mode=MODE_EXACT,
            acceptance_probability=_acceptance(f, expectation),
        )
    supp = d.support()
    if len(supp) ** n > ENUMERATION_BUDGET:
        raise SizeError(
            f"|supp|^n = {len(supp)}^{n} exceeds the enumeration budget; use MC mode"
        )
    k = d.k
    total = Fraction(0)
    for blocks in itertools.product(supp, repeat=n):
        prob = Fraction(1)
        for y in blocks:
            prob *= d.probs[y]
        queries = np.array(blocks, dtype=np.int8).T  # k x n
        if negate:
            queries = 1 - queries
        vals = f(queries)  # one value per query row
        prod = 1.0
        for v in vals:
            prod *= float(v)
        total += prob * Fraction(prod)
    expectation = float(total)
    return TestReport(
        product_expectation=expectation,
        stderr=0.0,
        mode=MODE_EXACT,
        acceptance_probability=_acceptance(f, expectation),
    )


def _cumulative_table(d):
    """Outcome codes (coordinate 1 = MSB) and float cumulative probabilities."""
    supp = d.support()
    codes = np.array(
        [int("".join(str(b) for b in x), 2) for x in supp], dtype=np.int64
    )
    probs = np.array([float(d.probs[x]) for x in supp])
    return codes, np.cumsum(probs)


def sample_test_blocks(rng, d, m, n):
    """(m x n) outcome-code matrix of independent nu draws."""
    codes, cum = _cumulative_table(d)
    u = rng.random((m, n))
    idx = np.searchsorted(cum, u, side="right").clip(max=len(codes) - 1)
    return codes[idx]


def query_bits(outcomes, i, k):
    """Bits of coordinate i (0-based) from an outcome-code matrix."""
    return ((outcomes >> (k - 1 - i)) & 1).astype(np.int8)


def product_expectation_mc(f, d, n, samples, seed, negate=False, chunk=10_000):
    """Seeded MC estimate of the query-product expectation; (mean, stderr) report."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if f.n != n:
        raise ValidationError(f"function is on n={f.n}, test asked for n={n}")
    k = d.k
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        outcomes = sample_test_blocks(rng, d, m, n)
        prods = np.ones(m)
        for i in range(k):
            bits = query_bits(outcomes, i, k)
            if negate:
                bits = 1 - bits
            prods *= f(bits)
        total += prods.sum()
        total_sq += (prods * prods).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    stderr = float(np.sqrt(var / samples))
    return TestReport(
        product_expectation=float(mean),
        stderr=stderr,
        mode=MODE_MC,
        acceptance_probability=_acceptance(f, mean),
        samples=samples,
        seed=seed,
    )


def negated_test(f, d_prime, n, mode=MODE_EXACT, samples=None, seed=0):
    """Run the test with every query coordinate negated.

    d_prime is a member of D(1-p, k); each negated query is distributed per
    mu_p^(x)n even though the raw draws come from d_prime.
    """
    if mode == MODE_EXACT:
        return product_expectation_exact(f, d_prime, n, negate=True)
    if samples is None:
        raise ValidationError("MC mode needs a sample budget")
    return product_expectation_mc(f, d_prime, n, samples, seed, negate=True)


def character_pass_check(d, r):
    """Exact E[omega^(r * sum Y_i)] for the Z/(k-1)Z character test.

    Requires every support weight to be 0 mod (k-1); the value is then
    exactly 1 (the probabilities sum with unit character values).
    """
    k = d.k
    if not (0 <= r <= k - 2):
        raise ValidationError(f"r must lie in [0, {k - 2}]")
    order = k - 1
    bad = [sum(x) for x in d.support() if sum(x) % order != 0]
    if bad:
        raise ValidationError(
            f"support weight {bad[0]} is not 0 mod {order}; character test inapplicable"
        )
    # all exponents r*w are multiples of the character order, so each term is
    # its probability exactly
    total = sum(d.probs.values(), Fraction(0))
    assert total == 1
    return complex(1.0, 0.0)
