"""Construction and validation of even-weight biased distributions.

A distribution lives on {0,1}^k, has marginal bias p in every coordinate,
and is supported on even-Hamming-weight vectors.  All probabilities are
exact rationals; every invariant below is an exact equality, never a
tolerance check.
"""

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

from .errors import (
    BoundaryInfeasibleError,
    InvalidArityError,
    InvalidMixtureError,
    OutOfRangeError,
    SizeError,
    UnsupportedShapeError,
    ValidationError,
)
from .rational import as_rational, format_rational

MAX_TABLE_K = 24  # 2^k probability table; larger k is refused

ZERO = Fraction(0)
ONE = Fraction(1)


def _weight(x):
    return sum(x)


@dataclass(frozen=True)
class BiasedDistribution:
    """Distribution over {0,1}^k with bias-p marginals and even-weight support.

    `probs` maps k-bit tuples (coordinate 1 first) to positive rational
    probabilities; zero-probability points are omitted.  `q`, when present,
    lists the per-point probability of each even Hamming-weight class
    (index i = weight 2i) and certifies Hamming symmetry.
    """

    k: int
    p: Fraction
    probs: dict = field(compare=False)
    q: Optional[tuple] = None

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InvalidArityError(f"k must be a positive integer, got {self.k}")
        if self.k > MAX_TABLE_K:
            raise SizeError(f"k={self.k} exceeds the table limit k<={MAX_TABLE_K}")
        p = as_rational(self.p, "p")
        object.__setattr__(self, "p", p)
        if not (ZERO < p < ONE):
            raise OutOfRangeError(f"bias p must lie in (0,1), got {p}")
        probs = {}
        for x, pr in self.probs.items():
            x = tuple(int(b) for b in x)
            pr = as_rational(pr, f"probs[{x}]")
            if pr < 0:
                raise ValidationError(f"negative probability at {x}: {pr}")
            if pr == 0:
                continue
            if len(x) != self.k or any(b not in (0, 1) for b in x):
                raise ValidationError(f"support point {x} is not a {self.k}-bit vector")
            if _weight(x) % 2 != 0:
                raise ValidationError(f"support point {x} has odd Hamming weight")
            probs[x] = pr
        object.__setattr__(self, "probs", probs)
        total = sum(probs.values(), ZERO)
        if total != 1:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        for i in range(self.k):
            m = self.marginal(i)
            if m != p:
                raise ValidationError(
                    f"coordinate {i + 1} has marginal {m}, expected p={p}"
                )
        if self.q is not None:
            q = tuple(as_rational(v, "q entry") for v in self.q)
            if len(q) != self.k // 2 + 1:
                raise ValidationError(
                    f"q must have {self.k // 2 + 1} entries, got {len(q)}"
                )
            for x in itertools.product((0, 1), repeat=self.k):
                w = _weight(x)
                if w % 2 == 0 and probs.get(x, ZERO) != q[w // 2]:
                    raise ValidationError(
                        f"probs not constant on weight class {w}: point {x}"
                    )
            object.__setattr__(self, "q", q)

    # -- basic queries -------------------------------------------------

    def support(self):
        return sorted(self.probs)

    def marginal(self, i):
        """P[X_{i+1} = 1], exact."""
        return sum((pr for x, pr in self.probs.items() if x[i] == 1), ZERO)

    def pair_expectation(self, i, j):
        """E[X_{i+1} X_{j+1}], exact."""
        return sum(
            (pr for x, pr in self.probs.items() if x[i] == 1 and x[j] == 1), ZERO
        )

    def is_hamming_symmetric(self):
        if self.q is not None:
            return True
        classes = {}
        for x, pr in self.probs.items():
            classes.setdefault(_weight(x), set()).add(pr)
        for w, vals in classes.items():
            if len(vals) != 1:
                return False
            if comb(self.k, w) != sum(1 for x in self.probs if _weight(x) == w):
                return False
        return True

    def has_full_even_weight_support(self):
        return len(self.probs) == 2 ** (self.k - 1)

    # -- serialization -------------------------------------------------

    def to_json_dict(self):
        out = {
            "k": self.k,
            "p": format_rational(self.p),
            "probs": {
                "".join(str(b) for b in x): format_rational(pr)
                for x, pr in sorted(self.probs.items())
            },
        }
        if self.q is not None:
            out["q"] = [format_rational(v) for v in self.q]
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, data):
        k = data["k"]
        probs = {
            tuple(int(c) for c in bits): as_rational(pr, f"probs[{bits}]")
            for bits, pr in data["probs"].items()
        }
        q = tuple(as_rational(v, "q") for v in data["q"]) if "q" in data else None
        return cls(k=k, p=as_rational(data["p"], "p"), probs=probs, q=q)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Outcome of the pairwise-independence feasibility search at (k, p)."""

    feasible: bool
    witness: Optional[BiasedDistribution]
    bound_check: bool  # k >= 1 + 1/min(p, 1-p)


def from_weight_probs(k, p, q):
    """Build a Hamming-symmetric distribution from per-point weight-class probs."""
    q = tuple(as_rational(v, "q") for v in q)
    probs = {}
    for x in itertools.product((0, 1), repeat=k):
        w = _weight(x)
        if w % 2 == 0 and q[w // 2] != 0:
            probs[x] = q[w // 2]
    return BiasedDistribution(k=k, p=as_rational(p, "p"), probs=probs, q=q)


# -- constructors ------------------------------------------------------


def make_uniform_even_weight(k):
    """Uniform distribution on the 2^(k-1) even-weight vectors; bias 1/2."""
    if not isinstance(k, int) or k < 3:
        raise InvalidArityError(f"uniform even-weight distribution needs k >= 3, got {k}")
    u = Fraction(1, 2 ** (k - 1))
    q = tuple(u for _ in range(k // 2 + 1))
    return from_weight_probs(k, Fraction(1, 2), q)


def _case_admissible(k, p):
    lo, hi = Fraction(1, k - 1), Fraction(2, k - 1)
    return (lo <= p < hi) or (lo <= 1 - p < hi)


def make_case_distribution(k, p):
    """Hamming-symmetric pairwise-independent distribution near the bias boundary.

    Covers p with min(p, 1-p) in [1/(k-1), 2/(k-1)); four explicit q-vector
    cases split on the parity of k and on which side of 1/2 the bias falls.
    """
    p = as_rational(p, "p")
    if not isinstance(k, int) or k < 4:
        raise InvalidArityError(f"case construction needs k >= 4, got {k}")
    if not _case_admissible(k, p):
        lo, hi = Fraction(1, k - 1), Fraction(2, k - 1)
        raise OutOfRangeError(
            f"p={p} outside the admissible range [{lo},{hi}) u ({1 - hi},{1 - lo}] for k={k}"
        )
    s = k // 2
    q = [ZERO] * (s + 1)
    lo, hi = Fraction(1, k - 1), Fraction(2, k - 1)
    if k % 2 == 1:
        if lo <= p < hi:
            # odd k, small bias
            q[0] = 1 + Fraction(k * p * p, 2) - Fraction(k * k * p, 2 * (k - 1))
            q[1] = Fraction((k - 2) * p - (k - 1) * p * p, (k - 1) * (k - 3))
            q[(k - 1) // 2] = Fraction((k - 1) * p * p - p, (k - 1) * (k - 3))
        else:
            # odd k, large bias
            q[0] = 1 + Fraction(k * p * p, k - 3) - Fraction(k * (2 * k - 5) * p, (k - 1) * (k - 3))
            q[(k - 3) // 2] = Fraction(
                3 * (k - 2) * p - 3 * (k - 1) * p * p, (k - 1) * (k - 2) * (k - 3)
            )
            q[(k - 1) // 2] = Fraction((k - 1) * p * p - (k - 4) * p, 2 * (k - 1))
    else:
        if lo <= p < hi:
            # even k, small bias
            q[0] = Fraction((k - 1) * p * p - (k + 1) * p + 2, 2)
            q[1] = Fraction(p - p * p, k - 2)
            q[k // 2] = Fraction((k - 1) * p * p - p, k - 2)
        else:
            # even k, large bias: flip every coordinate of the small-bias build
            return flip_coordinates(make_case_distribution(k, 1 - p))
    return from_weight_probs(k, p, q)


def flip_coordinates(d):
    """Flip every coordinate: a member of D(p,k) becomes one of D(1-p,k).

    Only valid for even k, where flipping preserves even support weight.
    """
    if d.k % 2 != 0:
        raise InvalidArityError("coordinate flip needs even k to preserve parity")
    probs = {tuple(1 - b for b in x): pr for x, pr in d.probs.items()}
    q = tuple(reversed(d.q)) if d.q is not None else None
    return BiasedDistribution(k=d.k, p=1 - d.p, probs=probs, q=q)


def _flip_probs(probs):
    return {tuple(1 - b for b in x): pr for x, pr in probs.items()}


def make_composed_distribution(k, p):
    """Pairwise-independent full-even-support distribution for mid-range bias.

    Splits the coordinates into an odd-size head of length l and an
    independent mu_p tail; the head is drawn from a boundary-range
    construction (or its coordinate flip) chosen by the tail's parity.
    """
    p = as_rational(p, "p")
    if not isinstance(k, int) or k < 6:
        raise InvalidArityError(f"composition needs k >= 6, got {k}")
    pmin = min(p, 1 - p)
    if p == Fraction(1, 2) or not (Fraction(2, k - 1) <= p <= 1 - Fraction(2, k - 1)):
        raise OutOfRangeError(
            f"composition needs p in [2/{k - 1}, {k - 3}/{k - 1}] \\ {{1/2}}, got {p}"
        )
    # smallest odd l with l > 1 + 1/pmin
    ell = int(1 + 1 / pmin) + 1
    while ell % 2 == 0 or ell <= 1 + 1 / pmin:
        ell += 1
    if k - ell <= 0:
        raise ValidationError(f"internal consistency failure: l={ell} >= k={k}")

    head0 = _full_supportize(make_case_distribution(ell, p))
    head1_flipped = _flip_probs(_full_supportize(make_case_distribution(ell, 1 - p)).probs)
    heads = (head0.probs, head1_flipped)

    probs = {}
    for tail in itertools.product((0, 1), repeat=k - ell):
        tail_pr = ONE
        for b in tail:
            tail_pr *= p if b == 1 else 1 - p
        z = _weight(tail) % 2
        for head, head_pr in heads[z].items():
            probs[head + tail] = probs.get(head + tail, ZERO) + tail_pr * head_pr
    return BiasedDistribution(k=k, p=p, probs=probs)


def _full_supportize(d):
    """Perturb to full even-weight support when some weight class is empty."""
    if d.has_full_even_weight_support():
        return d
    return make_full_support_perturbation(d)


# -- exact linear algebra helpers -------------------------------------


def _constraint_matrix(k):
    """Rows: total mass = 1; marginal = p; pair expectation = p^2 (coefficients only)."""
    s = k // 2
    a0 = [Fraction(comb(k, 2 * i)) for i in range(s + 1)]
    a1 = [Fraction(comb(k - 1, 2 * i - 1)) if i >= 1 else ZERO for i in range(s + 1)]
    a2 = [Fraction(comb(k - 2, 2 * i - 2)) if i >= 1 else ZERO for i in range(s + 1)]
    return [a0, a1, a2]


def _solve_square(A, b):
    """Exact solve of a square rational system; None if singular."""
    n = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _solve_columns(A, b, cols):
    """Solve A[:, cols] x = b exactly; None if inconsistent or underdetermined."""
    m = len(A)
    M = [[A[r][c] for c in cols] + [b[r]] for r in range(m)]
    n = len(cols)
    rank = 0
    pivots = []
    for col in range(n):
        piv = next((r for r in range(rank, m) if M[r][col] != 0), None)
        if piv is None:
            return None  # free variable: covered by a smaller column subset
        M[rank], M[piv] = M[piv], M[rank]
        inv = 1 / M[rank][col]
        M[rank] = [v * inv for v in M[rank]]
        for r in range(m):
            if r != rank and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[rank])]
        pivots.append(col)
        rank += 1
    for r in range(rank, m):
        if M[r][n] != 0:
            return None  # inconsistent
    x = [ZERO] * n
    for r, col in enumerate(pivots):
        x[col] = M[r][n]
    return x


def _gf2_span_dim(vectors):
    basis = []
    for v in vectors:
        cur = int("".join(str(b) for b in v), 2) if v else 0
        for piv in basis:
            cur = min(cur, cur ^ piv)
        if cur:
            basis.append(cur)
    return len(basis)


def make_full_support_perturbation(d):
    """Nudge a Hamming-symmetric pairwise-independent q into the open cube (0,1).

    Solves the homogeneous constraint system for a direction with all
    non-basis entries 1, then steps half the maximum feasible distance.
    """
    if d.q is None and not d.is_hamming_symmetric():
        raise UnsupportedShapeError("perturbation requires a Hamming-symmetric distribution")
    k = d.k
    if d.p in (Fraction(1, k - 1), 1 - Fraction(1, k - 1)):
        raise BoundaryInfeasibleError(
            f"p={d.p} is on the boundary of the admissible interval for k={k}: "
            "full even-weight support is impossible"
        )
    if set(pairwise_independent_coordinates(d)) != set(range(1, k + 1)):
        raise ValidationError("perturbation requires a pairwise independent distribution")
    q = list(d.q) if d.q is not None else _q_from_probs(d)
    s = k // 2
    A = _constraint_matrix(k)
    support_cols = [i for i in range(s + 1) if q[i] != 0]
    basis = None
    candidates = []
    if len(support_cols) == 3:
        candidates.append(tuple(support_cols))
    candidates.extend(itertools.combinations(range(s + 1), 3))
    for cols in candidates:
        sub = [[A[r][c] for c in cols] for r in range(3)]
        if _det3(sub) != 0:
            basis = cols
            break
    if basis is None:
        raise UnsupportedShapeError("could not find an invertible constraint basis")
    non_basis = [i for i in range(s + 1) if i not in basis]
    rhs = [-sum(A[r][j] for j in non_basis) for r in range(3)]
    sol = _solve_square([[A[r][c] for c in basis] for r in range(3)], rhs)
    direction = [ZERO] * (s + 1)
    for j in non_basis:
        direction[j] = ONE
    for c, v in zip(basis, sol):
        direction[c] = v

    if all(v == 0 for v in direction):
        if all(ZERO < qi < ONE for qi in q):
            return from_weight_probs(k, d.p, q)
        raise BoundaryInfeasibleError(
            "no perturbation direction exists and support is not full"
        )

    delta_max = None
    for qi, di in zip(q, direction):
        if di > 0:
            bound = (1 - qi) / di
        elif di < 0:
            bound = qi / (-di)
        else:
            if not (ZERO < qi < ONE):
                raise BoundaryInfeasibleError(
                    f"weight-class probability {qi} cannot be moved into (0,1)"
                )
            continue
        delta_max = bound if delta_max is None else min(delta_max, bound)
    delta = delta_max / 2
    new_q = [qi + delta * di for qi, di in zip(q, direction)]
    if not all(ZERO < v < ONE for v in new_q):
        raise BoundaryInfeasibleError("perturbed q escaped (0,1); boundary case")
    return from_weight_probs(k, d.p, new_q)


def _det3(M):
    return (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )


def _q_from_probs(d):
    q = [ZERO] * (d.k // 2 + 1)
    for x, pr in d.probs.items():
        q[_weight(x) // 2] = pr
    return q


def make_dfh19(p, p1=None):
    """Four-query 99%-regime mixture: all-zeros / all-ones / uniform even-weight."""
    k = 4
    p = as_rational(p, "p")
    if p1 is None:
        p1 = max(ZERO, 2 * p - 1)
    else:
        p1 = as_rational(p1, "p1")
    p0 = 1 - 2 * p + p1
    if not (ZERO <= p1 <= ONE) or not (ZERO <= p0 <= 1 - p1):
        raise InvalidMixtureError(
            f"mixture weights out of range: p0={p0}, p1={p1} for p={p}"
        )
    u = 1 - p0 - p1
    q = (p0 + u / 8, u / 8, p1 + u / 8)
    return from_weight_probs(k, p, q)


# -- analysis ----------------------------------------------------------


def pairwise_independent_coordinates(d):
    """1-based indices i with E[X_i X_j] = p^2 for every j != i."""
    p2 = d.p * d.p
    out = set()
    for i in range(d.k):
        if all(d.pair_expectation(i, j) == p2 for j in range(d.k) if j != i):
            out.add(i + 1)
    return out


def eta(d):
    """max over coordinate pairs of P[X_i = X_j], exact."""
    if d.k < 2:
        raise InvalidArityError("eta needs k >= 2")
    best = ZERO
    for i in range(d.k):
        for j in range(i + 1, d.k):
            agree = sum((pr for x, pr in d.probs.items() if x[i] == x[j]), ZERO)
            best = max(best, agree)
    return best


@dataclass(frozen=True)
class BlrWitness:
    b: int
    z: tuple
    coordinates: tuple  # ordered triple carrying the BLR pattern, 1-based


def contains_blr(d, up_to_permutation=False):
    """Find a BLR pattern {(x1, x2, x1^x2^b, z)} inside the support.

    Also requires the GF(2) span of the support to be the full even-weight
    space; returns a BlrWitness or None.
    """
    if d.k < 3:
        raise InvalidArityError("contains_blr needs k >= 3")
    if _gf2_span_dim(d.support()) != d.k - 1:
        return None
    support = set(d.probs)
    if up_to_permutation:
        triples = list(itertools.permutations(range(d.k), 3))
    else:
        triples = [(0, 1, 2)]
    for t1, t2, t3 in triples:
        rest = [i for i in range(d.k) if i not in (t1, t2, t3)]
        for b in (0, 1):
            for z in itertools.product((0, 1), repeat=d.k - 3):
                ok = True
                for x1, x2 in itertools.product((0, 1), repeat=2):
                    v = [0] * d.k
                    v[t1], v[t2], v[t3] = x1, x2, x1 ^ x2 ^ b
                    for pos, zb in zip(rest, z):
                        v[pos] = zb
                    if tuple(v) not in support:
                        ok = False
                        break
                if ok:
                    return BlrWitness(b=b, z=z, coordinates=(t1 + 1, t2 + 1, t3 + 1))
    return None


def feasibility_search(k, p):
    """Decide pairwise-independence feasibility at (k, p) by exact vertex enumeration.

    Enumerates basic solutions of the three Hamming-symmetric constraint
    equations; any nonnegative basic solution yields a witness distribution.
    """
    p = as_rational(p, "p")
    if not isinstance(k, int) or k < 1:
        raise InvalidArityError(f"k must be a positive integer, got {k}")
    if not (ZERO < p < ONE):
        raise OutOfRangeError(f"p must lie in (0,1), got {p}")
    pmin = min(p, 1 - p)
    bound_check = Fraction(k) >= 1 + 1 / pmin
    s = k // 2
    A = _constraint_matrix(k)
    b = [ONE, p, p * p]
    ncols = s + 1
    for size in range(1, min(3, ncols) + 1):
        for cols in itertools.combinations(range(ncols), size):
            x = _solve_columns(A, b, cols)
            if x is None or any(v < 0 for v in x):
                continue
            q = [ZERO] * ncols
            for c, v in zip(cols, x):
                q[c] = v
            witness = from_weight_probs(k, p, q)
            return FeasibilityCertificate(True, witness, bound_check)
    return FeasibilityCertificate(False, None, bound_check)


def permutation_average(d):
    """Average over all coordinate permutations; yields a Hamming-symmetric law."""
    if d.k > 8:
        raise SizeError("permutation averaging is only exposed for k <= 8")
    probs = {}
    perms = list(itertools.permutations(range(d.k)))
    n = Fraction(len(perms))
    for x, pr in d.probs.items():
        share = pr / n
        for pi in perms:
            y = tuple(x[pi[i]] for i in range(d.k))
            probs[y] = probs.get(y, ZERO) + share
    return BiasedDistribution(k=d.k, p=d.p, probs=probs)


def make_distribution(k, p):
    """Dispatch to the construction that realizes pairwise independence at (k, p)."""
    p = as_rational(p, "p")
    if p == Fraction(1, 2):
        return make_uniform_even_weight(k)
    if k >= 4 and _case_admissible(k, p):
        return make_case_distribution(k, p)
    if k >= 6:
        return make_composed_distribution(k, p)
    raise OutOfRangeError(
        f"no pairwise-independent construction exists for k={k}, p={p}"
    )
