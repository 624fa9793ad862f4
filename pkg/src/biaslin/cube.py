"""Boolean-cube function representations and biased character correlations.

Dense tables index points by the integer whose most-significant bit is
coordinate 1 (matching the distribution file convention); functions on
large cubes are evaluation handles called on (samples x n) bit matrices.
"""

import json
from fractions import Fraction

import numpy as np

from .errors import ModeError, SizeError, ValidationError
from .rational import as_rational

MAX_DENSE_N = 24
MAX_ZK_N = 20

RANGE_INTERVAL = "interval"  # values in [-1, 1]
RANGE_SIGNS = "signs"  # values in {-1, 1}


class CubeFunction:
    """Common surface for dense tables and evaluation handles."""

    def __init__(self, n, range_tag=RANGE_INTERVAL):
        if n < 1:
            raise ValidationError("n must be >= 1")
        self.n = n
        self.range_tag = range_tag

    @property
    def is_dense(self):
        return isinstance(self, DenseFunction)

    def __call__(self, bits):
        raise NotImplementedError


class DenseFunction(CubeFunction):
    """Function given by a value table of length 2^n."""

    def __init__(self, n, values, range_tag=RANGE_INTERVAL):
        super().__init__(n, range_tag)
        if n > MAX_DENSE_N:
            raise SizeError(f"dense tables are limited to n <= {MAX_DENSE_N}")
        values = np.asarray(values, dtype=float)
        if values.shape != (2**n,):
            raise ValidationError(f"table must have length 2^{n}")
        if np.abs(values).max(initial=0.0) > 1.0 + 1e-12:
            raise ValidationError("values must lie in [-1, 1]")
        if range_tag == RANGE_SIGNS and not np.all(np.abs(values) == 1.0):
            raise ValidationError("sign-valued table must contain only +-1")
        self.values = values

    def __call__(self, bits):
        bits = np.asarray(bits)
        idx = bits_to_index(bits, self.n)
        return self.values[idx]

    def to_json_dict(self):
        return {"n": self.n, "values": self.values.tolist()}

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, data):
        values = np.asarray(data["values"], dtype=float)
        tag = RANGE_SIGNS if np.all(np.abs(values) == 1.0) else RANGE_INTERVAL
        return cls(data["n"], values, range_tag=tag)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


class HandleFunction(CubeFunction):
    """Function given by a pure callable on (m x n) bit matrices."""

    def __init__(self, n, func, range_tag=RANGE_INTERVAL, label=""):
        super().__init__(n, range_tag)
        self.func = func
        self.label = label

    def __call__(self, bits):
        return self.func(np.asarray(bits))


def bits_to_index(bits, n):
    """Map rows of a bit matrix (coordinate 1 first) to table indices."""
    bits = np.asarray(bits, dtype=np.int64)
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def index_bits(n):
    """(2^n x n) matrix of all points, row x = bits of x, coordinate 1 first."""
    idx = np.arange(2**n, dtype=np.int64)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1


def character(S, n):
    """chi_S as a +-1-valued function; S is a bitmask over coordinates 1..n."""
    S = int(S)
    if S < 0 or S >= 2**n:
        raise ValidationError(f"S must be a bitmask within n={n} bits")
    if n <= MAX_DENSE_N:
        bits = index_bits(n)
        vals = _character_values(bits, S, n)
        return DenseFunction(n, vals, range_tag=RANGE_SIGNS)

    def func(bits):
        return _character_values(bits, S, n)

    return HandleFunction(n, func, range_tag=RANGE_SIGNS, label=f"chi:{S:#x}")


def _character_values(bits, S, n):
    # S stays a Python int: n close to 64 overflows int64 shifts
    mask = np.array([(S >> (n - 1 - j)) & 1 for j in range(n)], dtype=np.int64)
    parity = (np.asarray(bits) * mask).sum(axis=-1) % 2
    return 1.0 - 2.0 * parity


def _biased_weights(n, p):
    """mu_p weight of every point as a float vector of length 2^n."""
    pf = float(p)
    pops = popcounts(n)
    return pf**pops * (1.0 - pf) ** (n - pops)


def popcounts(n):
    idx = np.arange(2**n, dtype=np.int64)
    pops = np.zeros(2**n, dtype=np.int64)
    for b in range(n):
        pops += (idx >> b) & 1
    return pops


def biased_correlation(f, S, p):
    """E_{mu_p}[f * chi_S] by exact-weighted summation over the dense table."""
    if not f.is_dense:
        raise ModeError("exact biased correlation needs a dense table")
    p = as_rational(p, "p")
    bits = index_bits(f.n)
    chi = _character_values(bits, int(S), f.n)
    w = _biased_weights(f.n, p)
    return float((w * f.values * chi).sum())


def biased_spectrum(f, p):
    """All 2^n correlations at once via a Walsh-Hadamard transform.

    spectrum[S] = sum_x mu_p(x) f(x) chi_S(x) = WHT(mu_p * f)[S].
    """
    if not f.is_dense:
        raise SizeError("spectrum needs a dense table")
    p = as_rational(p, "p")
    g = _biased_weights(f.n, p) * f.values
    return fwht(g)


def fwht(values):
    """In-place-style fast Walsh-Hadamard transform (no normalization)."""
    a = np.array(values, dtype=float)
    n = a.size
    if n & (n - 1):
        raise ValidationError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bot = a[:, 0, :] - a[:, 1, :]
        a = np.concatenate([top[:, None, :], bot[:, None, :]], axis=1)
        h *= 2
    return a.reshape(n)


def sample_biased_bits(rng, m, n, p):
    return (rng.random((m, n)) < float(p)).astype(np.int8)


def mc_biased_correlation(f, S, p, samples, seed, chunk=20_000):
    """Seeded MC estimate of E_{mu_p}[f * chi_S]; returns (estimate, stderr)."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    S = int(S)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        bits = sample_biased_bits(rng, m, f.n, p)
        vals = f(bits) * _character_values(bits, S, f.n)
        total += vals.sum()
        total_sq += (vals * vals).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return float(mean), float(np.sqrt(var / samples))


def zk_character(r, k, n):
    """Product character over Z/(k-1)Z: x -> omega^(sum_j r_j x_j), |value| = 1."""
    if k < 3:
        raise ValidationError("zk characters need k >= 3")
    r = np.asarray(r, dtype=np.int64)
    if r.shape != (n,):
        raise ValidationError(f"r must have length n={n}")
    if r.min(initial=0) < 0 or r.max(initial=0) > k - 2:
        raise ValidationError(f"r entries must lie in [0, {k - 2}]")
    omega = np.exp(2j * np.pi / (k - 1))

    def func(bits):
        expo = (np.asarray(bits) * r).sum(axis=-1) % (k - 1)
        return omega**expo

    return HandleFunction(n, func, range_tag=RANGE_INTERVAL, label="zk-character")


def zk_correlation(f, r, k, p):
    """Exact-weighted complex sum E_{mu_p}[f * phi_r] over a dense table."""
    if not f.is_dense:
        raise ModeError("exact zk correlation needs a dense table")
    if f.n > MAX_ZK_N:
        raise SizeError(f"zk correlation is limited to n <= {MAX_ZK_N}")
    p = as_rational(p, "p")
    phi = zk_character(r, k, f.n)
    bits = index_bits(f.n)
    w = _biased_weights(f.n, p)
    return complex((w * f.values * phi(bits)).sum())
