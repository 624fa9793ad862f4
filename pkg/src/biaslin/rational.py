"""Exact rational parsing/formatting used at every API boundary.

Biases and probabilities travel as `fractions.Fraction`; floats are rejected
so that the exact invariants (sums, marginals) stay sharp.
"""

from fractions import Fraction

from .errors import ValidationError


def as_rational(value, name="value"):
    """Coerce to Fraction, rejecting floats and anything lossy.

    Accepts Fraction, int, or a string like "3/10" or "2".
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {name} as a rational: {value!r}") from exc
    if isinstance(value, float):
        raise ValidationError(
            f"{name} must be an exact rational (e.g. '2/5'), got float {value!r}"
        )
    raise ValidationError(f"{name} must be a rational, got {type(value).__name__}")


def format_rational(x):
    """Render a Fraction as the canonical 'a/b' (or 'a') string."""
    return str(Fraction(x))
