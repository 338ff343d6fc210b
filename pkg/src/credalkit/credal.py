"""Credal sets built from per-class probability intervals.

An ensemble of softmax outputs is wrapped into class-wise probability
intervals [lower_k, upper_k].  Such a system of intervals defines a
nonempty credal set (a convex set of distributions) exactly when

    sum_k lower_k <= 1 <= sum_k upper_k.

A single representative distribution, the *intersection probability*,
is obtained by moving from the lower bound toward the upper bound with
one shared weight beta:

    p*_k = lower_k + beta * (upper_k - lower_k),
    beta = (1 - sum_k lower_k) / sum_k (upper_k - lower_k).

Everything here is a pure function over immutable arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PROB_TOL",
    "InputValidationError",
    "IntervalSystem",
    "CredalPrediction",
    "as_prob_vector",
    "as_prob_matrix",
    "wrap_ensemble",
    "intersection_probability",
    "reconstruct_intervals",
    "check_validity",
    "predict_class",
]

# Acceptance tolerance for normalization and bound checks; inputs inside
# tolerance are renormalized exactly (external logit archives carry
# float round-off).
PROB_TOL = 1e-9

# beta when every interval has zero width; the value is immaterial
# (p* = lower = upper) but keeps the code path total and beta in [0, 1].
DEGENERATE_BETA = 0.5


class InputValidationError(ValueError):
    """An input violates a documented precondition."""


def as_prob_vector(values, *, tol: float = PROB_TOL) -> np.ndarray:
    """Validate a discrete distribution and renormalize it exactly.

    Accepts any 1-D array-like with C >= 2 entries in [0, 1] (within
    ``tol``) summing to 1 within ``tol``.  Returns a float64 array that
    has been divided by its own sum.
    """
    p = np.asarray(values, dtype=np.float64)
    if p.ndim != 1:
        raise InputValidationError(f"probability vector must be 1-D, got shape {p.shape}")
    if p.size < 2:
        raise InputValidationError(f"need at least 2 classes, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InputValidationError("probability vector contains non-finite entries")
    if np.any(p < -tol) or np.any(p > 1.0 + tol):
        raise InputValidationError(f"entries outside [0, 1]: {p}")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise InputValidationError(f"probabilities sum to {total!r}, not 1 within {tol}")
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


def as_prob_matrix(member_probs, *, tol: float = PROB_TOL) -> np.ndarray:
    """Validate an M x C matrix whose rows are probability vectors.

    Ragged input or any non-normalized row is rejected.
    """
    try:
        mat = np.asarray(member_probs, dtype=np.float64)
    except ValueError as exc:  # ragged nested sequences
        raise InputValidationError(f"ragged ensemble rows: {exc}") from None
    if mat.ndim != 2:
        raise InputValidationError(f"expected an M x C matrix, got shape {mat.shape}")
    if mat.shape[0] < 1:
        raise InputValidationError("need at least one ensemble member")
    return np.stack([as_prob_vector(row, tol=tol) for row in mat])


@dataclass(frozen=True)
class IntervalSystem:
    """Per-class probability bounds.

    Construction checks only structure (matching 1-D shapes, finite
    values); whether the bounds actually define a valid credal set is
    the job of :func:`check_validity`, which must be able to inspect
    invalid systems and report what is wrong with them.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise InputValidationError(
                f"lower/upper must be 1-D with equal length, got {lo.shape} and {hi.shape}"
            )
        if lo.size < 2:
            raise InputValidationError(f"need at least 2 classes, got {lo.size}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputValidationError("interval bounds contain non-finite entries")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def class_count(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        """Per-class interval length (upper - lower)."""
        return self.upper - self.lower


@dataclass(frozen=True)
class CredalPrediction:
    """The triple (p*, delta, beta) a credal student predicts.

    ``p_star`` is renormalized on construction; ``delta`` entries and
    ``beta`` must lie in [0, 1] within tolerance and are clipped.
    """

    p_star: np.ndarray
    delta: np.ndarray
    beta: float

    def __post_init__(self):
        p = as_prob_vector(self.p_star)
        d = np.asarray(self.delta, dtype=np.float64)
        if d.shape != p.shape:
            raise InputValidationError(
                f"delta shape {d.shape} does not match p_star shape {p.shape}"
            )
        if not np.all(np.isfinite(d)):
            raise InputValidationError("delta contains non-finite entries")
        if np.any(d < -PROB_TOL) or np.any(d > 1.0 + PROB_TOL):
            raise InputValidationError(f"delta entries outside [0, 1]: {d}")
        b = float(self.beta)
        if not np.isfinite(b) or b < -PROB_TOL or b > 1.0 + PROB_TOL:
            raise InputValidationError(f"beta outside [0, 1]: {b}")
        object.__setattr__(self, "p_star", p)
        object.__setattr__(self, "delta", np.clip(d, 0.0, 1.0))
        object.__setattr__(self, "beta", min(max(b, 0.0), 1.0))

    @property
    def class_count(self) -> int:
        return self.p_star.size


def wrap_ensemble(member_probs) -> IntervalSystem:
    """Wrap M member distributions into per-class min/max intervals.

    ``member_probs`` is an M x C matrix of probability vectors (M >= 1,
    identical C).  The result always satisfies the credal-set validity
    condition because the member average lies inside every interval;
    this is asserted anyway.
    """
    mat = as_prob_matrix(member_probs)
    lower = mat.min(axis=0)
    upper = mat.max(axis=0)
    system = IntervalSystem(lower, upper)
    ok, diagnostics = check_validity(system)
    assert ok, f"wrapped ensemble produced invalid intervals: {diagnostics}"
    return system


def check_validity(intervals: IntervalSystem, *, tol: float = PROB_TOL):
    """Check whether the intervals define a valid credal set.

    Returns ``(ok, diagnostics)`` where ``diagnostics`` lists every
    violated constraint.  Checks, within ``tol``:

    * 0 <= lower_k <= upper_k <= 1 for every class k,
    * sum_k lower_k <= 1 <= sum_k upper_k.
    """
    lo, hi = intervals.lower, intervals.upper
    diagnostics: list[str] = []
    for k in range(lo.size):
        if lo[k] < -tol:
            diagnostics.append(f"lower[{k}] = {lo[k]!r} < 0")
        if hi[k] > 1.0 + tol:
            diagnostics.append(f"upper[{k}] = {hi[k]!r} > 1")
        if lo[k] > hi[k] + tol:
            diagnostics.append(f"lower[{k}] = {lo[k]!r} > upper[{k}] = {hi[k]!r}")
    lo_sum = float(lo.sum())
    hi_sum = float(hi.sum())
    if lo_sum > 1.0 + tol:
        diagnostics.append(f"sum(lower) = {lo_sum!r} > 1")
    if hi_sum < 1.0 - tol:
        diagnostics.append(f"sum(upper) = {hi_sum!r} < 1")
    return not diagnostics, diagnostics


def _require_valid(intervals: IntervalSystem) -> None:
    ok, diagnostics = check_validity(intervals)
    if not ok:
        raise InputValidationError(
            "invalid interval system: " + "; ".join(diagnostics)
        )


def intersection_probability(intervals: IntervalSystem):
    """Representative single distribution of an interval system.

    Returns ``(p_star, beta)`` with ``p_star_k = lower_k + beta * width_k``
    and ``beta = (1 - sum(lower)) / sum(width)`` clamped to [0, 1].
    When every width is zero the divisor vanishes and beta is fixed at
    0.5 by convention (p* equals the common point regardless).
    """
    _require_valid(intervals)
    lo = intervals.lower
    width = intervals.width
    width_sum = float(width.sum())
    if width_sum <= 0.0:
        beta = DEGENERATE_BETA
    else:
        beta = (1.0 - float(lo.sum())) / width_sum
        beta = min(max(beta, 0.0), 1.0)
    p_star = lo + beta * width
    return p_star, beta


def reconstruct_intervals(pred: CredalPrediction) -> IntervalSystem:
    """Rebuild per-class intervals from a (p*, delta, beta) triple.

    lower_k = max(p*_k - beta * delta_k, 0) and
    upper_k = min(p*_k + (1 - beta) * delta_k, 1).  The clipping keeps
    both bounds in [0, 1]; because p* itself stays between the clipped
    bounds and sums to 1, the result is always a valid credal set.
    """
    lower = np.maximum(pred.p_star - pred.beta * pred.delta, 0.0)
    upper = np.minimum(pred.p_star + (1.0 - pred.beta) * pred.delta, 1.0)
    return IntervalSystem(lower, upper)


def predict_class(p_star) -> int:
    """Index of the largest probability; ties break to the lowest index."""
    p = as_prob_vector(p_star)
    return int(np.argmax(p))
