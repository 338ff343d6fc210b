"""Teacher and student forward transformations and distillation losses.

Covers the four prediction heads this library trains or consumes:

* deep-ensemble averaging with the mutual-information uncertainty split,
* plain distillation (cross-entropy against the averaged soft label),
* Dirichlet distribution distillation (alpha = exp(logits)),
* the credal student, whose 2C+1 logits decode into (p*, delta, beta).

Loss functions here are single-sample reference implementations; the
training loop re-expresses the same math on autodiff tensors and is
unit-tested against these values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, expit, gammaln, xlogy

from .credal import (
    CredalPrediction,
    InputValidationError,
    as_prob_matrix,
    as_prob_vector,
)
from .entropy import UncertaintyMeasure, UncertaintyTriple, shannon_entropy

__all__ = [
    "LOG_CLAMP",
    "DirichletPrediction",
    "StudentLogits",
    "de_average",
    "de_uncertainty",
    "ed_loss",
    "credit_forward",
    "ced_loss",
    "edd_forward",
    "edd_uncertainty",
    "edd_loss",
    "softmax",
]

# Floor inside every logarithm of a predicted probability: teachers can
# emit exact zeros after float softmax underflow.
LOG_CLAMP = 1e-12

# exp(z) must stay finite even after summing C terms.
_EXP_OVERFLOW = float(np.log(np.finfo(np.float64).max))


@dataclass(frozen=True)
class DirichletPrediction:
    """Dirichlet parameters alpha with the expected categorical pi."""

    alpha: np.ndarray
    pi: np.ndarray
    alpha0: float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64)
        if a.ndim != 1 or a.size < 2:
            raise InputValidationError(f"alpha must be a 1-D vector of C >= 2, got {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
            raise InputValidationError("alpha entries must be finite and positive")
        if not np.isclose(self.alpha0, a.sum(), rtol=1e-9, atol=1e-9):
            raise InputValidationError(
                f"alpha0 = {self.alpha0!r} does not match sum(alpha) = {a.sum()!r}"
            )
        pi = as_prob_vector(self.pi)
        if not np.allclose(pi, a / self.alpha0, rtol=1e-9, atol=1e-9):
            raise InputValidationError("pi does not equal alpha / alpha0")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "alpha0", float(self.alpha0))


@dataclass(frozen=True)
class StudentLogits:
    """Raw final-layer outputs of a credal student: 2C+1 logits.

    The first C entries feed the class softmax (these and only these
    are divided by the temperature), the next C the interval-length
    sigmoids, and the last one the weight-factor sigmoid.
    """

    z: np.ndarray
    temperature: float
    class_count: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim != 1:
            raise InputValidationError(f"logits must be 1-D, got shape {z.shape}")
        if self.class_count < 2:
            raise InputValidationError(f"need at least 2 classes, got {self.class_count}")
        if z.size != 2 * self.class_count + 1:
            raise InputValidationError(
                f"expected {2 * self.class_count + 1} logits for C = {self.class_count}, "
                f"got {z.size}"
            )
        if not np.all(np.isfinite(z)):
            raise InputValidationError("logits contain non-finite entries")
        if not (np.isfinite(self.temperature) and self.temperature > 0.0):
            raise InputValidationError(f"temperature must be > 0, got {self.temperature!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "temperature", float(self.temperature))


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Overflow-safe softmax (max-subtracted)."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, LOG_CLAMP))


def de_average(member_probs) -> np.ndarray:
    """Elementwise mean of the M member distributions."""
    return as_prob_matrix(member_probs).mean(axis=0)


def de_uncertainty(member_probs) -> UncertaintyTriple:
    """Ensemble uncertainty split via the mutual-information view.

    Total is the entropy of the averaged prediction, aleatoric the mean
    member entropy, epistemic their difference (>= 0 by Jensen, floored
    against float noise).
    """
    mat = as_prob_matrix(member_probs)
    total = shannon_entropy(mat.mean(axis=0))
    aleatoric = float(np.mean(-xlogy(mat, mat).sum(axis=1)))
    aleatoric = max(aleatoric, 0.0)
    epistemic = max(total - aleatoric, 0.0)
    # keep the additive identity exact under the epistemic floor
    aleatoric = min(aleatoric, total)
    return UncertaintyTriple(
        total=total,
        aleatoric=aleatoric,
        epistemic=epistemic,
        measure=UncertaintyMeasure.ENSEMBLE_MI,
    )


def ed_loss(teacher_soft, student_p) -> float:
    """Cross-entropy of the student against the averaged soft label."""
    t = as_prob_vector(teacher_soft)
    s = as_prob_vector(student_p)
    if t.size != s.size:
        raise InputValidationError(
            f"class counts differ: teacher {t.size}, student {s.size}"
        )
    return float(-(t * _clamped_log(s)).sum())


def credit_forward(logits: StudentLogits) -> CredalPrediction:
    """Decode 2C+1 logits into the credal triple (p*, delta, beta).

    The temperature divides only the first C logits; the delta and beta
    logits pass through their sigmoids unscaled.
    """
    count = logits.class_count
    p_star = softmax(logits.z[:count] / logits.temperature)
    delta = expit(logits.z[count : 2 * count])
    beta = float(expit(logits.z[2 * count]))
    return CredalPrediction(p_star=p_star, delta=delta, beta=beta)


def ced_loss(teacher: CredalPrediction, student: CredalPrediction) -> float:
    """Single-sample credal distillation loss.

    Cross-entropy between the intersection probabilities plus squared
    errors on the interval lengths and the weight factor.  The training
    loop multiplies the batch mean by T^2.
    """
    if teacher.class_count != student.class_count:
        raise InputValidationError(
            f"class counts differ: teacher {teacher.class_count}, "
            f"student {student.class_count}"
        )
    ce = float(-(teacher.p_star * _clamped_log(student.p_star)).sum())
    delta_sq = float(((teacher.delta - student.delta) ** 2).sum())
    beta_sq = (teacher.beta - student.beta) ** 2
    return ce + delta_sq + beta_sq


def edd_forward(logits) -> DirichletPrediction:
    """Dirichlet head: alpha = exp(z), pi = softmax(z)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise InputValidationError(f"logits must be a 1-D vector of C >= 2, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InputValidationError("logits contain non-finite entries")
    if float(z.max()) + math.log(z.size) >= _EXP_OVERFLOW:
        raise InputValidationError(
            f"logit {z.max()!r} would overflow exp(); scale the logits down "
            "(e.g. divide by a temperature) before the Dirichlet head"
        )
    alpha = np.exp(z)
    return DirichletPrediction(alpha=alpha, pi=softmax(z), alpha0=float(alpha.sum()))


def edd_uncertainty(pred: DirichletPrediction) -> UncertaintyTriple:
    """Uncertainty split of a Dirichlet prediction.

    Total is the entropy of the mean categorical pi; aleatoric is the
    expected entropy of a draw from the Dirichlet,
    -sum (alpha_k/alpha0) (psi(alpha_k + 1) - psi(alpha0 + 1)).
    """
    total = shannon_entropy(pred.pi)
    aleatoric = float(
        -(pred.alpha / pred.alpha0 * (digamma(pred.alpha + 1.0) - digamma(pred.alpha0 + 1.0))).sum()
    )
    aleatoric = min(max(aleatoric, 0.0), total)
    return UncertaintyTriple(
        total=total,
        aleatoric=aleatoric,
        epistemic=total - aleatoric,
        measure=UncertaintyMeasure.DIRICHLET,
    )


def edd_loss(pred: DirichletPrediction, member_probs) -> float:
    """Single-sample Dirichlet likelihood loss against the members.

    -( ln Gamma(alpha0) - sum ln Gamma(alpha_k)
       + mean_m sum_k (alpha_k - 1) ln p_{m,k} )
    with member probabilities floored before the log.
    """
    mat = as_prob_matrix(member_probs)
    if mat.shape[1] != pred.alpha.size:
        raise InputValidationError(
            f"class counts differ: members {mat.shape[1]}, alpha {pred.alpha.size}"
        )
    log_members = _clamped_log(mat).mean(axis=0)
    value = (
        gammaln(pred.alpha0)
        - gammaln(pred.alpha).sum()
        + ((pred.alpha - 1.0) * log_members).sum()
    )
    return float(-value)
