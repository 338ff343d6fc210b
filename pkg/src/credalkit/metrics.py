"""OOD detection scoring, calibration, and accuracy-rejection curves.

The detection protocol: label in-distribution samples 0 and
out-of-distribution samples 1, use each sample's uncertainty estimate
as the detector score, and report AUROC / AUPRC.  Which uncertainty
kinds a model can provide depends on its head:

============  =====================  =================
method        uncertainty source     kinds available
============  =====================  =================
ced           credal entropy bounds  eu, tu, au
de_wrapped    credal entropy bounds  eu, tu, au
de            ensemble disagreement  eu, tu, au
edd           Dirichlet moments      eu, tu, au
ed / snn      single softmax         tu only
============  =====================  =================

Credal models on binary tasks can instead be configured to use the
positive-class interval measures (eu, tu only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy
from scipy.stats import rankdata

from .credal import (
    InputValidationError,
    IntervalSystem,
    intersection_probability,
    reconstruct_intervals,
)
from .entropy import (
    UncertaintyMeasure,
    UncertaintyTriple,
    binary_interval_uncertainty,
    decompose_uncertainty,
)
from .heads import StudentLogits, credit_forward, edd_forward, edd_uncertainty, softmax

__all__ = [
    "ScoredSample",
    "BinStats",
    "EvalReport",
    "EnsemblePredictor",
    "auroc",
    "auprc",
    "ece",
    "reliability_bins",
    "accuracy_rejection_curve",
    "evaluate_model",
    "evaluate_archives",
    "UNCERTAINTY_KINDS",
]

UNCERTAINTY_KINDS = ("eu", "tu", "au")


@dataclass(frozen=True)
class ScoredSample:
    """One evaluated sample: detector score plus prediction bookkeeping."""

    uncertainty: float
    is_ood: bool
    predicted_class: int
    true_class: int | None = None
    confidence: float = float("nan")

    def __post_init__(self):
        if not math.isfinite(self.uncertainty) or self.uncertainty < 0.0:
            raise InputValidationError(
                f"uncertainty must be finite and >= 0, got {self.uncertainty!r}"
            )


@dataclass(frozen=True)
class BinStats:
    bin_index: int
    count: int
    mean_accuracy: float
    mean_confidence: float


def _split_uncertainties(scores):
    u = np.asarray([s.uncertainty for s in scores], dtype=np.float64)
    ood = np.asarray([s.is_ood for s in scores], dtype=bool)
    if not ood.any() or ood.all():
        raise InputValidationError(
            "need at least one in-distribution and one out-of-distribution sample"
        )
    return u, ood


def auroc(scores) -> float:
    """Probability a random OOD score exceeds a random ID score.

    Tie-aware Mann-Whitney rank formulation (ties count one half),
    identical to the trapezoidal ROC area.
    """
    u, ood = _split_uncertainties(scores)
    ranks = rankdata(u)
    n_ood = int(ood.sum())
    n_id = u.size - n_ood
    u_stat = float(ranks[ood].sum()) - n_ood * (n_ood + 1) / 2.0
    return u_stat / (n_id * n_ood)


def auprc(scores) -> float:
    """Average precision of the descending-uncertainty sweep.

    OOD is the positive class; tied scores enter as one threshold group.
    """
    u, ood = _split_uncertainties(scores)
    order = np.argsort(-u, kind="stable")
    u_sorted = u[order]
    ood_sorted = ood[order]
    positives = int(ood.sum())
    # last index of each tied threshold group
    ends = np.concatenate([np.nonzero(np.diff(u_sorted))[0], [u.size - 1]])
    tp_cum = np.cumsum(ood_sorted)
    ap = 0.0
    prev_tp = 0
    for end in ends:
        tp = int(tp_cum[end])
        ap += (tp - prev_tp) / positives * (tp / (end + 1))
        prev_tp = tp
    return ap


def reliability_bins(samples, bins: int = 15) -> list[BinStats]:
    """Equal-width right-closed confidence bins over (0, 1]."""
    if bins < 1:
        raise InputValidationError(f"need at least 1 bin, got {bins}")
    labeled = [s for s in samples if s.true_class is not None]
    if not labeled:
        raise InputValidationError("no labeled samples to bin")
    conf = np.asarray([s.confidence for s in labeled], dtype=np.float64)
    if np.any(~np.isfinite(conf)) or np.any(conf < 0.0) or np.any(conf > 1.0):
        raise InputValidationError("confidences must lie in [0, 1]")
    correct = np.asarray(
        [s.predicted_class == s.true_class for s in labeled], dtype=np.float64
    )
    idx = np.clip(np.ceil(conf * bins).astype(int) - 1, 0, bins - 1)
    out = []
    for g in range(bins):
        mask = idx == g
        count = int(mask.sum())
        if count == 0:
            out.append(BinStats(g, 0, float("nan"), float("nan")))
        else:
            out.append(
                BinStats(g, count, float(correct[mask].mean()), float(conf[mask].mean()))
            )
    return out


def ece(samples, bins: int = 15) -> float:
    """Expected calibration error: bin-weighted |accuracy - confidence|."""
    stats = reliability_bins(samples, bins)
    n = sum(b.count for b in stats)
    return sum(
        b.count / n * abs(b.mean_accuracy - b.mean_confidence)
        for b in stats
        if b.count > 0
    )


def accuracy_rejection_curve(samples):
    """Accuracy after rejecting the k most uncertain samples, k = 0..N-1.

    Sorting is descending by uncertainty with ties kept in input order.
    Returns ``(curve, auarc)`` where curve is a list of
    ``(rejection_rate, accuracy)`` pairs and auarc their mean accuracy.
    """
    labeled = [s for s in samples if s.true_class is not None]
    n = len(labeled)
    if n < 2:
        raise InputValidationError(f"need at least 2 labeled samples, got {n}")
    u = np.asarray([s.uncertainty for s in labeled], dtype=np.float64)
    correct = np.asarray(
        [s.predicted_class == s.true_class for s in labeled], dtype=np.float64
    )
    order = np.argsort(-u, kind="stable")
    sorted_correct = correct[order]
    # correct counts among the samples that survive rejecting the k most uncertain
    surviving = np.cumsum(sorted_correct[::-1])[::-1]
    curve = [(k / n, float(surviving[k] / (n - k))) for k in range(n)]
    auarc = float(np.mean([acc for _, acc in curve]))
    return curve, auarc


# ---------------------------------------------------------------------------
# Model evaluation


@dataclass(frozen=True)
class EnsemblePredictor:
    """A list of trained members evaluated jointly.

    ``wrapped`` selects the credal-interval uncertainty path instead of
    the ensemble-disagreement one.
    """

    members: tuple
    wrapped: bool = False

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InputValidationError("need at least one ensemble member")
        counts = {m.class_count for m in members}
        if len(counts) != 1:
            raise InputValidationError(
                f"ensemble members disagree on class count: {sorted(counts)}"
            )
        object.__setattr__(self, "members", members)

    @property
    def method(self) -> str:
        return "de_wrapped" if self.wrapped else "de"

    @property
    def class_count(self) -> int:
        return self.members[0].class_count

    def member_probs(self, x) -> np.ndarray:
        return softmax(np.stack([m.logits(x) for m in self.members]), axis=-1)


class _ArchiveBacked:
    """Adapter presenting a logit archive as an ensemble predictor."""

    def __init__(self, archive, wrapped: bool):
        self.archive = archive
        self.wrapped = wrapped
        self.class_count = archive.class_count

    @property
    def method(self) -> str:
        return "de_wrapped" if self.wrapped else "de"

    def member_probs(self, x) -> np.ndarray:
        probs = softmax(self.archive.logits, axis=-1)
        if x is not None:
            raise InputValidationError("archive-backed predictors take no features")
        return probs


@dataclass(frozen=True)
class EvalReport:
    method: str
    uncertainty_kind: str
    measure: UncertaintyMeasure
    auroc: float
    auprc: float
    id_accuracy: float
    ece: float
    ar_curve: tuple
    auarc: float
    id_uncertainties: np.ndarray
    ood_uncertainties: np.ndarray
    exact: bool
    ece_bins: int

    def metric_rows(self):
        """(metric, value) pairs for the CSV report."""
        return [
            ("auroc", self.auroc),
            ("auprc", self.auprc),
            ("id_accuracy", self.id_accuracy),
            ("ece", self.ece),
            ("auarc", self.auarc),
        ]


def _entropy_rows(mat: np.ndarray) -> np.ndarray:
    return np.maximum(-xlogy(mat, mat).sum(axis=1), 0.0)


def _records_from_member_probs(probs: np.ndarray, wrapped: bool, binary_measure: bool):
    records = []
    if binary_measure:
        for b in range(probs.shape[1]):
            lower = probs[:, b, :].min(axis=0)
            upper = probs[:, b, :].max(axis=0)
            eu, tu = binary_interval_uncertainty(lower[1], upper[1])
            mean = probs[:, b, :].mean(axis=0)
            records.append(({"eu": eu, "tu": tu}, float(mean.max()), int(np.argmax(mean)), True))
        return records
    if wrapped:
        for b in range(probs.shape[1]):
            system = IntervalSystem(probs[:, b, :].min(axis=0), probs[:, b, :].max(axis=0))
            triple = decompose_uncertainty(system)
            p_star, _ = intersection_probability(system)
            kinds = {"eu": triple.epistemic, "tu": triple.total, "au": triple.aleatoric}
            records.append((kinds, float(p_star.max()), int(np.argmax(p_star)), triple.exact))
        return records
    mean = probs.mean(axis=0)
    total = _entropy_rows(mean)
    member_entropy = np.maximum(-xlogy(probs, probs).sum(axis=2), 0.0).mean(axis=0)
    for b in range(probs.shape[1]):
        aleatoric = min(float(member_entropy[b]), float(total[b]))
        triple = UncertaintyTriple(
            total=float(total[b]),
            aleatoric=aleatoric,
            epistemic=float(total[b]) - aleatoric,
            measure=UncertaintyMeasure.ENSEMBLE_MI,
        )
        kinds = {"eu": triple.epistemic, "tu": triple.total, "au": triple.aleatoric}
        records.append((kinds, float(mean[b].max()), int(np.argmax(mean[b])), True))
    return records


def _score_rows(predictor, x, binary_measure: bool):
    """Per-sample (kinds dict, confidence, predicted_class, exact) records."""
    method = predictor.method
    if binary_measure:
        if method not in ("ced", "de_wrapped"):
            raise InputValidationError(
                f"the binary interval measure needs a credal model, not {method.upper()}"
            )
        if predictor.class_count != 2:
            raise InputValidationError(
                f"the binary interval measure needs C = 2, got C = {predictor.class_count}"
            )

    if method in ("ed", "snn"):
        probs = softmax(predictor.logits(x), axis=-1)
        total = _entropy_rows(probs)
        return [
            ({"tu": float(total[b])}, float(probs[b].max()), int(np.argmax(probs[b])), True)
            for b in range(probs.shape[0])
        ]

    if method == "edd":
        z = predictor.logits(x)
        records = []
        for b in range(z.shape[0]):
            pred = edd_forward(z[b])
            triple = edd_uncertainty(pred)
            kinds = {"eu": triple.epistemic, "tu": triple.total, "au": triple.aleatoric}
            records.append((kinds, float(pred.pi.max()), int(np.argmax(pred.pi)), True))
        return records

    if method == "ced":
        z = predictor.logits(x)
        count = predictor.class_count
        records = []
        for b in range(z.shape[0]):
            pred = credit_forward(StudentLogits(z[b], temperature=1.0, class_count=count))
            intervals = reconstruct_intervals(pred)
            if binary_measure:
                eu, tu = binary_interval_uncertainty(intervals.lower[1], intervals.upper[1])
                kinds = {"eu": eu, "tu": tu}
                exact = True
            else:
                triple = decompose_uncertainty(intervals)
                kinds = {"eu": triple.epistemic, "tu": triple.total, "au": triple.aleatoric}
                exact = triple.exact
            records.append((kinds, float(pred.p_star.max()), int(np.argmax(pred.p_star)), exact))
        return records

    if method in ("de", "de_wrapped"):
        probs = predictor.member_probs(x)
        return _records_from_member_probs(probs, predictor.method == "de_wrapped", binary_measure)

    raise InputValidationError(f"unknown prediction method {method!r}")


def _pick_kind(kinds: dict, kind: str, method: str, binary_measure: bool) -> float:
    if kind not in kinds:
        if binary_measure:
            raise InputValidationError(
                f"the binary interval measure provides EU and TU only; requested {kind!r}"
            )
        raise InputValidationError(
            f"{method.upper()} provides TU only; requested {kind!r}"
        )
    return kinds[kind]


def _assemble_report(
    method, id_records, ood_records, id_labels, kind, binary_measure, ece_bins
) -> EvalReport:
    if kind not in UNCERTAINTY_KINDS:
        raise InputValidationError(
            f"unknown uncertainty kind {kind!r}; choose from {UNCERTAINTY_KINDS}"
        )
    if np.any(np.asarray(id_labels) < 0):
        raise InputValidationError("in-distribution data must be fully labeled")
    id_samples = [
        ScoredSample(
            uncertainty=_pick_kind(kinds, kind, method, binary_measure),
            is_ood=False,
            predicted_class=cls,
            true_class=int(label),
            confidence=conf,
        )
        for (kinds, conf, cls, _), label in zip(id_records, id_labels)
    ]
    ood_samples = [
        ScoredSample(
            uncertainty=_pick_kind(kinds, kind, method, binary_measure),
            is_ood=True,
            predicted_class=cls,
            true_class=None,
            confidence=conf,
        )
        for kinds, conf, cls, _ in ood_records
    ]
    curve, auarc_value = accuracy_rejection_curve(id_samples)
    return EvalReport(
        method=method,
        uncertainty_kind=kind,
        measure=_measure_for(method, binary_measure),
        auroc=auroc(id_samples + ood_samples),
        auprc=auprc(id_samples + ood_samples),
        id_accuracy=float(
            np.mean([s.predicted_class == s.true_class for s in id_samples])
        ),
        ece=ece(id_samples, ece_bins),
        ar_curve=tuple(curve),
        auarc=auarc_value,
        id_uncertainties=np.asarray([s.uncertainty for s in id_samples]),
        ood_uncertainties=np.asarray([s.uncertainty for s in ood_samples]),
        exact=all(r[3] for r in id_records + ood_records),
        ece_bins=ece_bins,
    )


def _measure_for(method: str, binary_measure: bool) -> UncertaintyMeasure:
    if binary_measure:
        return UncertaintyMeasure.BINARY_INTERVAL
    if method in ("ced", "de_wrapped"):
        return UncertaintyMeasure.CREDAL_ENTROPY
    if method == "de":
        return UncertaintyMeasure.ENSEMBLE_MI
    if method == "edd":
        return UncertaintyMeasure.DIRICHLET
    return UncertaintyMeasure.CREDAL_ENTROPY  # ed/snn: tu is plain Shannon


def evaluate_model(
    predictor,
    id_data,
    ood_data,
    uncertainty_kind: str,
    *,
    ece_bins: int = 15,
    binary_measure: bool = False,
) -> EvalReport:
    """Run the full detection + calibration protocol for one model.

    ``predictor`` is a trained student or an :class:`EnsemblePredictor`;
    its method decides which uncertainty kinds exist (see module notes).
    ``id_data`` must carry labels; ``ood_data`` labels are ignored.
    """
    id_records = _score_rows(predictor, np.asarray(id_data.x, dtype=np.float64), binary_measure)
    ood_records = _score_rows(predictor, np.asarray(ood_data.x, dtype=np.float64), binary_measure)
    return _assemble_report(
        predictor.method, id_records, ood_records, id_data.y,
        uncertainty_kind, binary_measure, ece_bins,
    )


def evaluate_archives(
    id_archive,
    ood_archive,
    uncertainty_kind: str,
    *,
    wrapped: bool = True,
    ece_bins: int = 15,
    binary_measure: bool = False,
) -> EvalReport:
    """Detection protocol over two prediction archives (ID vs OOD).

    The archive members act as the ensemble; ``wrapped`` selects credal
    intervals over raw ensemble disagreement.
    """
    if id_archive.class_count != ood_archive.class_count:
        raise InputValidationError(
            f"archives disagree on class count: {id_archive.class_count} vs "
            f"{ood_archive.class_count}"
        )
    id_records = _score_rows(_ArchiveBacked(id_archive, wrapped), None, binary_measure)
    ood_records = _score_rows(_ArchiveBacked(ood_archive, wrapped), None, binary_measure)
    return _assemble_report(
        "de_wrapped" if wrapped else "de", id_records, ood_records, id_archive.labels,
        uncertainty_kind, binary_measure, ece_bins,
    )
