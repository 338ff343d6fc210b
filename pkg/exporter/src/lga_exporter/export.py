"""Run an externally trained ensemble over a dataset and dump logits.

The output is a .lga archive: a small text header (class, member, and
sample counts plus provenance tags) followed by per-sample rows of raw
pre-softmax float64 logits, one column block per member, in the same
row order as the input dataset.  Floats are printed with 17 significant
digits, so the text form round-trips bit-exactly; a binary form with
little-endian float64 tables sits behind a flag.

Models are TorchScript files; they are run in eval mode, without
augmentation or shuffling, so the same job always produces a
byte-identical archive.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

__all__ = ["ExportError", "ExportJob", "export"]

_MAGIC = "LGA1"
_CREATOR = "lga-exporter/0.1.0"


class ExportError(Exception):
    """Bad job configuration or inconsistent models/data."""


@dataclass(frozen=True)
class ExportJob:
    """One export run: M model files, a dataset CSV, an output path."""

    model_paths: tuple[str, ...]
    data_path: str
    out_path: str
    batch_size: int = 256
    device: str = "cpu"
    split: str = "export"
    binary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "model_paths", tuple(str(p) for p in self.model_paths))
        if len(self.model_paths) < 1:
            raise ExportError("need at least one model")
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")


def _load_dataset(path: str):
    """CSV with x0..x{d-1},label columns; returns (features, labels)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ExportError(f"cannot read dataset {path}: {exc}") from None
    if not lines:
        raise ExportError(f"{path}: empty dataset")
    header = lines[0].split(",")
    if header[-1] != "label" or any(not h.startswith("x") for h in header[:-1]):
        raise ExportError(f"{path}: expected columns x0..x{{d-1}},label, got {lines[0]!r}")
    dim = len(header) - 1
    rows = lines[1:]
    if not rows:
        raise ExportError(f"{path}: dataset has no rows")
    features = np.empty((len(rows), dim), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    for i, line in enumerate(rows):
        cells = line.split(",")
        if len(cells) != dim + 1:
            raise ExportError(f"{path}: row {i} has {len(cells)} fields, expected {dim + 1}")
        features[i] = [float(v) for v in cells[:-1]]
        labels[i] = int(cells[-1])
    return features, labels


def _load_models(paths, device):
    models = []
    for path in paths:
        if not Path(path).exists():
            raise ExportError(f"no such model file: {path}")
        try:
            model = torch.jit.load(path, map_location=device)
        except Exception as exc:
            raise ExportError(f"cannot load TorchScript model {path}: {exc}") from None
        model.eval()
        models.append(model)
    return models


def _member_logits(model, features, batch_size, device):
    chunks = []
    with torch.no_grad():
        for start in range(0, features.shape[0], batch_size):
            batch = torch.as_tensor(
                features[start : start + batch_size], dtype=torch.float64, device=device
            )
            out = model(batch)
            if out.ndim != 2:
                raise ExportError(f"model output must be (batch, C), got shape {tuple(out.shape)}")
            chunks.append(out.to(torch.float64).cpu().numpy())
    return np.concatenate(chunks, axis=0)


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def _header(class_count, member_count, sample_count, split, encoding) -> str:
    return (
        f"{_MAGIC}\n"
        f"encoding = {encoding}\n"
        f"class_count = {class_count}\n"
        f"member_count = {member_count}\n"
        f"sample_count = {sample_count}\n"
        f"split = {split}\n"
        f"creator = {_CREATOR}\n"
        "prescaled_temperature = none\n"
        "end_header\n"
    )


def _write_csv(path, logits, labels, split) -> None:
    members, samples, classes = logits.shape
    out = io.StringIO()
    out.write(_header(classes, members, samples, split, "csv"))
    columns = ["label"] + [f"m{i}c{k}" for i in range(members) for k in range(classes)]
    out.write(",".join(columns) + "\n")
    flat = np.transpose(logits, (1, 0, 2)).reshape(samples, -1)
    for row in range(samples):
        cells = [str(int(labels[row]))]
        cells.extend(_format_float(v) for v in flat[row])
        out.write(",".join(cells) + "\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(out.getvalue())


def _write_binary(path, logits, labels, split) -> None:
    members, samples, classes = logits.shape
    with open(path, "wb") as fh:
        fh.write(_header(classes, members, samples, split, "binary").encode("ascii"))
        fh.write(labels.astype("<i8").tobytes())
        fh.write(np.ascontiguousarray(logits, dtype="<f8").tobytes())


def export(job: ExportJob) -> str:
    """Run the job and write the archive; returns the output path."""
    features, labels = _load_dataset(job.data_path)
    models = _load_models(job.model_paths, job.device)

    # dry-run probe: every member must agree on the class count
    probe = features[: min(2, features.shape[0])]
    class_counts = []
    for path, model in zip(job.model_paths, models):
        out = _member_logits(model, probe, job.batch_size, job.device)
        class_counts.append(out.shape[1])
    if len(set(class_counts)) != 1:
        pairs = ", ".join(f"{p}: {c}" for p, c in zip(job.model_paths, class_counts))
        raise ExportError(f"models disagree on class count ({pairs})")
    class_count = class_counts[0]
    if class_count < 2:
        raise ExportError(f"models must output at least 2 classes, got {class_count}")
    if labels.min() < 0 or labels.max() >= class_count:
        bad = int(np.argmax((labels < 0) | (labels >= class_count)))
        raise ExportError(
            f"label {labels[bad]} at row {bad} outside [0, {class_count})"
        )

    logits = np.stack(
        [_member_logits(m, features, job.batch_size, job.device) for m in models]
    )
    if not np.isfinite(logits).all():
        member, row, col = (int(v[0]) for v in np.nonzero(~np.isfinite(logits)))
        raise ExportError(f"non-finite logit at (member {member}, row {row}, col {col})")

    writer = _write_binary if job.binary else _write_csv
    writer(job.out_path, logits, labels, job.split)
    return job.out_path
