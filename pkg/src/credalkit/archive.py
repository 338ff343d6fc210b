"""The .lga logit-archive format.

An archive carries the raw (pre-softmax) logits of M ensemble members
over N samples plus integer labels, and is the interchange contract
between external trainers, the exporter, and this library.

Two encodings share one header layout and are selected by extension:
paths ending in ``.csv`` use an all-text encoding (one row per sample,
floats printed with 17 significant digits so values round-trip
bit-exactly); anything else uses little-endian binary float64 tables.
Schema violations are detected fully at read time, before any
computation touches the data.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

__all__ = ["ArchiveError", "ArchiveManifest", "LogitArchive", "read_archive", "write_archive", "format_float"]

_MAGIC = "LGA1"
_HEADER_KEYS = (
    "encoding",
    "class_count",
    "member_count",
    "sample_count",
    "split",
    "creator",
    "prescaled_temperature",
)


class ArchiveError(Exception):
    """Archive I/O or schema failure; ``code`` is machine-readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def format_float(x: float) -> str:
    """17-significant-digit decimal; round-trips any float64 exactly."""
    return f"{x:.17g}"


@dataclass(frozen=True)
class ArchiveManifest:
    class_count: int
    member_count: int
    sample_count: int
    split: str = "unspecified"
    creator: str = "unknown"
    prescaled_temperature: float | None = None

    def __post_init__(self):
        if self.class_count < 2:
            raise ArchiveError("bad_manifest", f"class_count must be >= 2, got {self.class_count}")
        if self.member_count < 1:
            raise ArchiveError("bad_manifest", f"member_count must be >= 1, got {self.member_count}")
        if self.sample_count < 1:
            raise ArchiveError("bad_manifest", f"sample_count must be >= 1, got {self.sample_count}")
        for name in ("split", "creator"):
            text = getattr(self, name)
            if "\n" in text or "\r" in text:
                raise ArchiveError("bad_manifest", f"{name} must not contain newlines")
        if self.prescaled_temperature is not None and not self.prescaled_temperature > 0.0:
            raise ArchiveError(
                "bad_manifest",
                f"prescaled_temperature must be > 0, got {self.prescaled_temperature}",
            )


@dataclass(frozen=True)
class LogitArchive:
    """Manifest plus (M, N, C) logits and (N,) labels, fully validated."""

    manifest: ArchiveManifest
    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        logits = np.ascontiguousarray(np.asarray(self.logits, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        m = self.manifest
        if logits.ndim != 3:
            raise ArchiveError("bad_shape", f"logits must be (M, N, C), got {logits.shape}")
        if labels.ndim != 1:
            raise ArchiveError("bad_shape", f"labels must be (N,), got {labels.shape}")
        if logits.shape[0] != m.member_count:
            raise ArchiveError(
                "member_count_mismatch",
                f"manifest says {m.member_count} members but {logits.shape[0]} tables present",
            )
        if logits.shape[1] != m.sample_count or labels.shape[0] != m.sample_count:
            raise ArchiveError(
                "sample_count_mismatch",
                f"manifest says {m.sample_count} samples but tables have "
                f"{logits.shape[1]} rows and {labels.shape[0]} labels",
            )
        if logits.shape[2] != m.class_count:
            raise ArchiveError(
                "class_count_mismatch",
                f"manifest says {m.class_count} classes but tables have {logits.shape[2]} columns",
            )
        finite = np.isfinite(logits)
        if not finite.all():
            member, row, col = (int(v[0]) for v in np.nonzero(~finite))
            raise ArchiveError(
                "non_finite_value",
                f"non-finite value at (member {member}, row {row}, col {col})",
            )
        if labels.min() < 0 or labels.max() >= m.class_count:
            bad = int(np.argmax((labels < 0) | (labels >= m.class_count)))
            raise ArchiveError(
                "label_out_of_range",
                f"label {labels[bad]} at row {bad} outside [0, {m.class_count})",
            )
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)

    @property
    def class_count(self) -> int:
        return self.manifest.class_count

    @property
    def member_count(self) -> int:
        return self.manifest.member_count

    @property
    def sample_count(self) -> int:
        return self.manifest.sample_count


def _header_lines(manifest: ArchiveManifest, encoding: str) -> str:
    pre = manifest.prescaled_temperature
    values = {
        "encoding": encoding,
        "class_count": str(manifest.class_count),
        "member_count": str(manifest.member_count),
        "sample_count": str(manifest.sample_count),
        "split": manifest.split,
        "creator": manifest.creator,
        "prescaled_temperature": "none" if pre is None else format_float(pre),
    }
    body = "".join(f"{key} = {values[key]}\n" for key in _HEADER_KEYS)
    return f"{_MAGIC}\n{body}end_header\n"


def _parse_header(lines: list[str], path: str):
    if not lines or lines[0].strip() != _MAGIC:
        raise ArchiveError("bad_magic", f"{path}: not a {_MAGIC} archive")
    fields: dict[str, str] = {}
    end = None
    for i, line in enumerate(lines[1:], start=1):
        stripped = line.strip()
        if stripped == "end_header":
            end = i
            break
        if " = " not in stripped:
            raise ArchiveError("bad_header", f"{path}: malformed header line {stripped!r}")
        key, value = stripped.split(" = ", 1)
        if key not in _HEADER_KEYS:
            raise ArchiveError("bad_header", f"{path}: unknown header key {key!r}")
        if key in fields:
            raise ArchiveError("bad_header", f"{path}: duplicate header key {key!r}")
        fields[key] = value
    if end is None:
        raise ArchiveError("truncated_file", f"{path}: missing end_header")
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise ArchiveError("bad_header", f"{path}: missing header keys {missing}")
    try:
        pre = fields["prescaled_temperature"]
        manifest = ArchiveManifest(
            class_count=int(fields["class_count"]),
            member_count=int(fields["member_count"]),
            sample_count=int(fields["sample_count"]),
            split=fields["split"],
            creator=fields["creator"],
            prescaled_temperature=None if pre == "none" else float(pre),
        )
    except ValueError as exc:
        raise ArchiveError("bad_header", f"{path}: {exc}") from None
    return manifest, fields["encoding"], end


def write_archive(archive: LogitArchive, path) -> None:
    """Write an archive; the ``.csv`` extension selects the text form."""
    path = str(path)
    if path.endswith(".csv"):
        _write_csv(archive, path)
    else:
        _write_binary(archive, path)


def read_archive(path) -> LogitArchive:
    """Read and fully validate an archive (either encoding)."""
    path = str(path)
    if path.endswith(".csv"):
        return _read_csv(path)
    return _read_binary(path)


def _write_binary(archive: LogitArchive, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(_header_lines(archive.manifest, "binary").encode("ascii"))
        fh.write(archive.labels.astype("<i8").tobytes())
        fh.write(archive.logits.astype("<f8").tobytes())


def _read_binary(path: str) -> LogitArchive:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ArchiveError("io_error", f"{path}: {exc}") from None
    marker = b"end_header\n"
    pos = blob.find(marker)
    if pos < 0:
        raise ArchiveError("truncated_file", f"{path}: missing end_header")
    try:
        header_text = blob[: pos + len(marker)].decode("ascii")
    except UnicodeDecodeError:
        raise ArchiveError("bad_header", f"{path}: header is not ASCII") from None
    manifest, encoding, _ = _parse_header(header_text.splitlines(), path)
    if encoding != "binary":
        raise ArchiveError("bad_header", f"{path}: expected binary encoding, got {encoding!r}")
    payload = blob[pos + len(marker) :]
    n, m, c = manifest.sample_count, manifest.member_count, manifest.class_count
    label_bytes = n * 8
    table_bytes = n * c * 8
    expected = label_bytes + m * table_bytes
    if len(payload) != expected:
        deficit = expected - len(payload)
        if deficit > 0 and deficit % table_bytes == 0:
            found = m - deficit // table_bytes
            raise ArchiveError(
                "member_count_mismatch",
                f"{path}: manifest says {m} members but {found} member tables present",
            )
        raise ArchiveError(
            "truncated_file",
            f"{path}: expected {expected} payload bytes, found {len(payload)}",
        )
    labels = np.frombuffer(payload[:label_bytes], dtype="<i8").copy()
    logits = (
        np.frombuffer(payload[label_bytes:], dtype="<f8").reshape(m, n, c).copy()
    )
    return LogitArchive(manifest=manifest, logits=logits, labels=labels)


def _write_csv(archive: LogitArchive, path: str) -> None:
    m = archive.manifest
    out = io.StringIO()
    out.write(_header_lines(m, "csv"))
    columns = ["label"] + [
        f"m{i}c{k}" for i in range(m.member_count) for k in range(m.class_count)
    ]
    out.write(",".join(columns) + "\n")
    # (N, M*C) view: per row, member-major logit columns
    flat = np.transpose(archive.logits, (1, 0, 2)).reshape(m.sample_count, -1)
    for row in range(m.sample_count):
        cells = [str(int(archive.labels[row]))]
        cells.extend(format_float(v) for v in flat[row])
        out.write(",".join(cells) + "\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(out.getvalue())


def _read_csv(path: str) -> LogitArchive:
    try:
        with open(path, "r", encoding="ascii", newline=None) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ArchiveError("io_error", f"{path}: {exc}") from None
    manifest, encoding, end = _parse_header(lines, path)
    if encoding != "csv":
        raise ArchiveError("bad_header", f"{path}: expected csv encoding, got {encoding!r}")
    n, m, c = manifest.sample_count, manifest.member_count, manifest.class_count
    body = lines[end + 1 :]
    if not body:
        raise ArchiveError("truncated_file", f"{path}: missing column header row")
    data_rows = body[1:]
    if len(data_rows) < n:
        raise ArchiveError(
            "truncated_file", f"{path}: expected {n} data rows, found {len(data_rows)}"
        )
    if len(data_rows) > n:
        raise ArchiveError(
            "sample_count_mismatch",
            f"{path}: manifest says {n} samples but {len(data_rows)} data rows present",
        )
    labels = np.empty(n, dtype=np.int64)
    flat = np.empty((n, m * c), dtype=np.float64)
    for row, line in enumerate(data_rows):
        cells = line.split(",")
        if len(cells) != 1 + m * c:
            if (len(cells) - 1) % c == 0:
                raise ArchiveError(
                    "member_count_mismatch",
                    f"{path}: row {row} carries {(len(cells) - 1) // c} member tables, "
                    f"manifest says {m}",
                )
            raise ArchiveError(
                "truncated_file",
                f"{path}: row {row} has {len(cells)} fields, expected {1 + m * c}",
            )
        try:
            labels[row] = int(cells[0])
            flat[row] = [float(v) for v in cells[1:]]
        except ValueError as exc:
            raise ArchiveError("bad_value", f"{path}: row {row}: {exc}") from None
    logits = np.transpose(flat.reshape(n, m, c), (1, 0, 2)).copy()
    return LogitArchive(manifest=manifest, logits=logits, labels=labels)
