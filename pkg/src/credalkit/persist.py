"""On-disk form of trained models and their run manifests.

A model directory holds ``weights.bin`` (text header + little-endian
float64 parameter blobs in a fixed order) and ``manifest.txt`` (flat
``key = value`` run record: config snapshot, seeds, method, teacher
reference, loss and learning-rate histories).

Output files are bit-exact functions of (inputs, config, seeds).  The
manifest's ``created`` field would break that, so it is stamped from
``SOURCE_DATE_EPOCH`` when that variable is set and is the literal
``unset`` otherwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import ArchiveError, format_float
from .credal import InputValidationError
from .train import Mlp, MlpSpec, TrainConfig, TrainedModel

__all__ = ["RunManifest", "save_model", "load_model", "manifest_from_model"]

ARTIFACT_VERSION = "0.1.0"

_WEIGHTS_MAGIC = "MDL1"
_MANIFEST_MAGIC = "RUN1"


def _created_stamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return f"epoch:{int(epoch)}" if epoch else "unset"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to attribute and reproduce one training run."""

    method: str
    teacher_ref: str
    config: TrainConfig
    weight_seed: int
    loss_history: tuple[float, ...]
    lr_history: tuple[float, ...]
    artifact_version: str = ARTIFACT_VERSION
    created: str = "unset"


def manifest_from_model(model: TrainedModel) -> RunManifest:
    return RunManifest(
        method=model.method,
        teacher_ref=model.teacher_ref,
        config=model.config,
        weight_seed=model.mlp.spec.seed,
        loss_history=model.loss_history,
        lr_history=model.lr_history,
        created=_created_stamp(),
    )


def _history_text(values) -> str:
    return ",".join(format_float(v) for v in values) if values else "none"


def _history_parse(text: str):
    if text == "none":
        return ()
    return tuple(float(v) for v in text.split(","))


def save_model(model: TrainedModel, directory) -> None:
    """Write ``weights.bin`` and ``manifest.txt`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec = model.mlp.spec
    header = (
        f"{_WEIGHTS_MAGIC}\n"
        f"input_dim = {spec.input_dim}\n"
        f"hidden_dims = {','.join(str(h) for h in spec.hidden_dims) or 'none'}\n"
        f"output_dim = {spec.output_dim}\n"
        f"activation = {spec.activation}\n"
        f"weight_seed = {spec.seed}\n"
        f"method = {model.method}\n"
        f"class_count = {model.class_count}\n"
        "end_header\n"
    )
    with open(directory / "weights.bin", "wb") as fh:
        fh.write(header.encode("ascii"))
        for arr in model.mlp.state_arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    manifest = manifest_from_model(model)
    cfg = manifest.config
    text = (
        f"{_MANIFEST_MAGIC}\n"
        f"artifact_version = {manifest.artifact_version}\n"
        f"created = {manifest.created}\n"
        f"method = {manifest.method}\n"
        f"teacher = {manifest.teacher_ref}\n"
        f"epochs = {cfg.epochs}\n"
        f"batch_size = {cfg.batch_size}\n"
        f"learning_rate = {format_float(cfg.learning_rate)}\n"
        f"lr_drop_epoch = {cfg.lr_drop_epoch}\n"
        f"lr_drop_factor = {format_float(cfg.lr_drop_factor)}\n"
        f"temperature = {format_float(cfg.temperature)}\n"
        f"optimizer = {cfg.optimizer}\n"
        f"shuffle_seed = {cfg.seed}\n"
        f"weight_seed = {manifest.weight_seed}\n"
        f"loss_history = {_history_text(manifest.loss_history)}\n"
        f"lr_history = {_history_text(manifest.lr_history)}\n"
    )
    with open(directory / "manifest.txt", "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


class _KvBlock(dict):
    """Header fields; missing keys surface as schema errors."""

    def __init__(self, fields, path):
        super().__init__(fields)
        self._path = path

    def __missing__(self, key):
        raise ArchiveError("bad_header", f"{self._path}: missing header key {key!r}")


def _parse_kv_block(lines, magic, path):
    if not lines or lines[0].strip() != magic:
        raise ArchiveError("bad_magic", f"{path}: expected {magic} header")
    fields = {}
    end = len(lines)
    for i, line in enumerate(lines[1:], start=1):
        stripped = line.strip()
        if stripped == "end_header":
            end = i
            break
        if " = " not in stripped:
            raise ArchiveError("bad_header", f"{path}: malformed line {stripped!r}")
        key, value = stripped.split(" = ", 1)
        fields[key] = value
    return _KvBlock(fields, path), end


def load_model(directory) -> TrainedModel:
    """Rebuild a :class:`TrainedModel` from a model directory."""
    directory = Path(directory)
    weights_path = directory / "weights.bin"
    manifest_path = directory / "manifest.txt"
    if not weights_path.exists() or not manifest_path.exists():
        raise InputValidationError(
            f"{directory} is not a model directory (needs weights.bin and manifest.txt)"
        )
    blob = weights_path.read_bytes()
    marker = b"end_header\n"
    pos = blob.find(marker)
    if pos < 0:
        raise ArchiveError("truncated_file", f"{weights_path}: missing end_header")
    fields, _ = _parse_kv_block(
        blob[:pos].decode("ascii").splitlines() + ["end_header"], _WEIGHTS_MAGIC, weights_path
    )
    hidden_text = fields["hidden_dims"]
    hidden = () if hidden_text == "none" else tuple(int(h) for h in hidden_text.split(","))
    spec = MlpSpec(
        input_dim=int(fields["input_dim"]),
        hidden_dims=hidden,
        output_dim=int(fields["output_dim"]),
        activation=fields["activation"],
        seed=int(fields["weight_seed"]),
    )
    mlp = Mlp(spec)
    payload = blob[pos + len(marker) :]
    arrays = []
    offset = 0
    for template in mlp.state_arrays():
        nbytes = template.size * 8
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise ArchiveError("truncated_file", f"{weights_path}: parameter blob cut short")
        arrays.append(np.frombuffer(chunk, dtype="<f8").reshape(template.shape))
        offset += nbytes
    if offset != len(payload):
        raise ArchiveError(
            "truncated_file", f"{weights_path}: {len(payload) - offset} trailing bytes"
        )
    mlp.load_state_arrays(arrays)

    mlines = manifest_path.read_text(encoding="ascii").splitlines()
    mfields, _ = _parse_kv_block(mlines + ["end_header"], _MANIFEST_MAGIC, manifest_path)
    cfg = TrainConfig(
        epochs=int(mfields["epochs"]),
        batch_size=int(mfields["batch_size"]),
        learning_rate=float(mfields["learning_rate"]),
        lr_drop_epoch=int(mfields["lr_drop_epoch"]),
        lr_drop_factor=float(mfields["lr_drop_factor"]),
        temperature=float(mfields["temperature"]),
        optimizer=mfields["optimizer"],
        seed=int(mfields["shuffle_seed"]),
    )
    return TrainedModel(
        mlp=mlp,
        method=fields["method"],
        class_count=int(fields["class_count"]),
        config=cfg,
        teacher_ref=mfields["teacher"],
        loss_history=_history_parse(mfields["loss_history"]),
        lr_history=_history_parse(mfields["lr_history"]),
    )
