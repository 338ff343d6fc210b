"""MLP training and ensemble distillation at desk scale.

Teachers are small seeded MLPs (or an archive of their logits); the
credal student is the same backbone with a 2C+1-wide head.  Every run
is deterministic given its seeds: weight init and data shuffling use
separate generators, and batch reductions use a fixed summation order.

The credal distillation step per batch is:

1. scale each member's logits by 1/T and softmax them,
2. wrap the member distributions into per-class intervals and extract
   (p*, delta, beta) as the teacher label,
3. forward the student, dividing only its first C logits by T,
4. minimize T^2 * (cross-entropy on p* + squared errors on delta, beta).

Plain distillation uses the temperature-scaled mean soft label with the
same T^2 factor; Dirichlet distillation uses the likelihood loss on
unscaled member probabilities and no T^2 factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .archive import LogitArchive
from .credal import InputValidationError
from .heads import LOG_CLAMP, softmax

__all__ = [
    "MlpSpec",
    "TrainConfig",
    "Mlp",
    "Adam",
    "Sgd",
    "TrainedModel",
    "train_snn",
    "train_snn_ensemble",
    "distill",
    "batch_credal_labels",
    "head_width",
]

_ACTIVATIONS = {"relu": ad.relu, "tanh": ad.tanh}
_ACTIVATIONS_NP = {"relu": lambda x: np.maximum(x, 0.0), "tanh": np.tanh}


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a dense network; ``seed`` drives weight init.

    tanh is the default: its saturating far field keeps ensemble
    members genuinely disagreeing away from the data, which is what
    interval-based uncertainty feeds on; relu nets extrapolate
    one-hot-confidently and are available for comparison runs.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d < 1 for d in dims):
            raise InputValidationError(f"all layer dims must be >= 1, got {dims}")
        if self.activation not in _ACTIVATIONS:
            raise InputValidationError(
                f"unknown activation {self.activation!r}; choose from {sorted(_ACTIVATIONS)}"
            )


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; ``seed`` drives data shuffling only."""

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    lr_drop_epoch: int = 80
    lr_drop_factor: float = 0.1
    temperature: float = 1.0
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise InputValidationError(f"temperature must be > 0, got {self.temperature!r}")
        if self.learning_rate <= 0.0:
            raise InputValidationError(
                f"learning rate must be > 0, got {self.learning_rate!r}"
            )
        if self.batch_size < 1:
            raise InputValidationError(f"batch size must be >= 1, got {self.batch_size!r}")
        if self.epochs < 1:
            raise InputValidationError(f"epochs must be >= 1, got {self.epochs!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise InputValidationError(f"unknown optimizer {self.optimizer!r}")


class Mlp:
    """Dense network with glorot-uniform weights and zero biases."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        dims = (spec.input_dim, *spec.hidden_dims, spec.output_dim)
        self.weights: list[ad.Tensor] = []
        self.biases: list[ad.Tensor] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.weights.append(ad.Tensor(w, requires_grad=True))
            self.biases.append(ad.Tensor(np.zeros(fan_out), requires_grad=True))

    def parameters(self) -> list[ad.Tensor]:
        params: list[ad.Tensor] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def forward(self, x) -> ad.Tensor:
        """Graph-building forward pass; input is (batch, input_dim)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise InputValidationError(
                f"expected input of shape (batch, {self.spec.input_dim}), got {x.shape}"
            )
        act = _ACTIVATIONS[self.spec.activation]
        h = ad.Tensor(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add(ad.matmul(h, w), b)
            if i != last:
                h = act(h)
        return h

    def logits(self, x) -> np.ndarray:
        """Plain numpy forward pass (no graph)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise InputValidationError(
                f"expected input of shape (batch, {self.spec.input_dim}), got {x.shape}"
            )
        act = _ACTIVATIONS_NP[self.spec.activation]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.values + b.values
            if i != last:
                h = act(h)
        return h

    def state_arrays(self) -> list[np.ndarray]:
        return [p.values for p in self.parameters()]

    def load_state_arrays(self, arrays) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise InputValidationError(
                f"expected {len(params)} parameter arrays, got {len(arrays)}"
            )
        for p, a in zip(params, arrays):
            a = np.asarray(a, dtype=np.float64)
            if a.shape != p.values.shape:
                raise InputValidationError(
                    f"parameter shape mismatch: {a.shape} vs {p.values.shape}"
                )
            p.values = a.copy()


class Adam:
    """Adam with the canonical defaults."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.values)
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1**self.t)
            v_hat = self.v[i] / (1.0 - self.beta2**self.t)
            p.values = p.values - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class Sgd:
    def __init__(self, params, lr):
        self.params = list(params)
        self.lr = float(lr)

    def step(self) -> None:
        for p in self.params:
            if p.grad is not None:
                p.values = p.values - self.lr * p.grad

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


@dataclass(frozen=True)
class TrainedModel:
    """A trained network plus how it was produced."""

    mlp: Mlp
    method: str  # snn | ed | edd | ced
    class_count: int
    config: TrainConfig
    teacher_ref: str = "none"
    loss_history: tuple[float, ...] = field(default=())
    lr_history: tuple[float, ...] = field(default=())

    def logits(self, x) -> np.ndarray:
        return self.mlp.logits(x)


def head_width(method: str, class_count: int) -> int:
    """Output-layer width required by a distillation method."""
    if method == "ced":
        return 2 * class_count + 1
    if method in ("ed", "edd", "snn"):
        return class_count
    raise InputValidationError(f"unknown method {method!r}")


def _as_xy(data):
    if hasattr(data, "x") and hasattr(data, "y"):
        x, y = data.x, data.y
    else:
        x, y = data
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise InputValidationError(
            f"expected features (N, d) with labels (N,), got {x.shape} and {y.shape}"
        )
    if x.shape[0] == 0:
        raise InputValidationError("empty dataset")
    return x, y


def _make_optimizer(cfg: TrainConfig, params):
    if cfg.optimizer == "adam":
        return Adam(params, cfg.learning_rate)
    return Sgd(params, cfg.learning_rate)


def _run_epochs(mlp: Mlp, x, cfg: TrainConfig, batch_loss):
    """Shared epoch/batch loop; ``batch_loss(idx)`` returns the graph loss."""
    n = x.shape[0]
    opt = _make_optimizer(cfg, mlp.parameters())
    shuffle_rng = np.random.default_rng(cfg.seed)
    loss_history: list[float] = []
    lr_history: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        if epoch == cfg.lr_drop_epoch:
            opt.lr *= cfg.lr_drop_factor
        lr_history.append(opt.lr)
        perm = shuffle_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            loss = batch_loss(idx)
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.values))
        loss_history.append(float(np.mean(epoch_losses)))
    return tuple(loss_history), tuple(lr_history)


def train_snn(data, spec: MlpSpec, cfg: TrainConfig) -> TrainedModel:
    """Train a standard classifier with cross-entropy on integer labels."""
    x, y = _as_xy(data)
    class_count = spec.output_dim
    if np.any(y < 0) or np.any(y >= class_count):
        raise InputValidationError(
            f"labels must lie in [0, {class_count}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    one_hot = np.zeros((x.shape[0], class_count))
    one_hot[np.arange(x.shape[0]), y.astype(int)] = 1.0
    mlp = Mlp(spec)

    def batch_loss(idx):
        z = mlp.forward(x[idx])
        ls = ad.log_softmax(z)
        return ad.scale(ad.neg(ad.total(ad.mul(ls, one_hot[idx]))), 1.0 / idx.size)

    loss_history, lr_history = _run_epochs(mlp, x, cfg, batch_loss)
    return TrainedModel(
        mlp=mlp,
        method="snn",
        class_count=class_count,
        config=cfg,
        loss_history=loss_history,
        lr_history=lr_history,
    )


def train_snn_ensemble(data, spec: MlpSpec, cfg: TrainConfig, members: int):
    """Train M independent members; member i uses seed + i for both
    weight init and shuffling."""
    if members < 1:
        raise InputValidationError(f"need at least one member, got {members}")
    models = []
    for i in range(members):
        member_spec = replace(spec, seed=spec.seed + i)
        member_cfg = replace(cfg, seed=cfg.seed + i)
        models.append(train_snn(data, member_spec, member_cfg))
    return models


def batch_credal_labels(member_probs: np.ndarray):
    """Vectorized interval wrap + intersection over a batch.

    ``member_probs`` is (M, B, C).  Returns ``(p_star, width, beta)``
    with shapes (B, C), (B, C), (B,).  Same formulas as the per-sample
    operations in :mod:`credalkit.credal`, batched.
    """
    lower = member_probs.min(axis=0)
    upper = member_probs.max(axis=0)
    width = upper - lower
    width_sum = width.sum(axis=1)
    lower_sum = lower.sum(axis=1)
    beta = np.where(
        width_sum > 0.0,
        np.clip(np.divide(1.0 - lower_sum, np.where(width_sum > 0.0, width_sum, 1.0)), 0.0, 1.0),
        0.5,
    )
    p_star = lower + beta[:, None] * width
    return p_star, width, beta


class _TeacherSource:
    """Uniform access to member logits, from models or an archive."""

    def __init__(self, teachers, temperature: float, n_samples: int):
        self.temperature = temperature
        if isinstance(teachers, LogitArchive):
            if teachers.sample_count != n_samples:
                raise InputValidationError(
                    f"archive has {teachers.sample_count} rows but the dataset "
                    f"has {n_samples}"
                )
            pre = teachers.manifest.prescaled_temperature
            if pre is not None and abs(pre - temperature) > 1e-12:
                raise InputValidationError(
                    f"archive logits were prescaled at T = {pre}, but the run "
                    f"requests T = {temperature}"
                )
            self._archive = teachers
            self._models = None
            self.prescaled = pre is not None
            self.class_count = teachers.class_count
        else:
            models = [t.mlp if isinstance(t, TrainedModel) else t for t in teachers]
            if not models:
                raise InputValidationError("need at least one teacher member")
            counts = {m.spec.output_dim for m in models}
            if len(counts) != 1:
                raise InputValidationError(
                    f"teacher members disagree on class count: {sorted(counts)}"
                )
            self._archive = None
            self._models = models
            self.prescaled = False
            self.class_count = counts.pop()

    def scaled_probs(self, x, idx) -> np.ndarray:
        """(M, B, C) member softmaxes at the distillation temperature."""
        z = self.raw_logits(x, idx)
        if not self.prescaled:
            z = z / self.temperature
        return softmax(z, axis=-1)

    def unscaled_probs(self, x, idx) -> np.ndarray:
        """(M, B, C) member softmaxes at T = 1 (raw logits)."""
        return softmax(self.raw_logits(x, idx), axis=-1)

    def raw_logits(self, x, idx) -> np.ndarray:
        if self._archive is not None:
            return self._archive.logits[:, idx, :]
        return np.stack([m.logits(x[idx]) for m in self._models])

    def describe(self) -> str:
        if self._archive is not None:
            return f"archive:{self._archive.manifest.creator}"
        return f"in-process:{len(self._models)} members"


def distill(teachers, method: str, spec: MlpSpec, cfg: TrainConfig, data) -> TrainedModel:
    """Distill an ensemble teacher into a single student.

    ``teachers`` is a list of trained members or a ``LogitArchive``
    whose rows align with ``data``.  The student head must be C wide
    for ``ed``/``edd`` and 2C+1 wide for ``ced``.
    """
    x, _ = _as_xy(data)
    source = _TeacherSource(teachers, cfg.temperature, x.shape[0])
    class_count = source.class_count
    expected = head_width(method, class_count)
    if spec.output_dim != expected:
        raise InputValidationError(
            f"method {method!r} with C = {class_count} needs output_dim = "
            f"{expected}, got {spec.output_dim}"
        )
    mlp = Mlp(spec)
    t = cfg.temperature
    t_sq = t * t

    if method == "ed":

        def batch_loss(idx):
            soft = source.scaled_probs(x, idx).mean(axis=0)
            z = ad.scale(mlp.forward(x[idx]), 1.0 / t)
            ls = ad.log_softmax(z)
            ce = ad.scale(ad.neg(ad.total(ad.mul(ls, soft))), 1.0 / idx.size)
            return ad.scale(ce, t_sq)

    elif method == "ced":

        def batch_loss(idx):
            p_star, width, beta = batch_credal_labels(source.scaled_probs(x, idx))
            z = mlp.forward(x[idx])
            ls = ad.log_softmax(ad.scale(ad.cols(z, 0, class_count), 1.0 / t))
            ce = ad.neg(ad.total(ad.mul(ls, p_star)))
            d = ad.sigmoid(ad.cols(z, class_count, 2 * class_count))
            d_sq = ad.total(ad.square(ad.sub(d, width)))
            b = ad.sigmoid(ad.cols(z, 2 * class_count, 2 * class_count + 1))
            b_sq = ad.total(ad.square(ad.sub(b, beta[:, None])))
            # activation ranges guarantee a valid credal triple; checked
            # in debug runs, stripped under -O
            assert d.values.min() >= 0.0 and d.values.max() <= 1.0
            assert b.values.min() >= 0.0 and b.values.max() <= 1.0
            mean = ad.scale(ad.add(ad.add(ce, d_sq), b_sq), 1.0 / idx.size)
            return ad.scale(mean, t_sq)

    elif method == "edd":
        if source.prescaled:
            raise InputValidationError(
                "the Dirichlet likelihood loss needs raw (unscaled) teacher "
                "logits, but the archive was prescaled by a temperature"
            )

        def batch_loss(idx):
            members = source.unscaled_probs(x, idx)
            log_members = np.log(np.maximum(members, LOG_CLAMP)).mean(axis=0)
            alpha = ad.exp(mlp.forward(x[idx]))
            alpha0 = ad.row_sum(alpha)
            per_sample = ad.add(
                ad.sub(ad.lgamma(alpha0), ad.row_sum(ad.lgamma(alpha))),
                ad.row_sum(ad.mul(ad.sub(alpha, ad.Tensor(np.ones(1))), log_members)),
            )
            return ad.scale(ad.neg(ad.total(per_sample)), 1.0 / idx.size)

    else:
        raise InputValidationError(f"unknown distillation method {method!r}")

    loss_history, lr_history = _run_epochs(mlp, x, cfg, batch_loss)
    return TrainedModel(
        mlp=mlp,
        method=method,
        class_count=class_count,
        config=cfg,
        teacher_ref=source.describe(),
        loss_history=loss_history,
        lr_history=lr_history,
    )
