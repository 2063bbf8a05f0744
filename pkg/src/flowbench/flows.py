"""Coupling-layer normalizing flows with exact likelihoods.

Two architectures are provided:

* ``nice`` - additive couplings plus one learned diagonal scaling layer, so
  the log-det-Jacobian is the same constant for every input.
* ``realnvp`` - affine couplings whose log-scales are bounded by a learned
  per-coordinate vector times ``tanh`` of the conditioner output, giving an
  input-dependent log-det while keeping ``exp`` under control.

Coupling conditioners see the coordinates of one index parity and transform
the other; parities alternate layer to layer.  Odd input dimensions get one
zero pad column appended internally.  The latent prior is N(0, I), so

    log p(x) = -D/2 * log(2*pi) - ||z||^2 / 2 + logdet,

with D the (padded) internal dimension.  Gradients of the mean negative
log-likelihood are computed by hand in :func:`nll_and_grads`; training uses
AdamW with decoupled weight decay applied to weight matrices only and a
single-cycle cosine learning-rate schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DimMismatch, DivergedLoss, NonFiniteActivation
from .mlp import Mlp, build_mlp, mlp_forward_cached, _backprop_from_caches
from .rng import RngState

FLOW_KINDS = ("nice", "realnvp")

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class TrainConfig:
    """Hyperparameters; the defaults are the selected configuration."""

    epochs: int = 200
    batch_size: int = 512
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    n_coupling: int = 10
    hidden_dim: int = 256
    n_hidden_layers: int = 2
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 0 or self.batch_size == 0:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if min(self.learning_rate, self.weight_decay) < 0:
            raise ValueError("learning_rate and weight_decay must be >= 0")
        if min(self.n_coupling, self.hidden_dim, self.n_hidden_layers) < 1:
            raise ValueError("n_coupling, hidden_dim, n_hidden_layers must be >= 1")


@dataclass
class Coupling:
    parity: int                       # 0: even indices condition, odd transformed
    shift_net: Mlp
    scale_net: Mlp | None = None      # realnvp only
    scale_clamp: np.ndarray | None = None  # realnvp: bounds the log-scale


@dataclass
class FlowModel:
    kind: str
    input_dim: int
    padded: bool
    layers: list
    scaling_logs: np.ndarray | None   # nice only, final diagonal layer
    config: TrainConfig

    @property
    def internal_dim(self) -> int:
        return self.input_dim + 1 if self.padded else self.input_dim


@dataclass
class LossHistory:
    nll: list = field(default_factory=list)     # per-epoch mean train NLL
    lr: list = field(default_factory=list)      # learning rate at epoch start


def cosine_warm_restart_lr(step: int, total_steps: int, base_lr: float) -> float:
    """Single annealing cycle: base_lr * (1 + cos(pi * step / total)) / 2."""
    if not 0 <= step < total_steps:
        raise ValueError("step must satisfy 0 <= step < total_steps")
    return base_lr * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0


def _parity_index(dim: int, parity: int):
    even = np.arange(0, dim, 2)
    odd = np.arange(1, dim, 2)
    return (even, odd) if parity == 0 else (odd, even)


def build_flow(kind: str, dim: int, config: TrainConfig, rng: RngState) -> FlowModel:
    """Fresh model: conditioner weights are He-uniform throughout, while the
    scale parameters (diagonal scaling logs, affine log-scale bounds) start
    at zero, so a fresh model always has logdet identically zero.

    Keeping the conditioner output layers random matters: flows whose
    couplings start as the exact identity settle into constant-shift
    solutions and never develop the input-dependent behavior the
    high-dimension experiments study.
    """
    if kind not in FLOW_KINDS:
        raise ValueError(f"kind must be one of {FLOW_KINDS}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    padded = dim % 2 == 1
    internal = dim + 1 if padded else dim
    layers = []
    for i in range(config.n_coupling):
        parity = i % 2
        cond, trans = _parity_index(internal, parity)
        dims = [len(cond)] + [config.hidden_dim] * config.n_hidden_layers + [len(trans)]
        shift_net = build_mlp(dims, config.activation, rng, zero_last=False)
        if kind == "realnvp":
            scale_net = build_mlp(dims, config.activation, rng, zero_last=False)
            layers.append(Coupling(parity, shift_net, scale_net, np.zeros(len(trans))))
        else:
            layers.append(Coupling(parity, shift_net))
    scaling_logs = np.zeros(internal) if kind == "nice" else None
    return FlowModel(kind, dim, padded, layers, scaling_logs, config)


def _as_internal(model: FlowModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimMismatch("expected a 2-D batch")
    if x.shape[1] == model.input_dim:
        if model.padded:
            x = np.hstack([x, np.zeros((x.shape[0], 1))])
        return x
    if model.padded and x.shape[1] == model.internal_dim:
        return x
    raise DimMismatch(
        f"input has {x.shape[1]} columns, model expects {model.input_dim}"
        + (f" (or {model.internal_dim} with explicit pad)" if model.padded else ""))


def flow_forward(model: FlowModel, x: np.ndarray):
    """Map data to latent space; returns (z, per-sample logdet)."""
    z, logdet, _ = _forward_cached(model, x, want_cache=False)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(logdet))):
        raise NonFiniteActivation("flow forward produced non-finite values")
    return z, logdet


def _forward_cached(model: FlowModel, x: np.ndarray, want_cache: bool = True):
    h = _as_internal(model, x)
    n = h.shape[0]
    logdet = np.zeros(n)
    caches = []
    for layer in model.layers:
        cond, trans = _parity_index(model.internal_dim, layer.parity)
        xc = h[:, cond]
        xt = h[:, trans]
        shift, shift_caches = mlp_forward_cached(layer.shift_net, xc)
        out = h.copy()
        if model.kind == "nice":
            out[:, trans] = xt + shift
            if want_cache:
                caches.append((xc, shift_caches, None, None, None, None))
        else:
            s_raw, scale_caches = mlp_forward_cached(layer.scale_net, xc)
            tanh_s = np.tanh(s_raw)
            s_til = layer.scale_clamp * tanh_s
            exp_s = np.exp(s_til)
            out[:, trans] = xt * exp_s + shift
            logdet += s_til.sum(axis=1)
            if want_cache:
                caches.append((xc, shift_caches, scale_caches, tanh_s, exp_s, xt))
        h = out
    if model.kind == "nice":
        z = h * np.exp(model.scaling_logs)
        logdet = np.full(n, float(model.scaling_logs.sum()))
    else:
        z = h
    return z, logdet, (caches, h)


def flow_inverse(model: FlowModel, z: np.ndarray) -> np.ndarray:
    """Exact layer-by-layer inversion; drops the pad column on output."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != model.internal_dim:
        raise DimMismatch(f"latent has {z.shape[1]} columns, expected {model.internal_dim}")
    h = z / np.exp(model.scaling_logs) if model.kind == "nice" else z.copy()
    for layer in reversed(model.layers):
        cond, trans = _parity_index(model.internal_dim, layer.parity)
        xc = h[:, cond]
        shift, _ = mlp_forward_cached(layer.shift_net, xc)
        out = h.copy()
        if model.kind == "nice":
            out[:, trans] = h[:, trans] - shift
        else:
            s_raw, _ = mlp_forward_cached(layer.scale_net, xc)
            s_til = layer.scale_clamp * np.tanh(s_raw)
            out[:, trans] = (h[:, trans] - shift) * np.exp(-s_til)
        h = out
    return h[:, :model.input_dim] if model.padded else h


def log_likelihood(model: FlowModel, x: np.ndarray) -> np.ndarray:
    """Per-sample log density under the standard-normal latent prior."""
    z, logdet = flow_forward(model, x)
    d_int = model.internal_dim
    return -0.5 * d_int * LOG_2PI - 0.5 * np.sum(z * z, axis=1) + logdet


# ---------------------------------------------------------------------------
# Parameters and gradients
# ---------------------------------------------------------------------------

def iter_params(model: FlowModel):
    """Yield (key, array, kind) for every parameter; kind is 'weight',
    'bias', or 'scale' (weight decay touches 'weight' only)."""
    for i, layer in enumerate(model.layers):
        for j, (w, b) in enumerate(zip(layer.shift_net.weights, layer.shift_net.biases)):
            yield f"layer{i}.shift.w{j}", w, "weight"
            yield f"layer{i}.shift.b{j}", b, "bias"
        if layer.scale_net is not None:
            for j, (w, b) in enumerate(zip(layer.scale_net.weights, layer.scale_net.biases)):
                yield f"layer{i}.scale.w{j}", w, "weight"
                yield f"layer{i}.scale.b{j}", b, "bias"
            yield f"layer{i}.clamp", layer.scale_clamp, "scale"
    if model.scaling_logs is not None:
        yield "scaling_logs", model.scaling_logs, "scale"


def param_vector(model: FlowModel) -> np.ndarray:
    """All parameters flattened in the :func:`iter_params` order."""
    return np.concatenate([a.ravel() for _, a, _ in iter_params(model)])


def set_param_vector(model: FlowModel, vec: np.ndarray) -> None:
    """Load parameters from a flat vector (inverse of :func:`param_vector`)."""
    vec = np.asarray(vec, dtype=np.float64)
    pos = 0
    for _, a, _ in iter_params(model):
        a[...] = vec[pos:pos + a.size].reshape(a.shape)
        pos += a.size
    if pos != vec.size:
        raise DimMismatch(f"vector has {vec.size} entries, model has {pos} parameters")


def nll_and_grads(model: FlowModel, x: np.ndarray):
    """Mean negative log-likelihood of the batch and its exact gradients.

    Returns (loss, grads) with ``grads`` keyed like :func:`iter_params`.
    """
    z, logdet, (caches, pre_scale) = _forward_cached(model, x)
    n = z.shape[0]
    d_int = model.internal_dim
    loss = 0.5 * d_int * LOG_2PI + 0.5 * float(np.mean(np.sum(z * z, axis=1))) \
        - float(np.mean(logdet))
    grads = {}
    dz = z / n
    if model.kind == "nice":
        # z = y * exp(s); d loss / d s_j = mean_i z_ij^2 - 1.
        grads["scaling_logs"] = np.sum(dz * z, axis=0) - 1.0
        dh = dz * np.exp(model.scaling_logs)
    else:
        dh = dz
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        cond, trans = _parity_index(d_int, layer.parity)
        xc, shift_caches, scale_caches, tanh_s, exp_s, xt = caches[i]
        dy_t = dh[:, trans]
        dx = dh.copy()
        if model.kind == "nice":
            shift_grads, dxc = _backprop_from_caches(layer.shift_net, shift_caches, dy_t)
            dx[:, trans] = dy_t
            dx[:, cond] += dxc
        else:
            # y_t = x_t * exp(s~) + shift;   loss -= mean_i sum_j s~_ij.
            ds_til = dy_t * xt * exp_s - 1.0 / n
            grads[f"layer{i}.clamp"] = np.sum(ds_til * tanh_s, axis=0)
            ds_raw = ds_til * layer.scale_clamp * (1.0 - tanh_s * tanh_s)
            scale_grads, dxc_s = _backprop_from_caches(layer.scale_net, scale_caches, ds_raw)
            shift_grads, dxc_m = _backprop_from_caches(layer.shift_net, shift_caches, dy_t)
            for j, (dw, db) in enumerate(scale_grads):
                grads[f"layer{i}.scale.w{j}"] = dw
                grads[f"layer{i}.scale.b{j}"] = db
            dx[:, trans] = dy_t * exp_s
            dx[:, cond] += dxc_s + dxc_m
        for j, (dw, db) in enumerate(shift_grads):
            grads[f"layer{i}.shift.w{j}"] = dw
            grads[f"layer{i}.shift.b{j}"] = db
        dh = dx
    return loss, grads


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train_flow(kind: str, x_train: np.ndarray, config: TrainConfig):
    """Maximum-likelihood training; returns (model, per-epoch history).

    Mini-batches are reshuffled each epoch from the config seed, AdamW decay
    touches weight matrices only, and the learning rate follows one cosine
    annealing cycle over all steps.  Raises :class:`DivergedLoss` (carrying
    the partial history) if the loss stops being finite.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    if x_train.ndim != 2 or x_train.shape[0] < 2:
        raise DimMismatch("training data must be 2-D with at least two rows")
    rng = RngState(config.seed)
    model = build_flow(kind, x_train.shape[1], config, rng)
    history = LossHistory()
    if config.epochs == 0:
        return model, history
    n = x_train.shape[0]
    n_batches = -(-n // config.batch_size)
    total_steps = config.epochs * n_batches
    adam_m = {k: np.zeros_like(a) for k, a, _ in iter_params(model)}
    adam_v = {k: np.zeros_like(a) for k, a, _ in iter_params(model)}
    kinds = {k: kind_ for k, _, kind_ in iter_params(model)}
    arrays = {k: a for k, a, _ in iter_params(model)}
    step = 0
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        epoch_lr = cosine_warm_restart_lr(step, total_steps, config.learning_rate)
        epoch_loss = 0.0
        for b in range(n_batches):
            batch = x_train[perm[b * config.batch_size:(b + 1) * config.batch_size]]
            lr = cosine_warm_restart_lr(step, total_steps, config.learning_rate)
            try:
                loss, grads = nll_and_grads(model, batch)
            except NonFiniteActivation as exc:
                raise DivergedLoss(str(exc), history) from exc
            if not math.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at step {step}", history)
            step += 1
            b1c = 1.0 - config.beta1 ** step
            b2c = 1.0 - config.beta2 ** step
            for k, g in grads.items():
                adam_m[k] = config.beta1 * adam_m[k] + (1.0 - config.beta1) * g
                adam_v[k] = config.beta2 * adam_v[k] + (1.0 - config.beta2) * (g * g)
                update = (adam_m[k] / b1c) / (np.sqrt(adam_v[k] / b2c) + config.adam_eps)
                p = arrays[k]
                if kinds[k] == "weight" and config.weight_decay > 0:
                    p -= lr * config.weight_decay * p
                p -= lr * update
            epoch_loss += loss * batch.shape[0]
        history.nll.append(epoch_loss / n)
        history.lr.append(epoch_lr)
    return model, history


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

FLOW_FORMAT_VERSION = 1


def flow_to_dict(model: FlowModel) -> dict:
    layers = []
    for layer in model.layers:
        entry = {"parity": "even" if layer.parity == 0 else "odd",
                 "shift_net": layer.shift_net.to_dict()}
        if layer.scale_net is not None:
            entry["scale_net"] = layer.scale_net.to_dict()
            entry["scale_clamp"] = layer.scale_clamp.tolist()
        layers.append(entry)
    return {
        "format_version": FLOW_FORMAT_VERSION,
        "kind": model.kind,
        "input_dim": model.input_dim,
        "padded": model.padded,
        "config": asdict(model.config),
        "layers": layers,
        "scaling_logs": None if model.scaling_logs is None else model.scaling_logs.tolist(),
    }


def flow_from_dict(d: dict) -> FlowModel:
    layers = []
    for entry in d["layers"]:
        parity = 0 if entry["parity"] == "even" else 1
        shift_net = Mlp.from_dict(entry["shift_net"])
        if "scale_net" in entry:
            layers.append(Coupling(parity, shift_net, Mlp.from_dict(entry["scale_net"]),
                                   np.asarray(entry["scale_clamp"], dtype=np.float64)))
        else:
            layers.append(Coupling(parity, shift_net))
    scaling = d["scaling_logs"]
    return FlowModel(
        kind=d["kind"],
        input_dim=d["input_dim"],
        padded=d["padded"],
        layers=layers,
        scaling_logs=None if scaling is None else np.asarray(scaling, dtype=np.float64),
        config=TrainConfig(**d["config"]),
    )
