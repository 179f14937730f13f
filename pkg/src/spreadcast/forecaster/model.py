"""Transformer spread classifier with hand-written reverse-mode gradients.

Architecture (per sample, sequence of S = lagging + 1 day vectors of width D)::

    linear encoder D -> d_model
    + sinusoidal positional encoding, dropout
    n_layers x post-norm encoder layer:
        h = LN(h + MHA(h));  h = LN(h + W2 gelu(W1 h))
    decoder on the final (T+1) position: d_model -> 24 x 5 logits

Everything is float64 numpy.  Parameters live in a flat ``dict`` keyed by
dotted names so that gradients, optimizer state and checkpoints share one
structure.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from ..features import ModelSample

N_HOURS = 24
N_CLASSES = 5
LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    input_width: int
    lagging: int = 1
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ff_width: int = 128
    pe_dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.input_width < 1:
            raise ValueError("input_width must be >= 1")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.n_heads < 1 or self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")
        if not 0.0 <= self.pe_dropout < 1.0:
            raise ValueError(f"pe_dropout must be in [0, 1), got {self.pe_dropout}")
        if self.ff_width < 1:
            raise ValueError("ff_width must be >= 1")

    @property
    def seq_len(self) -> int:
        return self.lagging + 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class ModelParams:
    config: ModelConfig
    arrays: dict[str, np.ndarray]

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.arrays.items()})

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def keys(self):
        return self.arrays.keys()

    @property
    def size(self) -> int:
        return sum(v.size for v in self.arrays.values())

    def with_config(self, **changes) -> "ModelParams":
        return ModelParams(replace(self.config, **changes), self.arrays)


def _layer_shapes(d: int, ff: int) -> dict[str, tuple[int, ...]]:
    return {
        "attn.wq": (d, d), "attn.bq": (d,),
        "attn.wk": (d, d), "attn.bk": (d,),
        "attn.wv": (d, d), "attn.bv": (d,),
        "attn.wo": (d, d), "attn.bo": (d,),
        "ln1.g": (d,), "ln1.b": (d,),
        "ff.w1": (d, ff), "ff.b1": (ff,),
        "ff.w2": (ff, d), "ff.b2": (d,),
        "ln2.g": (d,), "ln2.b": (d,),
    }  # fmt: skip


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d = config.d_model
    shapes = {"enc.w": (config.input_width, d), "enc.b": (d,)}
    for i in range(config.n_layers):
        for name, shape in _layer_shapes(d, config.ff_width).items():
            shapes[f"layers.{i}.{name}"] = shape
    shapes["dec.w"] = (d, N_HOURS * N_CLASSES)
    shapes["dec.b"] = (N_HOURS * N_CLASSES,)
    return shapes


def init_model(config: ModelConfig) -> ModelParams:
    """Xavier-uniform weights, zero biases, unit layer-norm gains."""
    rng = np.random.default_rng(config.seed)
    arrays = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if len(shape) == 2:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            arrays[name] = rng.uniform(-bound, bound, size=shape)
        elif leaf == "g":
            arrays[name] = np.ones(shape)
        else:
            arrays[name] = np.zeros(shape)
    return ModelParams(config, arrays)


def check_params(params: ModelParams) -> None:
    expected = param_shapes(params.config)
    if set(expected) != set(params.arrays):
        missing = sorted(set(expected) ^ set(params.arrays))
        raise ShapeError(f"parameter names do not match config: {missing}")
    for name, shape in expected.items():
        if params.arrays[name].shape != shape:
            raise ShapeError(f"{name}: shape {params.arrays[name].shape} != {shape}")


def positional_encoding(seq_len: int, d_model: int) -> np.ndarray:
    """Sinusoidal table: even columns sin(p / 10000^(2i/d)), odd columns cos."""
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    pos = np.arange(seq_len)[:, None]
    two_i = np.arange(0, d_model, 2)
    angle = pos / np.power(10000.0, two_i / d_model)
    pe = np.zeros((seq_len, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe


# --------------------------------------------------------------------------
# primitives
# --------------------------------------------------------------------------


def _softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _gelu(u):
    t = np.tanh(_GELU_C * (u + 0.044715 * u**3))
    return 0.5 * u * (1.0 + t), t


def _gelu_grad(u, t):
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * u * u)


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layer_norm_back(dy, g, cache):
    xhat, inv = cache
    n = xhat.shape[-1]
    dxhat = dy * g
    dx = inv / n * (n * dxhat - dxhat.sum(-1, keepdims=True) - xhat * (dxhat * xhat).sum(-1, keepdims=True))
    return dx, (dy * xhat).reshape(-1, n).sum(0), dy.reshape(-1, n).sum(0)


def _linear(x, w, b):
    return x @ w + b


def _linear_back(dy, x, w):
    """Gradients of ``x @ w + b`` for x of any leading shape."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ w.T, x2.T @ dy2, dy2.sum(0)


# --------------------------------------------------------------------------
# forward / backward
# --------------------------------------------------------------------------


def as_batch(x) -> tuple[np.ndarray, bool]:
    """Coerce a sample, a sample list, or an array to (B, S, D); flag single inputs."""
    if isinstance(x, ModelSample):
        return x.x[None], True
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], ModelSample):
        return np.stack([s.x for s in x]), False
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2:
        return arr[None], True
    if arr.ndim != 3:
        raise ShapeError(f"expected (S, D) or (B, S, D) input, got shape {arr.shape}")
    return arr, False


def dropout_mask(shape, p: float, rng: np.random.Generator | int | None) -> np.ndarray | None:
    """Inverted-dropout multiplier, or ``None`` when no dropout applies."""
    if p <= 0.0 or rng is None:
        return None
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def _forward(params: ModelParams, X: np.ndarray, mask: np.ndarray | None):
    cfg = params.config
    P = params.arrays
    B, S, D = X.shape
    if D != cfg.input_width:
        raise ShapeError(f"input width {D} != model input_width {cfg.input_width}")
    d, H = cfg.d_model, cfg.n_heads
    dh = d // H
    scale = 1.0 / math.sqrt(dh)

    h = _linear(X, P["enc.w"], P["enc.b"]) + positional_encoding(S, d)
    if mask is not None:
        h = h * mask
    caches = []
    for i in range(cfg.n_layers):
        p = f"layers.{i}."
        x_in = h
        q = _linear(h, P[p + "attn.wq"], P[p + "attn.bq"]).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        k = _linear(h, P[p + "attn.wk"], P[p + "attn.bk"]).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        v = _linear(h, P[p + "attn.wv"], P[p + "attn.bv"]).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        att = _softmax((q @ k.transpose(0, 1, 3, 2)) * scale)
        ctx = (att @ v).transpose(0, 2, 1, 3).reshape(B, S, d)
        a = _linear(ctx, P[p + "attn.wo"], P[p + "attn.bo"])
        h1, ln1 = _layer_norm(x_in + a, P[p + "ln1.g"], P[p + "ln1.b"])
        u = _linear(h1, P[p + "ff.w1"], P[p + "ff.b1"])
        gl, t = _gelu(u)
        f = _linear(gl, P[p + "ff.w2"], P[p + "ff.b2"])
        h, ln2 = _layer_norm(h1 + f, P[p + "ln2.g"], P[p + "ln2.b"])
        caches.append((x_in, q, k, v, att, ctx, ln1, h1, u, t, gl, ln2))
    z = h[:, -1, :]
    logits = _linear(z, P["dec.w"], P["dec.b"]).reshape(B, N_HOURS, N_CLASSES)
    return logits, (X, mask, caches, z)


def _backward(params: ModelParams, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    cfg = params.config
    P = params.arrays
    X, mask, caches, z = cache
    B, S, _ = X.shape
    d, H = cfg.d_model, cfg.n_heads
    dh = d // H
    scale = 1.0 / math.sqrt(dh)
    g: dict[str, np.ndarray] = {}

    dz, g["dec.w"], g["dec.b"] = _linear_back(dlogits.reshape(B, -1), z, P["dec.w"])
    dh_ = np.zeros((B, S, d))
    dh_[:, -1, :] = dz
    for i in reversed(range(cfg.n_layers)):
        p = f"layers.{i}."
        x_in, q, k, v, att, ctx, ln1, h1, u, t, gl, ln2 = caches[i]
        dr2, g[p + "ln2.g"], g[p + "ln2.b"] = _layer_norm_back(dh_, P[p + "ln2.g"], ln2)
        dgl, g[p + "ff.w2"], g[p + "ff.b2"] = _linear_back(dr2, gl, P[p + "ff.w2"])
        du = dgl * _gelu_grad(u, t)
        dh1, g[p + "ff.w1"], g[p + "ff.b1"] = _linear_back(du, h1, P[p + "ff.w1"])
        dh1 = dh1 + dr2
        dr1, g[p + "ln1.g"], g[p + "ln1.b"] = _layer_norm_back(dh1, P[p + "ln1.g"], ln1)
        dctx, g[p + "attn.wo"], g[p + "attn.bo"] = _linear_back(dr1, ctx, P[p + "attn.wo"])
        dctx = dctx.reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        datt = dctx @ v.transpose(0, 1, 3, 2)
        dv = att.transpose(0, 1, 3, 2) @ dctx
        dsc = att * (datt - (datt * att).sum(-1, keepdims=True)) * scale
        dq = dsc @ k
        dk = dsc.transpose(0, 1, 3, 2) @ q

        def merge(t4):
            return t4.transpose(0, 2, 1, 3).reshape(B, S, d)

        dx_q, g[p + "attn.wq"], g[p + "attn.bq"] = _linear_back(merge(dq), x_in, P[p + "attn.wq"])
        dx_k, g[p + "attn.wk"], g[p + "attn.bk"] = _linear_back(merge(dk), x_in, P[p + "attn.wk"])
        dx_v, g[p + "attn.wv"], g[p + "attn.bv"] = _linear_back(merge(dv), x_in, P[p + "attn.wv"])
        dh_ = dr1 + dx_q + dx_k + dx_v
    if mask is not None:
        dh_ = dh_ * mask
    _, g["enc.w"], g["enc.b"] = _linear_back(dh_, X, P["enc.w"])
    return {k: g[k] for k in params.arrays}


def forward(params: ModelParams, x, training: bool = False, rng=None) -> np.ndarray:
    """Logits of shape (24, 5), or (B, 24, 5) for batched input.

    Dropout is active only when ``training`` is set and ``rng`` (a seed or
    Generator) supplies the mask; otherwise the call is deterministic.
    """
    X, single = as_batch(x)
    mask = None
    if training:
        h_shape = (X.shape[0], X.shape[1], params.config.d_model)
        mask = dropout_mask(h_shape, params.config.pe_dropout, rng)
    logits, _ = _forward(params, X, mask)
    return logits[0] if single else logits


def predict_proba(params: ModelParams, x) -> np.ndarray:
    """Row-wise softmax of eval-mode logits: (24, 5) or (B, 24, 5)."""
    return _softmax(forward(params, x, training=False))


def loss(logits, labels) -> float:
    """Mean over hours (and batch) of the cross-entropy of the true class."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.shape[:-1] != labels.shape or logits.shape[-1] != N_CLASSES:
        raise ShapeError(f"logits {logits.shape} incompatible with labels {labels.shape}")
    logp = _log_softmax(logits)
    picked = np.take_along_axis(logp, labels[..., None], axis=-1)
    return float(-picked.mean())


def _targets(labels, batch: int) -> np.ndarray:
    if isinstance(labels, (list, tuple)) and labels and isinstance(labels[0], ModelSample):
        labels = [s.labels for s in labels]
    Y = np.asarray(labels, dtype=np.int64)
    if Y.ndim == 1:
        Y = Y[None]
    if Y.shape != (batch, N_HOURS):
        raise ShapeError(f"labels shape {Y.shape} != {(batch, N_HOURS)}")
    return Y


def loss_and_grad(
    params: ModelParams,
    x,
    labels=None,
    training: bool = False,
    rng=None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its exact gradient.

    ``x`` may be a list of samples (labels taken from them) or an array with
    explicit ``labels``.  With ``training`` set, one dropout mask is drawn
    from ``rng`` and shared by the loss and the gradient.
    """
    X, _ = as_batch(x)
    Y = _targets(x if labels is None else labels, X.shape[0])
    mask = None
    if training:
        mask = dropout_mask((X.shape[0], X.shape[1], params.config.d_model), params.config.pe_dropout, rng)
    logits, cache = _forward(params, X, mask)
    probs = _softmax(logits)
    onehot = np.zeros_like(probs)
    np.put_along_axis(onehot, Y[..., None], 1.0, axis=-1)
    dlogits = (probs - onehot) / (Y.size)
    return loss(logits, Y), _backward(params, cache, dlogits)


def grad(params: ModelParams, batch: Sequence[ModelSample], labels=None, training: bool = False, rng=None):
    """Gradient of the mean batch loss, structured like ``params.arrays``."""
    return loss_and_grad(params, batch, labels, training=training, rng=rng)[1]


def batch_loss(params: ModelParams, x, labels=None, training: bool = False, rng=None) -> float:
    X, _ = as_batch(x)
    Y = _targets(x if labels is None else labels, X.shape[0])
    return loss(forward(params, X, training=training, rng=rng), Y)
