"""Univariate LSTM close-price forecaster, implemented from scratch in NumPy.

Architecture: stacked LSTM layers over a window of scaled closes (every layer
but the last emits its full hidden sequence; the last layer's final hidden
state feeds a ReLU dense layer and a single logistic output node). Inverted
dropout follows each LSTM layer during training. Training is mini-batch Adam
with full backpropagation through time under Huber loss; closes are min-max
scaled into [0, 1] because the logistic head can only emit (0, 1).

Cell equations are the standard formulation: logistic input/forget/output
gates, tanh candidate and cell output,

    c_t = f * c_prev + i * g,    h_t = o * tanh(c_t).

Gate blocks are stacked [input, forget, candidate, output] along the last
axis of each weight matrix.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

CHECKPOINT_MAGIC = b"SPLSTMCK"
CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

TRAIN_FRACTION = 0.9  # chronological train/validation split of windows


@dataclass(frozen=True)
class LstmConfig:
    """Architecture and training hyperparameters.

    Defaults are the full-scale configuration: a 50-day window feeding two
    256-unit LSTM layers with 30% dropout, a 256-unit dense layer, batch
    size 64, 100 epochs, one-day forecast horizon.
    """

    window: int = 50
    horizon: int = 1
    lstm_layers: tuple[int, ...] = (256, 256)
    dropout_rate: float = 0.3
    dense_width: int = 256
    batch_size: int = 64
    epochs: int = 100
    learning_rate: float = 1e-3
    huber_delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lstm_layers", tuple(int(w) for w in self.lstm_layers))
        if self.window < 1 or self.horizon < 1:
            raise ValueError("window and horizon must be >= 1")
        if not self.lstm_layers or any(w < 1 for w in self.lstm_layers):
            raise ValueError("lstm_layers must be a non-empty list of positive widths")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.dense_width < 1 or self.batch_size < 1:
            raise ValueError("dense_width and batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0 or self.huber_delta <= 0:
            raise ValueError("learning_rate and huber_delta must be positive")


@dataclass(frozen=True)
class Scaler:
    """Affine map of [min, max] onto [0, 1]; values outside pass through unclipped."""

    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise ValueError(f"scaler needs max > min, got [{self.min}, {self.max}]")

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.min) / (self.max - self.min)

    def inverse_transform(self, y):
        return np.asarray(y, dtype=float) * (self.max - self.min) + self.min


def fit_scaler(train_closes) -> Scaler:
    """Min-max scaler over the training closes; rejects constant series."""
    x = np.asarray(train_closes, dtype=float)
    if x.size < 2 or x.min() == x.max():
        raise ValueError("need at least 2 distinct values to fit a scaler")
    return Scaler(float(x.min()), float(x.max()))


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding windows (stride 1) and the close `horizon` steps past each window."""

    inputs: np.ndarray  # (n_samples, window)
    targets: np.ndarray  # (n_samples,)


def make_windows(closes, window: int, horizon: int) -> WindowedDataset:
    """Slice a close series into (window -> target) samples.

    target[i] = closes[i + window + horizon - 1]; the sample count is
    len(closes) - window - horizon + 1.
    """
    closes = np.asarray(closes, dtype=float)
    if window < 1 or horizon < 1:
        raise ValueError("window and horizon must be >= 1")
    n = closes.size - window - horizon + 1
    if n < 1:
        raise ValueError(
            f"series of length {closes.size} too short for window {window} + horizon {horizon}"
        )
    inputs = np.lib.stride_tricks.sliding_window_view(closes, window)[:n].copy()
    targets = closes[window + horizon - 1 :].copy()
    return WindowedDataset(inputs, targets)


@dataclass
class LayerParams:
    """One LSTM layer's parameters; gate blocks stacked [i, f, g, o]."""

    wx: np.ndarray  # (input_dim, 4*width)
    wh: np.ndarray  # (width, 4*width)
    b: np.ndarray  # (4*width,)

    @property
    def width(self) -> int:
        return self.wh.shape[0]


@dataclass
class LstmModel:
    config: LstmConfig
    scaler: Scaler
    layers: tuple[LayerParams, ...]
    dense_w: np.ndarray
    dense_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def named_params(self) -> dict[str, np.ndarray]:
        """Parameter tensors in canonical order (views, not copies)."""
        params: dict[str, np.ndarray] = {}
        for idx, layer in enumerate(self.layers):
            params[f"lstm{idx}.wx"] = layer.wx
            params[f"lstm{idx}.wh"] = layer.wh
            params[f"lstm{idx}.b"] = layer.b
        params["dense.w"] = self.dense_w
        params["dense.b"] = self.dense_b
        params["out.w"] = self.out_w
        params["out.b"] = self.out_b
        return params

    def check_finite(self):
        for name, arr in self.named_params().items():
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite values in parameter {name}")


def _param_shapes(config: LstmConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    d = 1
    for idx, width in enumerate(config.lstm_layers):
        shapes[f"lstm{idx}.wx"] = (d, 4 * width)
        shapes[f"lstm{idx}.wh"] = (width, 4 * width)
        shapes[f"lstm{idx}.b"] = (4 * width,)
        d = width
    shapes["dense.w"] = (d, config.dense_width)
    shapes["dense.b"] = (config.dense_width,)
    shapes["out.w"] = (config.dense_width, 1)
    shapes["out.b"] = (1,)
    return shapes


def _glorot(rng: Generator, shape: tuple[int, int]) -> np.ndarray:
    limit = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_model(config: LstmConfig, scaler: Scaler, rng: Generator) -> LstmModel:
    """Glorot-uniform weights, zero biases except forget-gate biases at 1.0."""
    layers = []
    d = 1
    for width in config.lstm_layers:
        wx = _glorot(rng, (d, 4 * width))
        wh = _glorot(rng, (width, 4 * width))
        b = np.zeros(4 * width)
        b[width : 2 * width] = 1.0  # forget gate: start remembering
        layers.append(LayerParams(wx, wh, b))
        d = width
    dense_w = _glorot(rng, (d, config.dense_width))
    dense_b = np.zeros(config.dense_width)
    out_w = _glorot(rng, (config.dense_width, 1))
    out_b = np.zeros(1)
    return LstmModel(config, scaler, tuple(layers), dense_w, dense_b, out_w, out_b)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dropout_mask(rng: Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: survivors scaled by 1/(1-rate), expectation 1."""
    return (rng.random(shape) >= rate) / (1.0 - rate)


def lstm_cell_step(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, params: LayerParams):
    """One timestep of one LSTM cell on vectors; returns (h_t, c_t)."""
    w = params.width
    z = np.asarray(x_t, float) @ params.wx + np.asarray(h_prev, float) @ params.wh + params.b
    if not np.isfinite(z).all():
        raise FloatingPointError("non-finite gate pre-activation (parameter blow-up)")
    i = _sigmoid(z[..., 0 * w : 1 * w])
    f = _sigmoid(z[..., 1 * w : 2 * w])
    g = np.tanh(z[..., 2 * w : 3 * w])
    o = _sigmoid(z[..., 3 * w : 4 * w])
    c_t = f * np.asarray(c_prev, float) + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


@dataclass
class _LayerCache:
    x: np.ndarray  # (B, T, D) layer input (post-dropout of the previous layer)
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tc: np.ndarray  # tanh(c)
    h: np.ndarray  # (B, T, H) hidden sequence


@dataclass
class ForwardCache:
    layers: list[_LayerCache]
    seq_masks: list[np.ndarray | None]  # dropout masks on non-final layer sequences
    last_mask: np.ndarray | None  # dropout mask on the final hidden state
    h_last: np.ndarray  # post-dropout final hidden state (B, H)
    a1: np.ndarray  # dense pre-activation
    r1: np.ndarray  # dense ReLU output
    y: np.ndarray  # (B,) logistic predictions


def _layer_forward(x: np.ndarray, params: LayerParams) -> _LayerCache:
    batch, steps, _ = x.shape
    w = params.width
    i = np.empty((batch, steps, w))
    f = np.empty_like(i)
    g = np.empty_like(i)
    o = np.empty_like(i)
    c = np.empty_like(i)
    tc = np.empty_like(i)
    h = np.empty_like(i)
    h_t = np.zeros((batch, w))
    c_t = np.zeros((batch, w))
    for t in range(steps):
        z = x[:, t, :] @ params.wx + h_t @ params.wh + params.b
        if not np.isfinite(z).all():
            raise FloatingPointError("non-finite gate pre-activation (parameter blow-up)")
        i[:, t] = _sigmoid(z[:, 0 * w : 1 * w])
        f[:, t] = _sigmoid(z[:, 1 * w : 2 * w])
        g[:, t] = np.tanh(z[:, 2 * w : 3 * w])
        o[:, t] = _sigmoid(z[:, 3 * w : 4 * w])
        c_t = f[:, t] * c_t + i[:, t] * g[:, t]
        tc[:, t] = np.tanh(c_t)
        h_t = o[:, t] * tc[:, t]
        c[:, t] = c_t
        h[:, t] = h_t
    return _LayerCache(x, i, f, g, o, c, tc, h)


def forward_batch(
    model: LstmModel, X: np.ndarray, training: bool = False, rng: Generator | None = None
) -> tuple[np.ndarray, ForwardCache]:
    """Run a batch of scaled windows through the stack.

    X has shape (batch, window); returns predictions in (0, 1) and the cache
    needed for backpropagation. Dropout is applied only when training; rate 0
    applies no masks at all, so it matches inference exactly.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.config.window:
        raise ValueError(f"expected (batch, {model.config.window}) input, got {X.shape}")
    rate = model.config.dropout_rate
    use_dropout = training and rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("training forward with dropout needs an rng")

    seq = X[:, :, None]
    caches: list[_LayerCache] = []
    seq_masks: list[np.ndarray | None] = []
    last_mask = None
    n_layers = len(model.layers)
    for idx, params in enumerate(model.layers):
        cache = _layer_forward(seq, params)
        caches.append(cache)
        if idx < n_layers - 1:
            mask = dropout_mask(rng, cache.h.shape, rate) if use_dropout else None
            seq_masks.append(mask)
            seq = cache.h * mask if mask is not None else cache.h
        else:
            h_last = cache.h[:, -1, :]
            if use_dropout:
                last_mask = dropout_mask(rng, h_last.shape, rate)
                h_last = h_last * last_mask

    a1 = h_last @ model.dense_w + model.dense_b
    r1 = np.maximum(a1, 0.0)
    z2 = r1 @ model.out_w + model.out_b
    y = _sigmoid(z2)[:, 0]
    return y, ForwardCache(caches, seq_masks, last_mask, h_last, a1, r1, y)


def forward(
    model: LstmModel, window: np.ndarray, training: bool = False, rng: Generator | None = None
) -> float:
    """Prediction in (0, 1) for one scaled window."""
    window = np.asarray(window, dtype=float)
    if window.shape != (model.config.window,):
        raise ValueError(f"expected window of length {model.config.window}, got shape {window.shape}")
    y, _ = forward_batch(model, window[None, :], training=training, rng=rng)
    return float(y[0])


def _layer_backward(cache: _LayerCache, params: LayerParams, dh_seq: np.ndarray):
    """BPTT through one layer given per-timestep upstream gradients dh_seq."""
    batch, steps, w = cache.h.shape
    d_wx = np.zeros_like(params.wx)
    d_wh = np.zeros_like(params.wh)
    d_b = np.zeros_like(params.b)
    d_x = np.empty_like(cache.x)
    dh_carry = np.zeros((batch, w))
    dc_carry = np.zeros((batch, w))
    dz = np.empty((batch, 4 * w))
    for t in range(steps - 1, -1, -1):
        i, f, g, o = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t]
        tc = cache.tc[:, t]
        dh = dh_seq[:, t] + dh_carry
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        c_prev = cache.c[:, t - 1] if t > 0 else 0.0
        dz[:, 0 * w : 1 * w] = dc * g * i * (1.0 - i)
        dz[:, 1 * w : 2 * w] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * w : 3 * w] = dc * i * (1.0 - g * g)
        dz[:, 3 * w : 4 * w] = dh * tc * o * (1.0 - o)
        d_wx += cache.x[:, t].T @ dz
        h_prev = cache.h[:, t - 1] if t > 0 else None
        if h_prev is not None:
            d_wh += h_prev.T @ dz
        d_b += dz.sum(axis=0)
        d_x[:, t] = dz @ params.wx.T
        dh_carry = dz @ params.wh.T
        dc_carry = dc * f
    return d_x, d_wx, d_wh, d_b


def backward_batch(model: LstmModel, cache: ForwardCache, d_y: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt every parameter, given dL/dy per sample."""
    y = cache.y
    dz2 = (d_y * y * (1.0 - y))[:, None]
    grads: dict[str, np.ndarray] = {
        "out.w": cache.r1.T @ dz2,
        "out.b": dz2.sum(axis=0),
    }
    dr1 = dz2 @ model.out_w.T
    da1 = dr1 * (cache.a1 > 0.0)
    grads["dense.w"] = cache.h_last.T @ da1
    grads["dense.b"] = da1.sum(axis=0)
    dh = da1 @ model.dense_w.T
    if cache.last_mask is not None:
        dh = dh * cache.last_mask

    n_layers = len(model.layers)
    # Final layer receives gradient only at its last timestep.
    lc = cache.layers[-1]
    dh_seq = np.zeros_like(lc.h)
    dh_seq[:, -1] = dh
    for idx in range(n_layers - 1, -1, -1):
        lc = cache.layers[idx]
        d_x, d_wx, d_wh, d_b = _layer_backward(lc, model.layers[idx], dh_seq)
        grads[f"lstm{idx}.wx"] = d_wx
        grads[f"lstm{idx}.wh"] = d_wh
        grads[f"lstm{idx}.b"] = d_b
        if idx > 0:
            mask = cache.seq_masks[idx - 1]
            dh_seq = d_x * mask if mask is not None else d_x
    return grads


def huber_loss(y, y_hat, delta: float = 1.0):
    """Huber loss on the residual y - y_hat: quadratic within delta, linear beyond."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    r = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    a = np.abs(r)
    out = np.where(a <= delta, 0.5 * r * r, delta * (a - 0.5 * delta))
    return float(out) if out.ndim == 0 else out


def huber_gradient(y, y_hat, delta: float = 1.0) -> np.ndarray:
    """dL/dy_hat of the Huber loss, elementwise."""
    r = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    return np.where(np.abs(r) <= delta, -r, -delta * np.sign(r))


def mae(y, y_hat) -> float:
    """Mean absolute error."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValueError("mae of empty input")
    return float(np.mean(np.abs(y - y_hat)))


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_mae: float
    val_loss: float
    val_mae: float


@dataclass
class TrainResult:
    model: LstmModel
    trace: tuple[EpochStats, ...]


class _Adam:
    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def train(config: LstmConfig, closes) -> TrainResult:
    """Fit the model on a close series; returns the model and per-epoch trace.

    Windows are split 90/10 chronologically; the scaler is fit only on closes
    touched by the training split. Mini-batch order, dropout masks, and
    initialization all derive from config.seed, so a rerun is bit-identical.
    """
    closes = np.asarray(closes, dtype=float)
    ds = make_windows(closes, config.window, config.horizon)
    n = ds.targets.size
    n_train = max(1, int(n * TRAIN_FRACTION))
    last_train_close = (n_train - 1) + config.window + config.horizon - 1
    scaler = fit_scaler(closes[: last_train_close + 1])
    inputs = scaler.transform(ds.inputs)
    targets = scaler.transform(ds.targets)

    rng = Generator(PCG64(SeedSequence(config.seed)))
    model = init_model(config, scaler, rng)
    adam = _Adam(model.named_params())

    x_val, y_val = inputs[n_train:], targets[n_train:]
    trace = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        mae_sum = 0.0
        for batch_idx, lo in enumerate(range(0, n_train, config.batch_size)):
            sel = order[lo : lo + config.batch_size]
            xb, yb = inputs[sel], targets[sel]
            try:
                pred, cache = forward_batch(model, xb, training=True, rng=rng)
            except FloatingPointError as exc:
                raise RuntimeError(f"non-finite loss at epoch {epoch}, batch {batch_idx}: {exc}") from exc
            losses = huber_loss(yb, pred, config.huber_delta)
            loss = float(np.mean(losses))
            if not np.isfinite(loss):
                raise RuntimeError(f"non-finite loss at epoch {epoch}, batch {batch_idx}")
            loss_sum += loss * sel.size
            mae_sum += float(np.sum(np.abs(yb - pred)))
            d_y = huber_gradient(yb, pred, config.huber_delta) / sel.size
            grads = backward_batch(model, cache, d_y)
            adam.step(model.named_params(), grads, config.learning_rate)

        if y_val.size:
            val_pred, _ = forward_batch(model, x_val, training=False)
            val_loss = float(np.mean(huber_loss(y_val, val_pred, config.huber_delta)))
            val_mae = mae(y_val, val_pred)
        else:
            val_loss = val_mae = float("nan")
        trace.append(
            EpochStats(epoch, loss_sum / n_train, mae_sum / n_train, val_loss, val_mae)
        )
    return TrainResult(model, tuple(trace))


def predict_next(model: LstmModel, last_closes) -> float:
    """Price forecast `horizon` days past the end of the given window."""
    last_closes = np.asarray(last_closes, dtype=float)
    if last_closes.shape != (model.config.window,):
        raise ValueError(
            f"expected {model.config.window} trailing closes, got shape {last_closes.shape}"
        )
    scaled = forward(model, model.scaler.transform(last_closes), training=False)
    return float(model.scaler.inverse_transform(scaled))


def trace_csv_text(trace) -> str:
    """Training trace export: epoch,train_loss,train_mae,val_loss,val_mae."""
    lines = ["epoch,train_loss,train_mae,val_loss,val_mae"]
    for row in trace:
        lines.append(
            f"{row.epoch},{row.train_loss:.12g},{row.train_mae:.12g},"
            f"{row.val_loss:.12g},{row.val_mae:.12g}"
        )
    return "\n".join(lines) + "\n"


def gradient_check(
    model: LstmModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    epsilon: float = 1e-5,
    coords_per_tensor: int = 100,
    coord_seed: int = 0,
    fault: str | None = None,
) -> float:
    """Max relative error of BPTT gradients vs central finite differences.

    Checks every parameter tensor on the Huber loss of the given scaled
    sample batch, dropout off. Tensors larger than coords_per_tensor are
    subsampled at seeded random coordinates. The relative error denominator
    is max(|analytic|, |numeric|, 1e-8). `fault` names a tensor whose
    analytic gradient is doubled first (for verifying the check can fail).
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    delta = model.config.huber_delta

    def loss() -> float:
        pred, _ = forward_batch(model, inputs, training=False)
        return float(np.mean(huber_loss(targets, pred, delta)))

    pred, cache = forward_batch(model, inputs, training=False)
    d_y = huber_gradient(targets, pred, delta) / targets.size
    analytic = backward_batch(model, cache, d_y)
    if fault is not None:
        if fault not in analytic:
            raise KeyError(f"unknown tensor {fault!r}")
        analytic[fault] = analytic[fault] * 2.0

    coord_rng = Generator(PCG64(SeedSequence(coord_seed)))
    worst = 0.0
    for name, param in model.named_params().items():
        flat = param.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        if flat.size <= coords_per_tensor:
            coords = np.arange(flat.size)
        else:
            coords = coord_rng.choice(flat.size, size=coords_per_tensor, replace=False)
        for k in coords:
            orig = flat[k]
            flat[k] = orig + epsilon
            hi = loss()
            flat[k] = orig - epsilon
            lo = loss()
            flat[k] = orig
            numeric = (hi - lo) / (2.0 * epsilon)
            a = grad_flat[k]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def _config_to_dict(config: LstmConfig) -> dict:
    return {
        "window": config.window,
        "horizon": config.horizon,
        "lstm_layers": list(config.lstm_layers),
        "dropout_rate": config.dropout_rate,
        "dense_width": config.dense_width,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "huber_delta": config.huber_delta,
        "seed": config.seed,
    }


def checkpoint_bytes(model: LstmModel) -> bytes:
    """Serialize a model to the checkpoint container format.

    Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON
    header (version, config, scaler bounds, named tensor shapes/offsets),
    then the concatenated tensors as little-endian float64 in C order.
    """
    tensors = []
    payload = bytearray()
    for name, arr in model.named_params().items():
        tensors.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    header = {
        "version": CHECKPOINT_VERSION,
        "config": _config_to_dict(model.config),
        "scaler": {"min": model.scaler.min, "max": model.scaler.max},
        "tensors": tensors,
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return CHECKPOINT_MAGIC + struct.pack("<I", len(encoded)) + encoded + bytes(payload)


def model_from_checkpoint_bytes(blob: bytes) -> LstmModel:
    """Parse and validate a checkpoint; raises ValueError on any corruption."""
    if len(blob) < len(CHECKPOINT_MAGIC) + 4 or blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError("not a model checkpoint (bad magic)")
    pos = len(CHECKPOINT_MAGIC)
    (header_len,) = struct.unpack("<I", blob[pos : pos + 4])
    pos += 4
    try:
        header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt checkpoint header: {exc}") from exc
    if header.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")

    config = LstmConfig(**header["config"])
    scaler = Scaler(header["scaler"]["min"], header["scaler"]["max"])
    expected = _param_shapes(config)
    listed = {t["name"]: tuple(t["shape"]) for t in header["tensors"]}
    if listed != expected:
        raise ValueError("checkpoint tensor names/shapes do not match its config")

    payload = blob[pos + header_len :]
    arrays: dict[str, np.ndarray] = {}
    for t in header["tensors"]:
        shape = tuple(t["shape"])
        count = int(np.prod(shape))
        start = t["offset"]
        end = start + count * 8
        if end > len(payload):
            raise ValueError(f"checkpoint payload truncated at tensor {t['name']}")
        arrays[t["name"]] = (
            np.frombuffer(payload[start:end], dtype="<f8").astype(float).reshape(shape)
        )

    layers = tuple(
        LayerParams(arrays[f"lstm{i}.wx"], arrays[f"lstm{i}.wh"], arrays[f"lstm{i}.b"])
        for i in range(len(config.lstm_layers))
    )
    model = LstmModel(
        config,
        scaler,
        layers,
        arrays["dense.w"],
        arrays["dense.b"],
        arrays["out.w"],
        arrays["out.b"],
    )
    model.check_finite()
    return model


def save_checkpoint(model: LstmModel, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model))


def load_checkpoint(path) -> LstmModel:
    with open(path, "rb") as fh:
        return model_from_checkpoint_bytes(fh.read())


def with_seed(config: LstmConfig, seed: int) -> LstmConfig:
    """Copy of the config with a different seed (for derived substreams)."""
    return replace(config, seed=seed)
