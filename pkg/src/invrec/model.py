"""Parameterized predictors: a linear scorer and a small ReLU multilayer
perceptron, with a designated representation tap, log-loss, and exact
backpropagation. Parameters live in a flat vector; the layout is the layer
sequence of (weight matrix row-major, bias vector).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

PROB_CLAMP = 1e-12

TAP_LOGIT = "logit"
TAP_LAST_HIDDEN = "last_hidden"


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class LinearKind:
    """Vacuous-representation scorer; the tap is the scalar logit."""


@dataclass(frozen=True)
class MlpKind:
    hidden_layers: int = 3
    hidden_dim: int = 32
    # mirrors the referenced feed-forward shape; width 256 available by flag


@dataclass(frozen=True)
class Predictor:
    kind: LinearKind | MlpKind
    input_dim: int
    params: np.ndarray
    tap: str = TAP_LOGIT

    def __post_init__(self):
        expected = n_params(self.kind, self.input_dim)
        if self.params.shape != (expected,):
            raise ModelError(
                f"parameter vector has length {self.params.shape}, expected ({expected},)"
            )

    def with_params(self, params: np.ndarray) -> "Predictor":
        return replace(self, params=np.asarray(params, dtype=float))


def layer_dims(kind, input_dim: int) -> list[tuple[int, int]]:
    if isinstance(kind, LinearKind):
        return [(input_dim, 1)]
    dims = [input_dim] + [kind.hidden_dim] * kind.hidden_layers + [1]
    return list(zip(dims[:-1], dims[1:]))


def n_params(kind, input_dim: int) -> int:
    return sum(i * o + o for i, o in layer_dims(kind, input_dim))


def _unpack(p: Predictor) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    offset = 0
    for i, o in layer_dims(p.kind, p.input_dim):
        w = p.params[offset : offset + i * o].reshape(i, o)
        offset += i * o
        b = p.params[offset : offset + o]
        offset += o
        layers.append((w, b))
    return layers


def init(kind, input_dim: int, seed: int, tap: str | None = None) -> Predictor:
    """Symmetric uniform init scaled by 1/sqrt(fan_in); zero biases."""
    if input_dim < 1:
        raise ModelError("input_dim must be >= 1")
    rng = np.random.default_rng(seed)
    chunks = []
    for i, o in layer_dims(kind, input_dim):
        bound = 1.0 / np.sqrt(i)
        chunks.append(rng.uniform(-bound, bound, size=i * o))
        chunks.append(np.zeros(o))
    if tap is None:
        tap = TAP_LOGIT if isinstance(kind, LinearKind) else TAP_LAST_HIDDEN
    return Predictor(kind, input_dim, np.concatenate(chunks), tap)


@dataclass(frozen=True)
class ForwardRecord:
    activations: tuple[np.ndarray, ...]  # post-ReLU hidden activations
    logits: np.ndarray  # (n,)
    probs: np.ndarray  # (n,)
    tap_values: np.ndarray  # (n, tap_dim)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(p: Predictor, features: np.ndarray) -> ForwardRecord:
    """Batched forward pass; ``features`` is (n, input_dim) or a single row."""
    x = np.asarray(features, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != p.input_dim:
        raise ModelError(
            f"feature length {x.shape[1]} != input_dim {p.input_dim}"
        )
    layers = _unpack(p)
    acts = []
    z = x
    for w, b in layers[:-1]:
        z = np.maximum(z @ w + b, 0.0)
        acts.append(z)
    w, b = layers[-1]
    logits = (z @ w + b)[:, 0]
    probs = _sigmoid(logits)
    if p.tap == TAP_LOGIT:
        tap_values = logits[:, None]
    elif p.tap == TAP_LAST_HIDDEN:
        if not acts:
            raise ModelError("last_hidden tap requires a hidden layer")
        tap_values = acts[-1]
    else:
        raise ModelError(f"unknown tap {p.tap!r}")
    return ForwardRecord(tuple(acts), logits, probs, tap_values)


def loss(prob, y) -> float:
    """Mean binary log-loss with probability clamping."""
    prob = np.clip(np.asarray(prob, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=float)
    return float(np.mean(-(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob))))


def predict_label(p: Predictor, features: np.ndarray) -> np.ndarray:
    """1 iff logit strictly positive (mirrors the strict choice rule)."""
    return (forward(p, features).logits > 0).astype(int)


def backward(
    p: Predictor,
    features: np.ndarray,
    labels: np.ndarray,
    penalty_grad_at_tap: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient over the flat parameter vector of the mean log-loss plus,
    if supplied, the chain-ruled contribution of per-sample penalty
    gradients entering at the representation tap.

    ``penalty_grad_at_tap`` rows are d(penalty)/d(tap_i); they are applied
    as-is (no extra averaging), so the caller owns the lambda scaling.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    y = np.asarray(labels, dtype=float).reshape(-1)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ModelError("features and labels disagree on the batch size")

    layers = _unpack(p)
    rec = forward(p, x)
    acts = [x] + list(rec.activations)  # acts[i] is the input of layer i

    # Clamping only guards the log; its gradient effect at the clamp edge is
    # ignored (the standard sigmoid cross-entropy shortcut).
    dlogit = (rec.probs - y) / n  # (n,)
    if penalty_grad_at_tap is not None:
        g = np.asarray(penalty_grad_at_tap, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        if g.shape[0] != n:
            raise ModelError("penalty gradient and batch size disagree")
        if p.tap == TAP_LOGIT:
            if g.shape[1] != 1:
                raise ModelError("logit tap expects 1-D penalty gradients")
            dlogit = dlogit + g[:, 0]

    grads = [None] * len(layers)
    delta = dlogit[:, None]  # gradient at the pre-activation of each layer
    for li in range(len(layers) - 1, -1, -1):
        w, _b = layers[li]
        inp = acts[li]
        grads[li] = (inp.T @ delta, delta.sum(axis=0))
        if li > 0:
            dz = delta @ w.T  # gradient at the post-ReLU activation acts[li]
            if (
                penalty_grad_at_tap is not None
                and p.tap == TAP_LAST_HIDDEN
                and li == len(layers) - 1
            ):
                g = np.asarray(penalty_grad_at_tap, dtype=float)
                if g.shape != dz.shape:
                    raise ModelError(
                        f"penalty gradient shape {g.shape} != tap shape {dz.shape}"
                    )
                dz = dz + g
            delta = dz * (acts[li] > 0)

    return np.concatenate(
        [np.concatenate([gw.reshape(-1), gb]) for gw, gb in grads]
    )


def save_checkpoint(p: Predictor, path) -> None:
    """Flat decimal parameter listing with an architecture header;
    round-trips bitwise through repr-encoded floats."""
    with open(path, "w") as fh:
        if isinstance(p.kind, LinearKind):
            fh.write(f"# linear input_dim={p.input_dim} tap={p.tap}\n")
        else:
            fh.write(
                f"# mlp input_dim={p.input_dim} hidden_layers={p.kind.hidden_layers} "
                f"hidden_dim={p.kind.hidden_dim} tap={p.tap}\n"
            )
        for v in p.params:
            fh.write(repr(float(v)) + "\n")


def load_checkpoint(path) -> Predictor:
    with open(path) as fh:
        header = fh.readline().strip()
        values = [float(line) for line in fh if line.strip()]
    if not header.startswith("# "):
        raise ModelError("missing checkpoint header")
    fields = dict(
        tok.split("=", 1) for tok in header[2:].split()[1:] if "=" in tok
    )
    arch = header[2:].split()[0]
    input_dim = int(fields["input_dim"])
    tap = fields.get("tap", TAP_LOGIT)
    if arch == "linear":
        kind = LinearKind()
    elif arch == "mlp":
        kind = MlpKind(int(fields["hidden_layers"]), int(fields["hidden_dim"]))
    else:
        raise ModelError(f"unknown architecture {arch!r}")
    return Predictor(kind, input_dim, np.asarray(values, dtype=float), tap)
