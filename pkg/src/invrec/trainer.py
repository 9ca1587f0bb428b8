"""Penalized empirical-risk minimization across environments.

The objective is mean log-loss over the pooled batch plus lambda times an
invariance penalty: marginal (each environment's representations against the
pooled complement) or conditional (the same within each label stratum).
Mini-batches are environment-balanced; all randomness flows from the config
seed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import divergence as dv
from . import model as md


class TrainerError(Exception):
    pass


class TrainingDivergedError(TrainerError):
    """NaN or infinity in the objective during training."""


class PenaltyKind(enum.Enum):
    NONE = "none"
    MARGINAL = "marginal"
    CONDITIONAL = "conditional"


class DivergenceKind(enum.Enum):
    MMD = "mmd"
    CORAL = "coral"


class Optimizer(enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass(frozen=True)
class LambdaSchedule:
    """Constant(lam) or two-phase (lam1 for the first epochs1 epochs, then
    lam2); the phase switch is at epoch granularity."""

    lam1: float
    epochs1: int | None = None
    lam2: float | None = None

    def __post_init__(self):
        if self.lam1 < 0 or (self.lam2 is not None and self.lam2 < 0):
            raise TrainerError("lambda values must be nonnegative")
        if (self.epochs1 is None) != (self.lam2 is None):
            raise TrainerError("two-phase schedule needs both epochs1 and lam2")
        if self.epochs1 is not None and self.epochs1 < 1:
            raise TrainerError("epochs1 must be >= 1")

    def at_epoch(self, epoch: int) -> float:
        if self.epochs1 is not None and epoch >= self.epochs1:
            return float(self.lam2)
        return float(self.lam1)

    @staticmethod
    def constant(lam: float) -> "LambdaSchedule":
        return LambdaSchedule(lam)


@dataclass(frozen=True)
class TrainConfig:
    penalty: PenaltyKind = PenaltyKind.NONE
    divergence: DivergenceKind = DivergenceKind.MMD
    kernel: dv.KernelSpec = field(default_factory=dv.KernelSpec)
    lam: LambdaSchedule = field(default_factory=lambda: LambdaSchedule(0.0))
    learning_rate: float = 0.1
    epochs: int = 20
    batch_size: int = 256  # per-environment sub-batch size
    min_cell: int = 4
    seed: int = 0
    optimizer: Optimizer = Optimizer.SGD
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise TrainerError("learning_rate must be positive")
        if self.penalty is not PenaltyKind.NONE and self.batch_size < 2:
            raise TrainerError("batch_size must be >= 2 with a penalty")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    penalty: list[float] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,loss,penalty,lambda\n")
            for i, (l, p, lam) in enumerate(zip(self.loss, self.penalty, self.lam)):
                fh.write(f"{i},{l!r},{p!r},{lam!r}\n")


@dataclass(frozen=True)
class PenaltyResult:
    value: float
    tap_grads: dict[int, np.ndarray]  # per-environment per-sample gradients
    skipped_cells: tuple[tuple, ...]  # (env, label) cells below min_cell


def _divergence_fns(kind: DivergenceKind, kernel: dv.KernelSpec):
    if kind is DivergenceKind.MMD:
        return (
            lambda a, b: dv.mmd2(a, b, kernel),
            lambda a, b: dv.grad_mmd2(a, b, kernel),
        )
    return dv.coral, dv.grad_coral


def penalty_value(
    predictor: md.Predictor,
    env_batches: Mapping[int, tuple[np.ndarray, np.ndarray | None]],
    kind: PenaltyKind,
    div: DivergenceKind = DivergenceKind.MMD,
    kernel: dv.KernelSpec = dv.KernelSpec(),
    min_cell: int = 4,
) -> PenaltyResult:
    """Invariance penalty and its per-sample gradient at the tap.

    Marginal: sum over environments of D(tap_k, pooled complement).
    Conditional: the same within each label stratum, summed over labels.
    Cells with fewer than ``min_cell`` rows on either side are skipped.
    """
    envs = sorted(env_batches)
    taps = {}
    labels = {}
    for e in envs:
        x, y = env_batches[e]
        taps[e] = md.forward(predictor, x).tap_values
        labels[e] = None if y is None else np.asarray(y).reshape(-1)
    grads = {e: np.zeros_like(taps[e]) for e in envs}
    if len(envs) < 2:
        return PenaltyResult(0.0, grads, ())

    value_fn, grad_fn = _divergence_fns(div, kernel)

    if kind is PenaltyKind.NONE:
        return PenaltyResult(0.0, grads, ())
    if kind is PenaltyKind.CONDITIONAL and any(labels[e] is None for e in envs):
        raise TrainerError("conditional penalty requires labels per environment")

    if kind is PenaltyKind.MARGINAL:
        cells = [(e, None) for e in envs]
    else:
        label_values = sorted(
            set(np.concatenate([labels[e] for e in envs]).tolist())
        )
        cells = [(e, y) for y in label_values for e in envs]

    total = 0.0
    skipped = []
    for e, y in cells:
        if y is None:
            own = taps[e]
            own_rows = np.arange(own.shape[0])
            rest = [(o, np.arange(taps[o].shape[0])) for o in envs if o != e]
        else:
            own_rows = np.flatnonzero(labels[e] == y)
            own = taps[e][own_rows]
            rest = [
                (o, np.flatnonzero(labels[o] == y)) for o in envs if o != e
            ]
        rest = [(o, rows) for o, rows in rest if rows.size > 0]
        comp_size = sum(rows.size for _o, rows in rest)
        if own.shape[0] < min_cell or comp_size < min_cell:
            skipped.append((e, y))
            continue
        comp = np.concatenate([taps[o][rows] for o, rows in rest])
        total += value_fn(own, comp)
        g_own, g_comp = grad_fn(own, comp)
        grads[e][own_rows] += g_own
        offset = 0
        for o, rows in rest:
            grads[o][rows] += g_comp[offset : offset + rows.size]
            offset += rows.size
    return PenaltyResult(float(total), grads, tuple(skipped))


def objective(
    predictor: md.Predictor,
    env_batches: Mapping[int, tuple[np.ndarray, np.ndarray]],
    lam: float,
    kind: PenaltyKind,
    div: DivergenceKind = DivergenceKind.MMD,
    kernel: dv.KernelSpec = dv.KernelSpec(),
    min_cell: int = 4,
) -> float:
    """Pooled mean log-loss plus lambda times the invariance penalty."""
    xs = np.concatenate([env_batches[e][0] for e in sorted(env_batches)])
    ys = np.concatenate([env_batches[e][1] for e in sorted(env_batches)])
    base = md.loss(md.forward(predictor, xs).probs, ys)
    if lam == 0.0 or kind is PenaltyKind.NONE:
        return base
    pen = penalty_value(predictor, env_batches, kind, div, kernel, min_cell)
    return base + lam * pen.value


def train(
    config: TrainConfig,
    env_data: Mapping[int, tuple[np.ndarray, np.ndarray]],
    predictor: md.Predictor | None = None,
    kind: md.LinearKind | md.MlpKind | None = None,
) -> tuple[md.Predictor, TrainHistory]:
    """Environment-balanced mini-batch gradient descent on the penalized
    objective. Deterministic given the config seed."""
    envs = sorted(env_data)
    if not envs:
        raise TrainerError("no environments")
    for e in envs:
        if env_data[e][0].shape[0] == 0:
            raise TrainerError(f"environment {e} is empty")
    input_dim = env_data[envs[0]][0].shape[1]
    if predictor is None:
        predictor = md.init(kind or md.LinearKind(), input_dim, config.seed)
    params = predictor.params.copy()
    rng = np.random.default_rng(config.seed)

    adam_m = np.zeros_like(params)
    adam_v = np.zeros_like(params)
    adam_t = 0

    sizes = {e: env_data[e][0].shape[0] for e in envs}
    steps_per_epoch = max(min(sizes.values()) // config.batch_size, 1)
    history = TrainHistory()

    for epoch in range(config.epochs):
        lam = config.lam.at_epoch(epoch)
        perms = {e: rng.permutation(sizes[e]) for e in envs}
        epoch_loss = []
        epoch_pen = []
        for step in range(steps_per_epoch):
            batches = {}
            for e in envs:
                lo = step * config.batch_size
                hi = min(lo + config.batch_size, sizes[e])
                idx = perms[e][lo:hi]
                batches[e] = (env_data[e][0][idx], env_data[e][1][idx])

            p = predictor.with_params(params)
            pooled_x = np.concatenate([batches[e][0] for e in envs])
            pooled_y = np.concatenate([batches[e][1] for e in envs])
            rec = md.forward(p, pooled_x)
            batch_loss = md.loss(rec.probs, pooled_y)

            pen_val = 0.0
            pooled_pen_grad = None
            if config.penalty is not PenaltyKind.NONE and lam > 0.0:
                pen = penalty_value(
                    p,
                    batches,
                    config.penalty,
                    config.divergence,
                    config.kernel,
                    config.min_cell,
                )
                pen_val = pen.value
                pooled_pen_grad = lam * np.concatenate(
                    [pen.tap_grads[e] for e in envs]
                )
            if not np.isfinite(batch_loss + lam * pen_val):
                raise TrainingDivergedError(
                    f"objective is not finite at epoch {epoch}, step {step}"
                )
            grad = md.backward(p, pooled_x, pooled_y, pooled_pen_grad)

            if config.optimizer is Optimizer.SGD:
                params = params - config.learning_rate * grad
            else:
                adam_t += 1
                adam_m = config.adam_beta1 * adam_m + (1 - config.adam_beta1) * grad
                adam_v = config.adam_beta2 * adam_v + (1 - config.adam_beta2) * grad**2
                m_hat = adam_m / (1 - config.adam_beta1**adam_t)
                v_hat = adam_v / (1 - config.adam_beta2**adam_t)
                params = params - config.learning_rate * m_hat / (
                    np.sqrt(v_hat) + config.adam_eps
                )
            epoch_loss.append(batch_loss)
            epoch_pen.append(pen_val)
        history.loss.append(float(np.mean(epoch_loss)))
        history.penalty.append(float(np.mean(epoch_pen)))
        history.lam.append(lam)

    return predictor.with_params(params), history


@dataclass(frozen=True)
class InvarianceResult:
    statistic: float
    p_value: float


def verify_invariance(
    predictor: md.Predictor,
    env_data: Mapping[int, tuple[np.ndarray, np.ndarray]],
    mode: PenaltyKind = PenaltyKind.MARGINAL,
    n_permutations: int = 500,
    seed: int = 0,
    max_per_env: int = 800,
) -> InvarianceResult:
    """Permutation two-sample test of score invariance across environments.

    The statistic is the summed squared MMD of the predictor's scores
    grouped by environment (within label strata for the conditional mode);
    the null is simulated by shuffling environment labels (within strata).
    """
    envs = sorted(env_data)
    if len(envs) < 2:
        raise TrainerError("invariance check needs at least two environments")
    if mode not in (PenaltyKind.MARGINAL, PenaltyKind.CONDITIONAL):
        raise TrainerError("mode must be marginal or conditional")
    rng = np.random.default_rng(seed)

    scores, env_col, label_col = [], [], []
    for e in envs:
        x, y = env_data[e]
        n = x.shape[0]
        idx = (
            rng.choice(n, size=max_per_env, replace=False)
            if n > max_per_env
            else np.arange(n)
        )
        scores.append(md.forward(predictor, x[idx]).logits)
        env_col.append(np.full(idx.size, e))
        if mode is PenaltyKind.CONDITIONAL:
            if y is None:
                raise TrainerError("conditional mode requires labels")
            label_col.append(np.asarray(y).reshape(-1)[idx])
    scores = np.concatenate(scores)
    env_col = np.concatenate(env_col)
    strata = (
        np.concatenate(label_col)
        if mode is PenaltyKind.CONDITIONAL
        else np.zeros_like(env_col)
    )

    if np.allclose(scores, scores[0]):
        # constant predictor: identical score distributions by construction
        return InvarianceResult(0.0, 1.0)

    sigma = dv.median_bandwidth(scores[:, None])
    gram = dv.gaussian_kernel_matrix(scores[:, None], sigma)

    def statistic(env_assignment):
        total = 0.0
        for s in np.unique(strata):
            in_s = strata == s
            for e in envs:
                in_a = in_s & (env_assignment == e)
                in_b = in_s & (env_assignment != e)
                if in_a.sum() < 2 or in_b.sum() < 2:
                    continue
                sub = np.flatnonzero(in_s)
                total += dv.mmd2_from_gram(
                    gram[np.ix_(sub, sub)], (env_assignment == e)[sub]
                )
        return total

    observed = statistic(env_col)
    count = 0
    for _ in range(n_permutations):
        perm = env_col.copy()
        for s in np.unique(strata):
            m = np.flatnonzero(strata == s)
            perm[m] = perm[rng.permutation(m)]
        if statistic(perm) >= observed - 1e-15:
            count += 1
    p = (1 + count) / (1 + n_permutations)
    return InvarianceResult(float(observed), float(p))
