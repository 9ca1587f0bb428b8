"""Boundedly-rational user choice.

A user integrates subjective beliefs about an unobserved feature into a
perceived value and chooses deterministically on its sign. Tables are dense
over small discrete domains; x, r, e, and the unobserved feature are each a
single discrete variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scm import DiscreteDataset

_ROW_SUM_TOL = 1e-12


class ChoiceError(Exception):
    pass


@dataclass(frozen=True)
class BeliefModel:
    """Belief table over the unobserved feature: shape (x, r, e, hidden)."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 4:
            raise ChoiceError("belief table must have shape (x, r, e, hidden)")
        sums = t.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > _ROW_SUM_TOL) or np.any(t < 0):
            raise ChoiceError("belief rows must be probability vectors")
        object.__setattr__(self, "table", t)


@dataclass(frozen=True)
class ValueModel:
    """Value per full assignment: shape (x, hidden, r)."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 3:
            raise ChoiceError("value table must have shape (x, hidden, r)")
        if not np.all(np.isfinite(t)):
            raise ChoiceError("value entries must be finite")
        object.__setattr__(self, "table", t)


def perceived_value(
    belief: BeliefModel, value: ValueModel, x: int, r: int, e: int
) -> float:
    """Belief-weighted value: sum over the hidden feature of
    value(x, hidden, r) * belief(hidden | x, r, e)."""
    nx, nr, ne, nh = belief.table.shape
    if not (0 <= x < nx and 0 <= r < nr and 0 <= e < ne):
        raise ChoiceError(f"assignment (x={x}, r={r}, e={e}) out of domain")
    if value.table.shape[0] != nx or value.table.shape[1] != nh or value.table.shape[2] != nr:
        raise ChoiceError("value and belief tables have mismatched domains")
    return float(value.table[x, :, r] @ belief.table[x, r, e])


def choose(v_tilde: float) -> int:
    """1 iff the perceived value is strictly positive."""
    return 1 if v_tilde > 0 else 0


def simulate_choices(
    belief: BeliefModel,
    value: ValueModel,
    contexts: DiscreteDataset,
    seed: int | None = None,
) -> DiscreteDataset:
    """Fill in y for every (x, r, e) context. Choice is deterministic given
    the context, so the seed is accepted for interface stability but never
    consumed."""
    del seed
    if "x" not in contexts.variables or "r" not in contexts.variables:
        raise ChoiceError("contexts must carry x and r columns")
    nx, nr, ne, _ = belief.table.shape
    xs, rs, es = contexts.column("x"), contexts.column("r"), contexts.env
    if len(xs) == 0:
        return DiscreteDataset(
            contexts.variables + ("y",),
            np.zeros((0, len(contexts.variables) + 1), dtype=int),
            contexts.env,
        )
    if xs.max() >= nx or rs.max() >= nr or es.max() >= ne:
        raise ChoiceError("context values out of the belief table domain")
    # dense perceived-value table over the whole domain, then a lookup
    v_tilde = np.einsum("xhr,xreh->xre", value.table, belief.table)
    ys = (v_tilde[xs, rs, es] > 0).astype(int)
    return DiscreteDataset(
        contexts.variables + ("y",),
        np.column_stack([contexts.data, ys]),
        contexts.env,
    )
