"""Exact discrete structural causal models.

Environment-indexed DAGs over small discrete variables, with exact joint
computation, selection reweighting, seeded forward sampling, Bayes-oracle
classifiers, conditional independence tests, and the believer-from-skeptic
model construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import chi2

GRAPH_XSP_TO_R = "x_sp->r"
GRAPH_R_TO_XSP = "r->x_sp"
GRAPH_NONE = "none"

CLASS_CAUSAL = "causal"
CLASS_ANTI_CAUSAL = "anti_causal"

_ROW_SUM_TOL = 1e-12
_JOINT_SUM_TOL = 1e-10


class ScmError(Exception):
    pass


class InvalidModelError(ScmError):
    """Raised when an operation requires a valid model and validation fails."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid model: " + "; ".join(self.violations))


class DegenerateSelectionError(ScmError):
    """All selection weights are zero for the requested environment."""


class ZeroProbabilityError(ScmError):
    """Conditioning on an event of probability zero."""


class ConstructionError(ScmError):
    """The believer-from-skeptic construction has no feasible solution."""


@dataclass(frozen=True)
class Variable:
    name: str
    arity: int = 2


@dataclass(frozen=True)
class FactorTable:
    """Conditional probability table p(child | parents).

    ``table`` has shape ``(*parent_arities, child_arity)``; each row (the
    last axis) is a probability vector.
    """

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", np.asarray(self.table, dtype=float))


@dataclass(frozen=True)
class SelectionSpec:
    """Selection weights indexed by (label value, environment value).

    The joint for environment e is reweighted by ``weights[y, e]`` and
    renormalized; this is the mechanism that induces label/environment
    confounding.
    """

    label: str
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


@dataclass(frozen=True)
class DiscreteScm:
    """An environment-indexed discrete causal model.

    ``factors`` maps each variable name to either a single FactorTable
    (shared across environments) or a tuple with one table per environment
    value. The environment variable itself is implicit: joints are computed
    per environment value in ``range(n_envs)``.
    """

    variables: tuple[Variable, ...]
    n_envs: int
    factors: Mapping[str, FactorTable | tuple[FactorTable, ...]]
    selection: SelectionSpec | None = None
    graph_tag: str = GRAPH_NONE
    class_tag: str = CLASS_ANTI_CAUSAL
    env_name: str = "e"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "factors", dict(self.factors))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def factor_for(self, name: str, env: int) -> FactorTable:
        f = self.factors[name]
        if isinstance(f, FactorTable):
            return f
        return f[env]

    def restrict_envs(self, envs: Sequence[int]) -> "DiscreteScm":
        """New model over the given environment values (reindexed 0..k-1)."""
        envs = list(envs)
        factors = {}
        for name, f in self.factors.items():
            if isinstance(f, FactorTable):
                factors[name] = f
            else:
                factors[name] = tuple(f[e] for e in envs)
        selection = self.selection
        if selection is not None:
            selection = SelectionSpec(selection.label, selection.weights[:, envs])
        return replace(self, n_envs=len(envs), factors=factors, selection=selection)


@dataclass(frozen=True)
class JointTable:
    """Dense exact joint distribution over an ordered variable tuple."""

    variables: tuple[Variable, ...]
    probs: np.ndarray

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def axis(self, name: str) -> int:
        return self.names.index(name)

    def marginal(self, keep: Sequence[str]) -> "JointTable":
        keep = list(keep)
        drop = tuple(i for i, n in enumerate(self.names) if n not in keep)
        probs = self.probs.sum(axis=drop)
        kept_vars = tuple(v for v in self.variables if v.name in keep)
        # reorder axes to match requested order
        cur = [v.name for v in kept_vars]
        perm = [cur.index(n) for n in keep]
        return JointTable(
            tuple(kept_vars[i] for i in perm), np.transpose(probs, perm)
        )


@dataclass(frozen=True)
class DiscreteDataset:
    """Samples of discrete variables plus an environment column."""

    variables: tuple[str, ...]
    data: np.ndarray  # (n, len(variables)) int
    env: np.ndarray  # (n,) int

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.variables.index(name)]

    def subset(self, idx: np.ndarray) -> "DiscreteDataset":
        return DiscreteDataset(self.variables, self.data[idx], self.env[idx])

    def by_env(self) -> dict[int, "DiscreteDataset"]:
        return {
            int(e): self.subset(self.env == e) for e in np.unique(self.env)
        }

    def to_csv(self, path) -> None:
        header = ",".join(self.variables + ("e",))
        rows = np.column_stack([self.data, self.env])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(str(int(v)) for v in row) + "\n")

    @staticmethod
    def from_csv(path) -> "DiscreteDataset":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = [
                [int(tok) for tok in line.strip().split(",")]
                for line in fh
                if line.strip()
            ]
        if header[-1] != "e":
            raise ScmError("dataset file must end with an 'e' column")
        arr = np.asarray(rows, dtype=int).reshape(len(rows), len(header))
        return DiscreteDataset(tuple(header[:-1]), arr[:, :-1], arr[:, -1])


def concat_datasets(parts: Sequence[DiscreteDataset]) -> DiscreteDataset:
    first = parts[0]
    for p in parts[1:]:
        if p.variables != first.variables:
            raise ScmError("datasets have mismatched variables")
    return DiscreteDataset(
        first.variables,
        np.concatenate([p.data for p in parts]),
        np.concatenate([p.env for p in parts]),
    )


def validate(scm: DiscreteScm) -> list[str]:
    """Structural checks; returns a list of violations (empty iff valid)."""
    violations = []
    names = [v.name for v in scm.variables]
    if len(set(names)) != len(names):
        violations.append("variable ids are not unique")
    for v in scm.variables:
        if v.arity < 2:
            violations.append(f"variable {v.name} has arity {v.arity} < 2")
    if scm.n_envs < 1:
        violations.append("n_envs must be >= 1")

    # every variable carries a factor, environment-indexed factors cover all envs
    tables: list[tuple[str, int | None, FactorTable]] = []
    for v in scm.variables:
        f = scm.factors.get(v.name)
        if f is None:
            violations.append(f"variable {v.name} has no factor")
            continue
        if isinstance(f, FactorTable):
            tables.append((v.name, None, f))
        else:
            if len(f) != scm.n_envs:
                violations.append(
                    f"factor for {v.name} covers {len(f)} environments, "
                    f"expected {scm.n_envs}"
                )
            tables.extend((v.name, e, ft) for e, ft in enumerate(f))
    for name in scm.factors:
        if name not in names:
            violations.append(f"factor for unknown variable {name}")

    # table shapes and row normalization
    for name, env, ft in tables:
        where = f"factor {name}" + ("" if env is None else f" (env {env})")
        if ft.child != name:
            violations.append(f"{where}: child field is {ft.child}")
        try:
            expected = tuple(
                scm.variable(p).arity for p in ft.parents
            ) + (scm.variable(name).arity,)
        except KeyError as exc:
            violations.append(f"{where}: unknown parent {exc.args[0]}")
            continue
        if ft.table.shape != expected:
            violations.append(
                f"{where}: table shape {ft.table.shape} != {expected}"
            )
            continue
        rows = ft.table.reshape(-1, ft.table.shape[-1])
        for i, row in enumerate(rows):
            if np.any(row < 0) or np.any(row > 1):
                violations.append(f"{where}: row {i} has entries outside [0,1]")
            if abs(row.sum() - 1.0) > _ROW_SUM_TOL:
                violations.append(
                    f"{where}: row {i} sums to {row.sum():.12g}, expected 1"
                )

    # acyclicity of the parent relation (Kahn's algorithm)
    parents = {}
    for name, _env, ft in tables:
        parents.setdefault(name, set()).update(ft.parents)
    indeg = {n: len(parents.get(n, ())) for n in names}
    children = {n: [] for n in names}
    for n, ps in parents.items():
        for p in ps:
            if p in children:
                children[p].append(n)
    queue = [n for n in names if indeg.get(n, 0) == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen != len(names):
        cyclic = sorted(n for n in names if indeg.get(n, 0) > 0)
        violations.append("cycle among variables: " + ", ".join(cyclic))

    if scm.selection is not None:
        sel = scm.selection
        if sel.label not in names:
            violations.append(f"selection label {sel.label} is not a variable")
        else:
            expected = (scm.variable(sel.label).arity, scm.n_envs)
            if sel.weights.shape != expected:
                violations.append(
                    f"selection weights shape {sel.weights.shape} != {expected}"
                )
            else:
                if np.any(sel.weights < 0):
                    violations.append("selection weights must be nonnegative")
                for e in range(scm.n_envs):
                    if not np.any(sel.weights[:, e] > 0):
                        violations.append(
                            f"selection weights all zero for env {e}"
                        )
    return violations


def topological_order(scm: DiscreteScm) -> list[str]:
    parents = {}
    for v in scm.variables:
        f = scm.factors[v.name]
        ft = f if isinstance(f, FactorTable) else f[0]
        parents[v.name] = list(ft.parents)
    order, done = [], set()

    def visit(n):
        if n in done:
            return
        for p in parents[n]:
            visit(p)
        done.add(n)
        order.append(n)

    for v in scm.variables:
        visit(v.name)
    return order


def joint_distribution(scm: DiscreteScm, env: int) -> JointTable:
    """Exact joint at environment ``env``: product of factors, then
    selection reweighting and renormalization."""
    if not 0 <= env < scm.n_envs:
        raise ScmError(f"environment {env} out of range [0, {scm.n_envs})")
    if scm.selection is not None and not np.any(scm.selection.weights[:, env] > 0):
        raise DegenerateSelectionError(f"all selection weights zero for env {env}")
    violations = validate(scm)
    if violations:
        raise InvalidModelError(violations)

    names = list(scm.names)
    shape = tuple(v.arity for v in scm.variables)
    probs = np.ones(shape)
    for v in scm.variables:
        ft = scm.factor_for(v.name, env)
        axes = [names.index(p) for p in ft.parents] + [names.index(v.name)]
        perm = np.argsort(axes)
        t = np.transpose(ft.table, perm)
        expanded = [1] * len(shape)
        for ax in axes:
            expanded[ax] = shape[ax]
        probs = probs * t.reshape(expanded)

    if scm.selection is not None:
        w = scm.selection.weights[:, env]
        ax = names.index(scm.selection.label)
        expanded = [1] * len(shape)
        expanded[ax] = shape[ax]
        probs = probs * w.reshape(expanded)
        total = probs.sum()
        if total <= 0:
            raise DegenerateSelectionError(
                f"all selection weights zero for env {env}"
            )
        probs = probs / total

    total = probs.sum()
    if abs(total - 1.0) > _JOINT_SUM_TOL:
        probs = probs / total
    return JointTable(scm.variables, probs)


def sample(scm: DiscreteScm, env: int, n: int, seed: int) -> DiscreteDataset:
    """Draw ``n`` iid samples from the exact joint at ``env``."""
    if n < 1:
        raise ScmError("n must be >= 1")
    joint = joint_distribution(scm, env)
    flat = joint.probs.reshape(-1)
    rng = np.random.default_rng(seed)
    idx = rng.choice(flat.size, size=n, p=flat)
    coords = np.column_stack(np.unravel_index(idx, joint.probs.shape))
    return DiscreteDataset(joint.names, coords, np.full(n, env, dtype=int))


def pooled_joint(
    scm: DiscreteScm, envs: Sequence[int], env_weights: Sequence[float] | None = None
) -> JointTable:
    """Mixture of per-environment joints (uniform environment weights by
    default); the observational distribution over the pooled data."""
    envs = list(envs)
    if env_weights is None:
        env_weights = [1.0 / len(envs)] * len(envs)
    probs = sum(
        w * joint_distribution(scm, e).probs for w, e in zip(env_weights, envs)
    )
    return JointTable(scm.variables, probs)


def joint_with_env(
    scm: DiscreteScm, envs: Sequence[int], env_weights: Sequence[float] | None = None
) -> JointTable:
    """Joint over (variables..., e) with e mixed over ``envs``."""
    envs = list(envs)
    if env_weights is None:
        env_weights = [1.0 / len(envs)] * len(envs)
    per_env = [
        w * joint_distribution(scm, e).probs for w, e in zip(env_weights, envs)
    ]
    probs = np.stack(per_env, axis=-1)
    variables = scm.variables + (Variable(scm.env_name, max(len(envs), 2)),)
    return JointTable(variables, probs)


def conditional(joint: JointTable, target: str, given: Mapping[str, int]) -> np.ndarray:
    """Exact conditional p(target | given); errors on zero-probability events."""
    if target in given:
        raise ScmError("conditioning set must not contain the target")
    keep = [target] + list(given)
    marg = joint.marginal(keep)
    sl = tuple([slice(None)] + [given[n] for n in given])
    vec = marg.probs[sl]
    total = vec.sum()
    if total <= 0:
        raise ZeroProbabilityError(f"conditioning event {dict(given)} has probability 0")
    return vec / total


def bayes_optimal(
    joint: JointTable, features: Sequence[str], label: str = "y"
) -> tuple[np.ndarray, float]:
    """Exact argmax-posterior classifier over a feature subset.

    Returns (classifier, accuracy): the classifier maps each feature
    assignment to the label value maximizing p(label | features); ties are
    broken toward the larger label value (toward y=1 for binary labels).
    Accuracy is computed exactly from the joint.
    """
    features = list(features)
    if label in features:
        raise ScmError("feature subset must not contain the label")
    if label not in joint.names:
        raise ScmError(f"label {label} not among joint variables")
    marg = joint.marginal(features + [label])
    probs = marg.probs  # (*feature arities, label arity)
    # argmax over the label axis with ties toward the larger value
    flipped = probs[..., ::-1]
    classifier = probs.shape[-1] - 1 - np.argmax(flipped, axis=-1)
    accuracy = float(
        np.take_along_axis(probs, classifier[..., None], axis=-1).sum()
    )
    return classifier, accuracy


def conditional_mutual_information(
    joint: JointTable, a: str, b: str, given: Sequence[str] = ()
) -> float:
    """I(a; b | given) in nats, computed exactly from the joint."""
    given = list(given)
    marg = joint.marginal([a, b] + given)
    p = marg.probs
    p_ag = p.sum(axis=1, keepdims=True)
    p_bg = p.sum(axis=0, keepdims=True)
    p_g = p.sum(axis=(0, 1), keepdims=True)
    num = p * np.broadcast_to(p_g, p.shape)
    den = np.broadcast_to(p_ag, p.shape) * np.broadcast_to(p_bg, p.shape)
    terms = np.zeros_like(p)
    ok = (p > 0) & (den > 0)
    terms[ok] = p[ok] * np.log(num[ok] / den[ok])
    return float(terms.sum())


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    p_value: float
    dof: int
    method: str  # "chi2" or "permutation"


def ci_test(
    data: DiscreteDataset,
    a: str,
    b: str,
    given: Sequence[str] = (),
    n_permutations: int = 2000,
    seed: int = 0,
) -> CiTestResult:
    """Likelihood-ratio (G) test of a independent of b given a variable set.

    The G statistic is summed over strata of the conditioning assignment
    with a chi-square reference p-value. If any stratum has an expected
    count below 5, the p-value switches to a Monte-Carlo permutation
    estimate (b permuted within strata).
    """
    cols = {a, b, *given}
    for c in cols:
        if c != "e" and c not in data.variables:
            raise ScmError(f"variable {c} not in dataset")

    def col(name):
        return data.env if name == "e" else data.column(name)

    av, bv = col(a), col(b)
    a_vals = np.unique(av)
    b_vals = np.unique(bv)
    if given:
        strata_key = np.zeros(len(data), dtype=int)
        for g in given:
            gv = col(g)
            strata_key = strata_key * (gv.max() + 1) + gv
    else:
        strata_key = np.zeros(len(data), dtype=int)
    strata = np.unique(strata_key)
    if len(data) == 0 or len(strata) == 0:
        raise ScmError("no strata available for the CI test")

    def g_statistic(bvalues):
        stat = 0.0
        min_expected = np.inf
        dof = 0
        for s in strata:
            m = strata_key == s
            if not np.any(m):
                continue
            obs = np.zeros((len(a_vals), len(b_vals)))
            for i, x in enumerate(a_vals):
                for j, yv in enumerate(b_vals):
                    obs[i, j] = np.sum((av[m] == x) & (bvalues[m] == yv))
            n_s = obs.sum()
            if n_s == 0:
                continue
            expected = obs.sum(1, keepdims=True) * obs.sum(0, keepdims=True) / n_s
            nz = (obs > 0) & (expected > 0)
            stat += 2.0 * np.sum(obs[nz] * np.log(obs[nz] / expected[nz]))
            pos = expected[(obs.sum(1) > 0).nonzero()[0]][
                :, (obs.sum(0) > 0).nonzero()[0]
            ]
            if pos.size:
                min_expected = min(min_expected, pos.min())
            ra = int(np.sum(obs.sum(1) > 0))
            rb = int(np.sum(obs.sum(0) > 0))
            dof += max(ra - 1, 0) * max(rb - 1, 0)
        return stat, dof, min_expected

    stat, dof, min_expected = g_statistic(bv)
    if min_expected >= 5 and dof > 0:
        return CiTestResult(stat, float(chi2.sf(stat, dof)), dof, "chi2")

    # sparse strata: Monte-Carlo permutation null (b shuffled within strata)
    rng = np.random.default_rng(seed)
    count = 0
    for _ in range(n_permutations):
        perm = bv.copy()
        for s in strata:
            m = np.flatnonzero(strata_key == s)
            perm[m] = perm[rng.permutation(m)]
        pstat, _, _ = g_statistic(perm)
        if pstat >= stat - 1e-12:
            count += 1
    p = (1 + count) / (1 + n_permutations)
    return CiTestResult(stat, p, dof, "permutation")


@dataclass(frozen=True)
class BelieverConstruction:
    """Result of the believer-from-skeptic construction."""

    model: DiscreteScm
    unique_solution: bool  # feasible set was a single point per cell

    @property
    def environment_dependence_induced(self) -> bool:
        return not self.unique_solution


def construct_believer_from_skeptic(
    source: DiscreteScm, perturbation: float = 0.25
) -> BelieverConstruction:
    """Rebuild a two-environment model with the reversed r/x_sp edge whose
    pooled observational joint equals the source's.

    The source must be a valid two-environment binary model over
    {x_sp, x_ac, r, y} in which r is a non-descendant of the environment.
    The returned model carries factors p(r | y, x_sp) := source conditional
    and per-environment factors p^e(x_sp | y) solving the pooled-marginal
    balance equation; among feasible solutions, the point at ``perturbation``
    of the feasible interval's length away from the identity solution is
    chosen so that p(y | r, x_ac) becomes environment-dependent.
    """
    violations = validate(source)
    if violations:
        raise InvalidModelError(violations)
    required = {"x_sp", "x_ac", "r", "y"}
    if set(source.names) != required:
        raise ScmError(f"source variables must be exactly {sorted(required)}")
    if source.n_envs != 2:
        raise ScmError("source must have exactly two training environments")
    for v in source.variables:
        if v.arity != 2:
            raise ScmError("all source variables must be binary")

    joints = [joint_distribution(source, e) for e in (0, 1)]
    pooled = JointTable(joints[0].variables, 0.5 * (joints[0].probs + joints[1].probs))

    # p~(e, y) with uniform environment weights
    p_y_given_e = np.stack(
        [j.marginal(["y"]).probs for j in joints]
    )  # (env, y)
    p_tilde = 0.5 * p_y_given_e.T  # (y, env)

    # believer factor p(r | y, x_sp) := pooled source conditional
    r_table = np.zeros((2, 2, 2))  # (y, x_sp, r)
    for y in (0, 1):
        for xsp in (0, 1):
            try:
                r_table[y, xsp] = conditional(pooled, "r", {"y": y, "x_sp": xsp})
            except ZeroProbabilityError as exc:
                raise ConstructionError(
                    "source conditional p(r | y, x_sp) undefined: "
                    f"p(y={y}, x_sp={xsp}) = 0"
                ) from exc
    if np.any(r_table <= 0.0) or np.any(r_table >= 1.0):
        # degenerate conditional: the recommendation channel completely
        # determines the label, leaving no feasible reversed-edge model
        raise ConstructionError(
            "source conditional p(r | y, x_sp) is degenerate (entries in {0, 1})"
        )

    # per-environment p^e(x_sp | y) solving the linear balance equation
    xsp_tables = np.zeros((2, 2, 2))  # (env, y, x_sp)
    unique = True
    for y in (0, 1):
        weight = p_tilde[y]
        if weight.sum() <= 0:
            raise ConstructionError(f"label value y={y} has probability 0")
        pi = weight / weight.sum()
        ident = np.array(
            [conditional(joints[e], "x_sp", {"y": y})[1] for e in (0, 1)]
        )
        target = float(pi @ ident)
        if target <= 0.0 or target >= 1.0:
            # the spurious feature determines y; the balance equation pins
            # both environments to the same degenerate point
            if np.any((ident > 0.0) & (ident < 1.0)):
                raise ConstructionError(
                    "balance equation infeasible for interior source conditionals"
                )
            xsp_tables[:, y, 1] = target
            xsp_tables[:, y, 0] = 1.0 - target
            continue
        # feasible segment: {ident + t * d : t in [t_min, t_max]} within [0,1]^2
        d = np.array([pi[1], -pi[0]])
        norm = np.linalg.norm(d)
        if norm == 0:
            xsp_tables[:, y, 1] = ident
            xsp_tables[:, y, 0] = 1.0 - ident
            continue
        d = d / norm
        t_lo, t_hi = -np.inf, np.inf
        for e in (0, 1):
            if d[e] > 0:
                t_lo = max(t_lo, (0.0 - ident[e]) / d[e])
                t_hi = min(t_hi, (1.0 - ident[e]) / d[e])
            elif d[e] < 0:
                t_lo = max(t_lo, (1.0 - ident[e]) / d[e])
                t_hi = min(t_hi, (0.0 - ident[e]) / d[e])
        length = t_hi - t_lo
        if length <= 1e-12:
            xsp_tables[:, y, 1] = ident
            xsp_tables[:, y, 0] = 1.0 - ident
            continue
        unique = False
        step = perturbation * length
        t = step if t_hi >= step else max(-step, t_lo)
        point = np.clip(ident + t * d, 0.0, 1.0)
        xsp_tables[:, y, 1] = point
        xsp_tables[:, y, 0] = 1.0 - point

    variables = (
        Variable("y"),
        Variable("x_sp"),
        Variable("x_ac"),
        Variable("r"),
    )
    x_ac_table = np.stack(
        [conditional(pooled, "x_ac", {"y": y}) for y in (0, 1)]
    )
    factors = {
        "y": tuple(
            FactorTable("y", (), p_y_given_e[e]) for e in (0, 1)
        ),
        "x_sp": tuple(
            FactorTable("x_sp", ("y",), xsp_tables[e]) for e in (0, 1)
        ),
        "x_ac": FactorTable("x_ac", ("y",), x_ac_table),
        "r": FactorTable("r", ("y", "x_sp"), r_table),
    }
    model = DiscreteScm(
        variables=variables,
        n_envs=2,
        factors=factors,
        selection=None,
        graph_tag=GRAPH_XSP_TO_R,
        class_tag=CLASS_ANTI_CAUSAL,
    )
    return BelieverConstruction(model=model, unique_solution=unique)


def total_variation(a: JointTable, b: JointTable) -> float:
    """Total variation distance between joints over the same variable set."""
    bm = b.marginal(a.names)
    return 0.5 * float(np.abs(a.probs - bm.probs).sum())
