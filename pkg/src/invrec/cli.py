"""Command-line front end.

Subcommands: validate, gen, train, eval, verify, gradcheck,
reproduce {table1|sweep|mixture|appendixA}. Configuration comes from a
YAML file (--config); flags override config values. The master seed is
resolved as --seed, then the config file, then $INVREC_SEED, then 0.
Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np
import yaml

from . import divergence as dv
from . import experiments as ex
from . import model as md
from . import model_io
from . import scm as sc
from . import trainer as tr


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a key-value mapping")
    return doc


def _resolve_seed(args, config: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("INVREC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"INVREC_SEED is not an integer: {env!r}") from exc
    return 0


def _subclass_params(config: dict) -> ex.SubclassExperimentParams:
    kwargs = {}
    for key in ("q_e", "p_xac", "p_y_given_e", "p_r_given_y", "n_per_env"):
        if key in config:
            v = config[key]
            kwargs[key] = tuple(v) if isinstance(v, (list, tuple)) else v
    return ex.SubclassExperimentParams(**kwargs)


def _sweep_params(config: dict) -> ex.SweepParams:
    kwargs = {}
    for key in (
        "p_means", "offsets", "test_correlation", "base_accuracy",
        "noise_dims", "n_per_env", "n_test",
    ):
        if key in config:
            v = config[key]
            kwargs[key] = tuple(v) if isinstance(v, (list, tuple)) else v
    return ex.SweepParams(**kwargs)


def _train_config(args, config: dict, seed: int) -> tr.TrainConfig:
    penalty = args.penalty or config.get("penalty", "none")
    divergence = args.divergence or config.get("divergence", "mmd")
    lam = args.lam if args.lam is not None else float(config.get("lambda", 0.0))
    try:
        penalty_kind = tr.PenaltyKind(penalty)
        divergence_kind = tr.DivergenceKind(divergence)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    schedule = tr.LambdaSchedule.constant(lam)
    if "lambda_schedule" in config:
        s = config["lambda_schedule"]
        schedule = tr.LambdaSchedule(
            float(s["lam1"]), int(s["epochs1"]), float(s["lam2"])
        )
    return tr.TrainConfig(
        penalty=penalty_kind,
        divergence=divergence_kind,
        kernel=dv.KernelSpec(config.get("bandwidth", "median")),
        lam=schedule,
        learning_rate=float(config.get("learning_rate", 0.05)),
        epochs=int(config.get("epochs", 15)),
        batch_size=int(config.get("batch_size", 512)),
        min_cell=int(config.get("min_cell", 4)),
        seed=seed,
        optimizer=tr.Optimizer(config.get("optimizer", "adam")),
    )


def _model_kind(config: dict):
    kind = config.get("model", "linear")
    if kind == "linear":
        return md.LinearKind()
    if kind == "mlp":
        return md.MlpKind(
            hidden_layers=int(config.get("hidden_layers", 3)),
            hidden_dim=int(config.get("hidden_dim", 32)),
        )
    raise UsageError(f"unknown model kind {kind!r}")


def _default_scm(config: dict) -> sc.DiscreteScm:
    tag = config.get("graph_tag", sc.GRAPH_R_TO_XSP)
    return ex.build_subclass_scm(_subclass_params(config), tag)


def _load_env_data(config: dict):
    """Per-environment (features, labels) arrays from dataset CSV paths."""
    paths = config.get("datasets")
    if not paths:
        raise UsageError("config must list dataset files under 'datasets'")
    parts = []
    for p in paths:
        if not os.path.exists(p):
            raise UsageError(f"dataset file not found: {p}")
        parts.append(sc.DiscreteDataset.from_csv(p))
    merged = sc.concat_datasets(parts)
    return ex.env_batches(merged.by_env())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    if not os.path.exists(args.model_file):
        raise UsageError(f"model file not found: {args.model_file}")
    try:
        scm = model_io.load_model(args.model_file)
    except Exception as exc:
        raise UsageError(f"unreadable model file: {exc}") from exc
    violations = sc.validate(scm)
    if violations:
        for v in violations:
            print(v)
        return 1
    print(model_io.canonical_form(scm), end="")
    return 0


def cmd_gen(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    out = args.out or config.get("out", ".")
    os.makedirs(out, exist_ok=True)
    if args.model_file:
        scm = model_io.load_model(args.model_file)
    else:
        scm = _default_scm(config)
    violations = sc.validate(scm)
    if violations:
        for v in violations:
            print(v)
        return 1
    n = int(config.get("n_per_env", 20000))
    envs = config.get("envs", list(range(scm.n_envs)))
    model_path = os.path.join(out, "model.yaml")
    model_io.save_model(scm, model_path)
    written = [model_path]
    for e in envs:
        ds = sc.sample(scm, int(e), n, ex.child_seed(seed, "gen", int(e)))
        path = os.path.join(out, f"data_env{e}.csv")
        ds.to_csv(path)
        written.append(path)
    for p in written:
        print(p)
    return 0


def cmd_train(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    out = args.out or config.get("out", ".")
    os.makedirs(out, exist_ok=True)
    env_data = _load_env_data(config)
    tc = _train_config(args, config, seed)
    try:
        predictor, history = tr.train(tc, env_data, kind=_model_kind(config))
    except tr.TrainerError as exc:
        raise DomainError(str(exc)) from exc
    ckpt = os.path.join(out, "checkpoint.txt")
    hist = os.path.join(out, "history.csv")
    md.save_checkpoint(predictor, ckpt)
    history.to_csv(hist)
    print(ckpt)
    print(hist)
    print(f"final_loss={history.loss[-1]!r}")
    print(f"final_penalty={history.penalty[-1]!r}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args.config)
    if not args.checkpoint or not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    predictor = md.load_checkpoint(args.checkpoint)
    env_data = _load_env_data(config)
    width = next(iter(env_data.values()))[0].shape[1]
    if width != predictor.input_dim:
        raise DomainError(
            f"feature width {width} does not match checkpoint input_dim "
            f"{predictor.input_dim}"
        )
    total_hits = 0
    total_n = 0
    for e in sorted(env_data):
        x, y = env_data[e]
        acc = ex.evaluate(predictor, x, y).accuracy
        total_hits += acc * len(y)
        total_n += len(y)
        print(f"env {e}: accuracy={acc!r}")
    print(f"overall: accuracy={total_hits / total_n!r}")
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    if not args.checkpoint or not os.path.exists(args.checkpoint):
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    predictor = md.load_checkpoint(args.checkpoint)
    env_data = _load_env_data(config)
    mode = tr.PenaltyKind(args.penalty or config.get("penalty", "marginal"))
    if mode is tr.PenaltyKind.NONE:
        raise UsageError("verify needs --penalty marginal or conditional")
    result = tr.verify_invariance(
        predictor,
        env_data,
        mode,
        n_permutations=int(config.get("n_permutations", 500)),
        seed=seed,
        max_per_env=int(config.get("max_per_env", 800)),
    )
    print(f"statistic={result.statistic!r}")
    print(f"p_value={result.p_value!r}")
    alpha = float(config.get("alpha", 0.05))
    verdict = "invariant" if result.p_value >= alpha else "not invariant"
    print(f"verdict={verdict} (alpha={alpha!r})")
    return 0 if result.p_value >= alpha else 1


def _finite_difference(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x, dtype=float)
    flat = g.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        up = fn()
        xf[i] = orig - h
        dn = fn()
        xf[i] = orig
        flat[i] = (up - dn) / (2 * h)
    return g


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
    return float(np.abs(analytic - numeric).max() / scale)


def run_gradcheck(seed: int, break_gradient: bool = False) -> tuple[float, str]:
    """Finite-difference checks of all analytic gradients; returns the worst
    relative error and the name of the worst case."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_name = "none"

    def record(name, err):
        nonlocal worst, worst_name
        if err > worst:
            worst, worst_name = err, name

    a = rng.standard_normal((7, 3))
    b = rng.standard_normal((6, 3))
    kernel = dv.KernelSpec(1.3)
    ga, gb = dv.grad_mmd2(a, b, kernel)
    if break_gradient:
        ga = ga + 0.01
    record("mmd2/a", _rel_err(ga, _finite_difference(lambda: dv.mmd2(a, b, kernel), a)))
    record("mmd2/b", _rel_err(gb, _finite_difference(lambda: dv.mmd2(a, b, kernel), b)))

    ga, gb = dv.grad_coral(a, b)
    record("coral/a", _rel_err(ga, _finite_difference(lambda: dv.coral(a, b), a)))
    record("coral/b", _rel_err(gb, _finite_difference(lambda: dv.coral(a, b), b)))

    for kind, name in ((md.LinearKind(), "linear"), (md.MlpKind(2, 8), "mlp")):
        p = md.init(kind, 4, seed)
        x = rng.standard_normal((12, 4))
        y = (rng.random(12) < 0.5).astype(float)
        analytic = md.backward(p, x, y)
        numeric = _finite_difference(
            lambda: md.loss(md.forward(p, x).probs, y), p.params
        )
        record(f"loss/{name}", _rel_err(analytic, numeric))

        tap_w = rng.standard_normal(md.forward(p, x).tap_values.shape)
        analytic = md.backward(p, x, y, penalty_grad_at_tap=tap_w)

        def penalized():
            rec = md.forward(p, x)
            return md.loss(rec.probs, y) + float(np.sum(tap_w * rec.tap_values))

        numeric = _finite_difference(penalized, p.params)
        record(f"penalized/{name}", _rel_err(analytic, numeric))

    return worst, worst_name


def cmd_gradcheck(args) -> int:
    seed = _resolve_seed(args, _load_config(args.config))
    worst, name = run_gradcheck(seed, break_gradient=args.break_gradient)
    print(f"worst relative error {worst!r} ({name})")
    return 0 if worst < 1e-4 else 1


def cmd_reproduce(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    out = args.out or config.get("out", ".")
    which = args.which
    if which == "table1":
        lam = args.lam if args.lam is not None else float(config.get("lambda", 0.5))
        divergence = tr.DivergenceKind(
            args.divergence or config.get("divergence", "mmd")
        )
        report = ex.run_table1(
            _subclass_params(config), seed, (0.0, lam), divergence
        )
        for row in report.rows:
            print(
                f"reg={row['reg']} users={row['users_at_train']} "
                f"group={row['eval_group']} id={row['id_accuracy']!r} "
                f"ood={row['ood_accuracy']!r}"
            )
    elif which == "sweep":
        report = ex.run_sweep(_sweep_params(config), seed)
        for row in report.rows:
            print(
                f"p_mean={row['p_mean']!r} config={row['config']} "
                f"test_accuracy={row['test_accuracy']!r}"
            )
    elif which == "mixture":
        alphas = tuple(config.get("alphas", (0.0, 0.1, 0.25)))
        lam = args.lam if args.lam is not None else float(config.get("lambda", 0.5))
        report = ex.run_mixture(_subclass_params(config), alphas, seed, lam)
        for row in report.rows:
            print(
                f"alpha={row['alpha']!r} group={row['group']} "
                f"regularized_ood={row['regularized_ood']!r} "
                f"pooled_baseline_ood={row['pooled_baseline_ood']!r}"
            )
    elif which == "appendixA":
        report = ex.appendix_a_report(_subclass_params(config), seed)
        row = report.rows[0]
        print(f"pooled_total_variation={row['pooled_total_variation']!r}")
        print(f"max_conditional_gap={row['max_conditional_gap']!r}")
    else:
        raise UsageError(f"unknown reproduce target {which!r}")
    csv_path, summary_path = report.write(out)
    print(csv_path)
    print(summary_path)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invrec",
        description="invariant relevance prediction: data generation, "
        "training, and experiment reproduction",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, checkpoint=False, model_file=False):
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker pool size (cells are seed-stable; "
                       "currently executed serially)")
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--penalty", choices=["none", "marginal", "conditional"],
                       default=None)
        p.add_argument("--divergence", choices=["mmd", "coral"], default=None)
        if checkpoint:
            p.add_argument("checkpoint", help="model checkpoint file")
        if model_file:
            p.add_argument("--model-file", default=None,
                           help="model definition file (default: built-in)")

    p = sub.add_parser("validate", help="check a model definition file")
    p.add_argument("model_file")
    common(p)

    common(sub.add_parser("gen", help="sample datasets from a model"),
           model_file=True)
    common(sub.add_parser("train", help="train a predictor on dataset files"))
    common(sub.add_parser("eval", help="evaluate a checkpoint on dataset files"),
           checkpoint=True)
    common(sub.add_parser("verify", help="permutation test of score invariance"),
           checkpoint=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--break-gradient", action="store_true",
                   help=argparse.SUPPRESS)
    common(p)

    p = sub.add_parser("reproduce", help="rerun a shipped experiment")
    p.add_argument("which", choices=["table1", "sweep", "mixture", "appendixA"])
    common(p)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "gradcheck": cmd_gradcheck,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, sc.ScmError, tr.TrainerError, ex.ExperimentError,
            md.ModelError, dv.DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
