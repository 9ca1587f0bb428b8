"""End-to-end acceptance suite.

Each test exercises one headline property of the package and prints a
single PASS/FAIL line (visible with ``pytest -s`` or on failure). The
heavier tests train real models and take several minutes each; run

    pytest tests/test_acceptance.py -v -s

to watch them go by. Tolerances are deliberately loose where they gate
trained-model accuracies (±5 accuracy points unless noted) and exact
where the quantity is computed by enumeration.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from invrec import divergence as dv
from invrec import experiments as ex
from invrec import model as md
from invrec import scm as sc
from invrec import trainer as tr
from invrec.cli import run_gradcheck


def _report(num, desc, ok, detail=""):
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({desc}): {verdict}  {detail}")
    assert ok, f"criterion {num} ({desc}): {detail}"


def test_criterion_1_estimator_identities():
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        n = rng.integers(3, 12)
        d = rng.integers(1, 5)
        a = rng.standard_normal((n, d))
        kernel = dv.KernelSpec(float(rng.uniform(0.2, 5.0)))
        worst = max(worst, abs(dv.mmd2(a, a, kernel)))
        worst = max(worst, abs(dv.coral(a, a)))
        b = rng.standard_normal((int(rng.integers(3, 12)), d))
        shift = rng.standard_normal(d) * 3
        worst = max(worst, abs(dv.coral(a, b) - dv.coral(a + shift, b + shift)))
    elapsed = time.time() - t0
    _report(
        1,
        "estimator identities",
        worst < 1e-12 and elapsed < 1.0,
        f"worst deviation {worst:.3e}, {elapsed:.2f}s",
    )


def test_criterion_2_gradient_oracle():
    t0 = time.time()
    worst, worst_name = 0.0, ""
    for seed in range(5):
        err, name = run_gradcheck(seed)
        if err > worst:
            worst, worst_name = err, name
    elapsed = time.time() - t0
    _report(
        2,
        "gradient oracle",
        worst < 1e-4 and elapsed < 10.0,
        f"worst rel err {worst:.3e} ({worst_name}), {elapsed:.2f}s",
    )


def test_criterion_3_exact_design_targets():
    t0 = time.time()
    params = ex.SubclassExperimentParams()
    causal_accs = []
    for tag in ex.GROUP_TAGS:
        scm = ex.build_subclass_scm(params, tag)
        pooled = sc.pooled_joint(scm, params.train_envs)
        _, acc = sc.bayes_optimal(pooled, ("x_ac",))
        causal_accs.append(acc)
    # the 0.78 all-features target belongs to the x_sp->r graph, where the
    # spurious channel's per-environment agreement rates are the tuned knob;
    # in the r->x_sp graph all-features accuracy is pinned at p(r=y)=0.80
    pooled = sc.pooled_joint(
        ex.build_subclass_scm(params, sc.GRAPH_XSP_TO_R), params.train_envs
    )
    _, acc_all = sc.bayes_optimal(pooled, list(ex.FEATURE_ORDER))
    ok = (
        all(abs(a - 0.75) < 1e-12 for a in causal_accs) and 0.77 <= acc_all <= 0.79
    )
    elapsed = time.time() - t0
    detail = (
        f"causal-only {causal_accs[0]:.4f}/{causal_accs[1]:.4f}, "
        f"all-features {acc_all:.4f}"
    )
    _report(3, "exact design targets", ok and elapsed < 5.0, f"{detail}, {elapsed:.2f}s")


def test_criterion_4_subclass_table():
    t0 = time.time()
    params = ex.SubclassExperimentParams()
    seeds = range(5)
    # cells[(reg, users, eval_group)] -> mean over seeds of (id, ood)
    sums: dict[tuple, np.ndarray] = {}
    for seed in seeds:
        report = ex.run_table1(params, seed, with_invariance=False)
        for row in report.rows:
            key = (row["reg"], row["users_at_train"], row["eval_group"])
            acc = np.array([row["id_accuracy"], row["ood_accuracy"]])
            sums[key] = sums.get(key, 0.0) + acc / len(list(seeds))
    bel, skp = ex.GROUP_TAGS  # believer: x_sp->r, skeptic: r->x_sp

    id0, ood0_bel = sums[("lam0", "both", bel)]
    _, ood0_skp = sums[("lam0", "both", skp)]
    _, ood_per_bel = sums[("lam_pos", bel, bel)]
    _, ood_per_skp = sums[("lam_pos", skp, skp)]
    _, ood_both_bel = sums[("lam_pos", "both", bel)]
    _, ood_both_skp = sums[("lam_pos", "both", skp)]

    checks = {
        "lam0 believer OOD at chance": abs(ood0_bel - 0.50) <= 0.05,
        "lam0 pooled ID": id0 >= 0.73,
        "per-group believer OOD": ood_per_bel >= 0.70,
        "per-group skeptic OOD": ood_per_skp >= 0.78,
        # pooled-with-penalty lands between the unregularized and the
        # per-group value; the anchors can nearly coincide, so allow the
        # betweenness band a 2-point margin on each side
        "pooled-penalty believer between": (
            min(ood0_bel, ood_per_bel) - 0.02
            <= ood_both_bel
            <= max(ood0_bel, ood_per_bel) + 0.02
        ),
        "pooled-penalty skeptic between": (
            min(ood0_skp, ood_per_skp) - 0.02
            <= ood_both_skp
            <= max(ood0_skp, ood_per_skp) + 0.02
        ),
    }
    elapsed = time.time() - t0
    failed = [k for k, v in checks.items() if not v]
    detail = (
        f"lam0 OOD bel {ood0_bel:.3f} skp {ood0_skp:.3f}, per-group bel "
        f"{ood_per_bel:.3f} skp {ood_per_skp:.3f}, pooled-penalty bel "
        f"{ood_both_bel:.3f} skp {ood_both_skp:.3f}, ID {id0:.3f}, "
        f"{elapsed:.1f}s"
    )
    if failed:
        detail += f"; failed: {failed}"
    _report(4, "subclass accuracy table", not failed and elapsed < 600, detail)


def test_criterion_5_correlation_sweep():
    t0 = time.time()
    params = ex.SweepParams()
    passes = []
    per_seed = []
    for seed in range(3):
        report = ex.run_sweep(params, seed)
        acc = {
            (row["p_mean"], row["config"]): row["test_accuracy"]
            for row in report.rows
        }
        cond = [acc[(p, "conditional")] for p in params.p_means]
        ok = (
            all(acc[(0.8, c)] >= 0.75 for c in ("none", "marginal", "conditional"))
            and acc[(0.2, "conditional")] >= 0.70
            and acc[(0.2, "none")] <= 0.45
            and acc[(0.2, "marginal")] <= 0.55
            and max(cond) - min(cond) <= 0.10
        )
        passes.append(ok)
        per_seed.append(
            f"seed {seed}: p̄=0.2 c/n/m {acc[(0.2, 'conditional')]:.3f}/"
            f"{acc[(0.2, 'none')]:.3f}/{acc[(0.2, 'marginal')]:.3f}, "
            f"cond range {max(cond) - min(cond):.3f}, "
            f"{'ok' if ok else 'violated'}"
        )
    elapsed = time.time() - t0
    _report(
        5,
        "correlation sweep shape",
        sum(passes) >= 2 and elapsed < 900,
        "; ".join(per_seed) + f", {elapsed:.1f}s",
    )


def test_criterion_6_mixture_experiment():
    t0 = time.time()
    params = ex.SubclassExperimentParams()
    alphas = (0.0, 0.1, 0.25)
    margins = {a: [] for a in alphas}
    for seed in range(5):
        report = ex.run_mixture(params, alphas, seed)
        for row in report.rows:
            if row["group"] == "aggregate":
                margins[row["alpha"]].append(
                    row["regularized_ood"] - row["pooled_baseline_ood"]
                )
    mean_margin = {a: float(np.mean(v)) for a, v in margins.items()}
    ok = all(m >= 0.03 for m in mean_margin.values())
    elapsed = time.time() - t0
    detail = ", ".join(f"alpha={a}: +{m:.3f}" for a, m in mean_margin.items())
    _report(6, "mixture experiment margins", ok and elapsed < 900, f"{detail}, {elapsed:.1f}s")


def test_criterion_7_observationally_equivalent_construction():
    t0 = time.time()
    tv, gap, _ = ex.run_appendix_a()
    elapsed = time.time() - t0
    _report(
        7,
        "matched-marginals construction",
        tv < 1e-9 and gap > 0.01 and elapsed < 1.0,
        f"pooled TV {tv:.3e}, max conditional gap {gap:.4f}, {elapsed:.2f}s",
    )


def test_criterion_8_invariance_verification():
    t0 = time.time()
    params = ex.SweepParams(p_means=(0.2,))
    mlp = md.MlpKind(hidden_layers=3, hidden_dim=32)
    cond_p, none_p = [], []
    for seed in range(10):
        cell = ex.gen_correlation_sweep(params, seed)[0.2]
        dim = cell.train[0][0].shape[1]
        # verify on fresh data from the two most-separated training
        # environments: the largest correlation shift gives the test the
        # best shot at exposing a score distribution that tracks e
        held = {
            e: ex._gen_sweep_env(
                params,
                cell.env_correlations[e],
                800,
                ex.child_seed(seed, "held", e),
                p_y=params.label_rates[e],
            )
            for e in (0, len(cell.env_correlations) - 1)
        }
        for name, kind, out in (
            ("cond", tr.PenaltyKind.CONDITIONAL, cond_p),
            ("none", tr.PenaltyKind.NONE, none_p),
        ):
            cfg = ex.sweep_train_config(
                kind, ex.child_seed(seed, "c8", name), batch_size=params.n_per_env
            )
            pred0 = md.init(mlp, dim, cfg.seed, tap=md.TAP_LOGIT)
            pred, _ = tr.train(cfg, cell.train, predictor=pred0)
            result = tr.verify_invariance(
                pred,
                held,
                tr.PenaltyKind.CONDITIONAL,
                n_permutations=200,
                seed=ex.child_seed(seed, "verify", name),
                max_per_env=800,
            )
            out.append(result.p_value)
    n_cond_ok = sum(p > 0.05 for p in cond_p)
    n_none_rej = sum(p < 0.01 for p in none_p)
    elapsed = time.time() - t0
    _report(
        8,
        "invariance verification",
        n_cond_ok >= 8 and n_none_rej >= 9 and elapsed < 300,
        f"conditional not rejected {n_cond_ok}/10, unregularized rejected "
        f"{n_none_rej}/10, {elapsed:.1f}s",
    )


def test_criterion_9_byte_identical_reproduction(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("n_per_env: 2000\n")
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        out.mkdir()
        proc = subprocess.run(
            [
                sys.executable, "-m", "invrec", "reproduce", "table1",
                "--seed", "7", "--config", str(config), "--out", str(out),
            ],
            capture_output=True,
            text=True,
            env={**os.environ, "PYTHONHASHSEED": str(hash(run) % 1000)},
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(
            {
                p.name: p.read_bytes()
                for p in out.iterdir()
            }
        )
    same_names = set(outputs[0]) == set(outputs[1])
    same_bytes = same_names and all(
        outputs[0][name] == outputs[1][name] for name in outputs[0]
    )
    _report(
        9,
        "byte-identical reproduction",
        same_bytes,
        f"files {sorted(outputs[0])}, identical={same_bytes}",
    )


def test_criterion_10_conditional_independence_structure():
    t0 = time.time()
    params = ex.SubclassExperimentParams()
    cmi = {}
    for tag in ex.GROUP_TAGS:
        scm = ex.build_subclass_scm(params, tag)
        joint = sc.joint_with_env(scm, params.train_envs)
        cmi[tag] = sc.conditional_mutual_information(joint, "r", "e", ("y",))
    believer, skeptic = ex.GROUP_TAGS
    ok = cmi[skeptic] < 1e-12 and cmi[believer] > 1e-4
    elapsed = time.time() - t0
    _report(
        10,
        "conditional independence structure",
        ok and elapsed < 1.0,
        f"I(r;e|y) skeptic {cmi[skeptic]:.3e}, believer {cmi[believer]:.3e}, "
        f"{elapsed:.2f}s",
    )
