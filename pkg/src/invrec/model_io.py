"""Model definition files: a YAML key-value tree listing variables,
parents, per-environment factor rows, and selection weights."""

from __future__ import annotations

import numpy as np
import yaml

from .scm import DiscreteScm, FactorTable, ScmError, SelectionSpec, Variable


def _factor_to_dict(ft: FactorTable) -> dict:
    return {
        "parents": list(ft.parents),
        "table": np.asarray(ft.table, dtype=float).tolist(),
    }


def model_to_dict(scm: DiscreteScm) -> dict:
    factors = {}
    for name, f in scm.factors.items():
        if isinstance(f, FactorTable):
            factors[name] = _factor_to_dict(f)
        else:
            factors[name] = {
                "parents": list(f[0].parents),
                "per_env": [np.asarray(ft.table, dtype=float).tolist() for ft in f],
            }
    doc = {
        "variables": [{"name": v.name, "arity": v.arity} for v in scm.variables],
        "environments": scm.n_envs,
        "graph_tag": scm.graph_tag,
        "class_tag": scm.class_tag,
        "factors": factors,
    }
    if scm.selection is not None:
        doc["selection"] = {
            "label": scm.selection.label,
            "weights": np.asarray(scm.selection.weights, dtype=float).tolist(),
        }
    return doc


def model_from_dict(doc: dict) -> DiscreteScm:
    try:
        variables = tuple(
            Variable(v["name"], int(v.get("arity", 2))) for v in doc["variables"]
        )
        n_envs = int(doc["environments"])
        factors = {}
        for name, spec in doc["factors"].items():
            parents = tuple(spec.get("parents", ()))
            if "per_env" in spec:
                factors[name] = tuple(
                    FactorTable(name, parents, np.asarray(t, dtype=float))
                    for t in spec["per_env"]
                )
            else:
                factors[name] = FactorTable(
                    name, parents, np.asarray(spec["table"], dtype=float)
                )
        selection = None
        if "selection" in doc and doc["selection"] is not None:
            selection = SelectionSpec(
                doc["selection"]["label"],
                np.asarray(doc["selection"]["weights"], dtype=float),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScmError(f"malformed model definition: {exc}") from exc
    return DiscreteScm(
        variables=variables,
        n_envs=n_envs,
        factors=factors,
        selection=selection,
        graph_tag=doc.get("graph_tag", "none"),
        class_tag=doc.get("class_tag", "anti_causal"),
    )


def save_model(scm: DiscreteScm, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(model_to_dict(scm), fh, sort_keys=True)


def load_model(path) -> DiscreteScm:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScmError("model definition must be a key-value tree")
    return model_from_dict(doc)


def canonical_form(scm: DiscreteScm) -> str:
    """Canonical textual echo of a model definition."""
    return yaml.safe_dump(model_to_dict(scm), sort_keys=True)
