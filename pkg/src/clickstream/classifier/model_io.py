"""Versioned JSON model files."""

from __future__ import annotations

import json

from .forest import ForestModel
from .tree import CategoricalSplit, Leaf, Node, NumericSplit, TreeModel

SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    pass


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.label, "p": node.probability, "n": node.n}
    if isinstance(node, NumericSplit):
        return {
            "feature": node.feature,
            "threshold": node.threshold,
            "le": node_to_dict(node.le),
            "gt": node_to_dict(node.gt),
            "absent": node_to_dict(node.absent),
        }
    return {
        "feature": node.feature,
        "branches": {value: node_to_dict(child) for value, child in node.branches.items()},
        "default": node_to_dict(node.default),
    }


def node_from_dict(d: dict) -> Node:
    try:
        if "leaf" in d:
            return Leaf(d["leaf"], float(d["p"]), int(d["n"]))
        if "threshold" in d:
            return NumericSplit(d["feature"], float(d["threshold"]), node_from_dict(d["le"]),
                                node_from_dict(d["gt"]), node_from_dict(d["absent"]))
        branches = {value: node_from_dict(child) for value, child in d["branches"].items()}
        return CategoricalSplit(d["feature"], branches, node_from_dict(d["default"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed node: {exc}") from None


def model_to_dict(model: TreeModel | ForestModel) -> dict:
    if isinstance(model, ForestModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "forest",
            "params": dict(model.params),
            "feature_names": list(model.feature_names),
            "trees": [{"params": dict(t.params), "root": node_to_dict(t.root)} for t in model.trees],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "tree",
        "params": dict(model.params),
        "feature_names": list(model.feature_names),
        "root": node_to_dict(model.root),
    }


def model_from_dict(d: dict) -> TreeModel | ForestModel:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported model schema version {version!r} (expected {SCHEMA_VERSION})")
    names = tuple(d["feature_names"])
    if d.get("kind") == "forest":
        trees = tuple(TreeModel(node_from_dict(t["root"]), names, dict(t["params"])) for t in d["trees"])
        return ForestModel(trees, names, dict(d["params"]))
    if d.get("kind") == "tree":
        return TreeModel(node_from_dict(d["root"]), names, dict(d["params"]))
    raise ModelFormatError(f"unknown model kind {d.get('kind')!r}")


def dumps(model: TreeModel | ForestModel) -> str:
    return json.dumps(model_to_dict(model), allow_nan=False, separators=(",", ":"))


def loads(text: str) -> TreeModel | ForestModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not JSON: {exc}") from None
    return model_from_dict(data)


def save_model(path, model: TreeModel | ForestModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))
        fh.write("\n")


def load_model(path) -> TreeModel | ForestModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
