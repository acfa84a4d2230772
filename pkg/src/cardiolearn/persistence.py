"""Model bundles: one self-describing JSON document per trained model.

A bundle contains the format version, a creation timestamp, the algorithm
tag, the fitted preprocessor, the model parameters, the full hyperparameter
record, and optionally the evaluation report captured at save time. Keys
are sorted and floats keep full round-trip precision, so two runs with the
same config produce byte-identical documents apart from the created_at
line. All files are written atomically (temp file, then rename).
"""

import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .bayes import GaussianNBModel
from .boosting import BoostedEnsemble, BoostMode, TreeNode
from .errors import CorruptBundle, SchemaMismatch, VersionMismatch
from .evaluation import ConfusionMatrix, EvalReport
from .preprocess import FittedPreprocessor, UnseenPolicy
from .rnn import RNNModel, RNNParams, TrainHistory
from .training import Algorithm

FORMAT_VERSION = 1


def atomic_write_text(path: str, text: str) -> None:
    """Write whole-file contents via a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, temp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# --- preprocessor ------------------------------------------------------------

def serialize_preprocessor(fp: FittedPreprocessor) -> dict:
    return {
        "vocab": {name: list(tokens) for name, tokens in fp.vocab.items()},
        "modes": dict(fp.modes),
        "scale_stats": {
            name: {"mean": mean, "std": std}
            for name, (mean, std) in fp.scale_stats.items()
        },
        "impute_table": [
            {
                "sex": sex,
                "decade": decade,
                "medians": dict(medians),
            }
            for (sex, decade), medians in sorted(fp.impute_table.items())
        ],
        "global_medians": dict(fp.global_medians),
        "unseen_policy": fp.unseen_policy.value,
    }


def deserialize_preprocessor(doc: dict) -> FittedPreprocessor:
    return FittedPreprocessor(
        vocab={name: tuple(tokens) for name, tokens in doc["vocab"].items()},
        modes=dict(doc["modes"]),
        scale_stats={
            name: (stats["mean"], stats["std"])
            for name, stats in doc["scale_stats"].items()
        },
        impute_table={
            (entry["sex"], entry["decade"]): dict(entry["medians"])
            for entry in doc["impute_table"]
        },
        global_medians=dict(doc["global_medians"]),
        unseen_policy=UnseenPolicy(doc["unseen_policy"]),
    )


# --- models -------------------------------------------------------------------

def _serialize_tree(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"weight": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _serialize_tree(node.left),
        "right": _serialize_tree(node.right),
    }


def _deserialize_tree(doc: dict) -> TreeNode:
    if "weight" in doc:
        return TreeNode(weight=doc["weight"])
    return TreeNode(
        feature=doc["feature"],
        threshold=doc["threshold"],
        left=_deserialize_tree(doc["left"]),
        right=_deserialize_tree(doc["right"]),
    )


def _serialize_array(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}


def _deserialize_array(doc: dict) -> np.ndarray:
    return np.array(doc["data"], dtype=float).reshape(doc["shape"])


def serialize_model(algorithm: Algorithm, model) -> dict:
    if algorithm is Algorithm.NB:
        return {
            "family": "nb",
            "priors": [float(v) for v in model.priors],
            "means": [[float(v) for v in row] for row in model.means],
            "variances": [[float(v) for v in row] for row in model.variances],
            "var_floor": float(model.var_floor),
        }
    if algorithm in (Algorithm.GB, Algorithm.XGB):
        return {
            "family": algorithm.value,
            "mode": model.mode.value,
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "reg_lambda": model.reg_lambda,
            "gamma": model.gamma,
            "max_depth": model.max_depth,
            "n_rounds": model.n_rounds,
            "min_child_weight": model.min_child_weight,
            "n_features": model.n_features,
            "trees": [_serialize_tree(tree) for tree in model.trees],
        }
    params = model.params
    return {
        "family": "rnn",
        "hidden_size": params.hidden_size,
        "input_size": params.input_size,
        "W_xh": _serialize_array(params.W_xh),
        "W_hh": _serialize_array(params.W_hh),
        "W_hy": _serialize_array(params.W_hy),
        "b_h": _serialize_array(params.b_h),
        "b_y": params.b_y,
    }


def deserialize_model(algorithm: Algorithm, doc: dict):
    if algorithm is Algorithm.NB:
        return GaussianNBModel(
            priors=np.array(doc["priors"], dtype=float),
            means=np.array(doc["means"], dtype=float),
            variances=np.array(doc["variances"], dtype=float),
            var_floor=doc["var_floor"],
        )
    if algorithm in (Algorithm.GB, Algorithm.XGB):
        return BoostedEnsemble(
            mode=BoostMode(doc["mode"]),
            base_score=doc["base_score"],
            trees=[_deserialize_tree(t) for t in doc["trees"]],
            learning_rate=doc["learning_rate"],
            reg_lambda=doc["reg_lambda"],
            gamma=doc["gamma"],
            max_depth=doc["max_depth"],
            n_rounds=doc["n_rounds"],
            min_child_weight=doc["min_child_weight"],
            n_features=doc["n_features"],
        )
    params = RNNParams(
        W_xh=_deserialize_array(doc["W_xh"]),
        W_hh=_deserialize_array(doc["W_hh"]),
        W_hy=_deserialize_array(doc["W_hy"]),
        b_h=_deserialize_array(doc["b_h"]),
        b_y=doc["b_y"],
    )
    return RNNModel(params=params, history=TrainHistory())


# --- evaluation reports --------------------------------------------------------

def serialize_report(report: EvalReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "matrix": {
            "tp": report.matrix.tp,
            "fp": report.matrix.fp,
            "fn": report.matrix.fn,
            "tn": report.matrix.tn,
        },
        "model_id": report.model_id,
        "threshold": report.threshold,
    }


def deserialize_report(doc: dict) -> EvalReport:
    return EvalReport(
        accuracy=doc["accuracy"],
        precision=doc["precision"],
        recall=doc["recall"],
        f1=doc["f1"],
        matrix=ConfusionMatrix(
            tp=doc["matrix"]["tp"],
            fp=doc["matrix"]["fp"],
            fn=doc["matrix"]["fn"],
            tn=doc["matrix"]["tn"],
        ),
        model_id=doc["model_id"],
        threshold=doc["threshold"],
    )


# --- bundles --------------------------------------------------------------------

@dataclass
class LoadedBundle:
    format_version: int
    created_at: str
    algorithm: Algorithm
    preprocessor: FittedPreprocessor
    model: object
    train_config: dict
    metrics_at_save: Optional[EvalReport]


def build_bundle(algorithm: Algorithm, fp: FittedPreprocessor, model,
                 train_config: dict,
                 report: Optional[EvalReport] = None,
                 created_at: Optional[str] = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "created_at": created_at if created_at is not None else _timestamp(),
        "algorithm": algorithm.value,
        "preprocessor": serialize_preprocessor(fp),
        "model": serialize_model(algorithm, model),
        "train_config": train_config,
        "metrics_at_save": serialize_report(report) if report is not None else None,
    }


def bundle_text(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2, allow_nan=False) + "\n"


def save_bundle(bundle: dict, path: str) -> None:
    atomic_write_text(path, bundle_text(bundle))


def _model_width(algorithm: Algorithm, model) -> Optional[int]:
    if algorithm is Algorithm.NB:
        return model.n_features
    if algorithm in (Algorithm.GB, Algorithm.XGB):
        return model.n_features
    return None  # sequence encoding consumes one scalar per timestep


def load_bundle(path: str) -> LoadedBundle:
    with open(path, "r", encoding="utf-8") as handle:
        raw = handle.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptBundle(f"bundle is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptBundle("bundle document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"bundle format_version {version!r} unsupported (expected {FORMAT_VERSION})"
        )
    try:
        algorithm = Algorithm(doc["algorithm"])
        preprocessor = deserialize_preprocessor(doc["preprocessor"])
        model = deserialize_model(algorithm, doc["model"])
        report_doc = doc.get("metrics_at_save")
        report = deserialize_report(report_doc) if report_doc is not None else None
        train_config = doc.get("train_config") or {}
        created_at = doc.get("created_at", "")
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptBundle(f"bundle is missing or mangles a field: {exc}") from exc
    width = _model_width(algorithm, model)
    expected = len(preprocessor.scale_stats) + len(preprocessor.vocab)
    if width is not None and width != expected:
        raise SchemaMismatch(
            f"model expects {width} features but preprocessor produces {expected}"
        )
    return LoadedBundle(
        format_version=version,
        created_at=created_at,
        algorithm=algorithm,
        preprocessor=preprocessor,
        model=model,
        train_config=train_config,
        metrics_at_save=report,
    )
