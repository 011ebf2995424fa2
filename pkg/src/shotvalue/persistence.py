"""Self-describing JSON persistence for fitted models.

One container format for both model kinds (mixtures and outcome
classifiers): a version field, a kind tag, and full-precision numbers.
Python's float repr round-trips exactly, so load(save(model)) is
bit-identical in value.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ParseError
from .mixture import DpPrior, MixtureModel

FORMAT_VERSION = 1


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def mixture_to_dict(model):
    out = {
        "version": FORMAT_VERSION,
        "kind": "mixture",
        "dim": model.dim,
        "bounce_flag": model.bounce_flag,
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "components": [
            {
                "weight": float(model.weights[k]),
                "mean": _arr(model.means[k]),
                "covariance": _arr(model.covariances[k]),  # row-major
            }
            for k in range(model.n_components)
        ],
    }
    if model.prior is not None:
        out["prior"] = {
            "concentration": model.prior.concentration,
            "mean": _arr(model.prior.mean),
            "mean_precision": model.prior.mean_precision,
            "degrees_of_freedom": model.prior.degrees_of_freedom,
            "scale": _arr(model.prior.scale),
        }
    return out


def mixture_from_dict(doc):
    if doc.get("kind") != "mixture":
        raise ParseError(f"expected kind 'mixture', got {doc.get('kind')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {doc.get('version')!r}")
    comps = doc["components"]
    prior = None
    if doc.get("prior"):
        p = doc["prior"]
        prior = DpPrior(
            concentration=p["concentration"],
            mean=np.array(p["mean"]),
            mean_precision=p["mean_precision"],
            degrees_of_freedom=p["degrees_of_freedom"],
            scale=np.array(p["scale"]),
        )
    return MixtureModel(
        weights=np.array([c["weight"] for c in comps]),
        means=np.array([c["mean"] for c in comps]),
        covariances=np.array([c["covariance"] for c in comps]),
        bounce_flag=doc.get("bounce_flag"),
        feature_names=tuple(doc["feature_names"]) if doc.get("feature_names") else None,
        prior=prior,
    )


def save_model(doc_or_model, path):
    """Write a model (or an already-built dict) to ``path`` as JSON."""
    if isinstance(doc_or_model, MixtureModel):
        doc = mixture_to_dict(doc_or_model)
    elif isinstance(doc_or_model, dict):
        doc = doc_or_model
    else:
        doc = doc_or_model.to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Load any persisted model; dispatches on the kind tag."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "mixture":
        return mixture_from_dict(doc)
    if kind == "outcome":
        from .outcome import OutcomeModel

        return OutcomeModel.from_dict(doc)
    raise ParseError(f"unknown model kind {kind!r} in {path}")
