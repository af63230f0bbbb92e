"""Feature-level semantic embeddings from metadata.

A feature's embedding is the sum of three width-d terms: the projected
description embedding, a learned per-type vector, and (categorical only)
a permutation-invariant pooling of the projected category embeddings.
Two features with identical metadata embed identically, which is the
cross-schema alignment mechanism. One shared linear projection maps
text space (d_text) to model width d.
"""

from __future__ import annotations

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, FeatureSpec
from .errors import DataError
from .tensor import Parameters, Tensor

TYPE_INDEX = {CATEGORICAL: 0, CONTINUOUS: 1}


def init_semantic_params(params: Parameters, d_text: int, d: int, rng: np.random.Generator):
    params.add("sem.proj", rng.normal(scale=1.0 / np.sqrt(d_text), size=(d_text, d)))
    params.add("sem.type", rng.normal(scale=0.02, size=(2, d)))
    params.add("sem.pool.seed", rng.normal(scale=1.0, size=(d,)))
    params.add("sem.pool.key", rng.normal(scale=1.0 / np.sqrt(d), size=(d, d)))
    params.add("sem.pool.value", rng.normal(scale=1.0 / np.sqrt(d), size=(d, d)))


def project_text(params: Parameters, text_vec: np.ndarray) -> Tensor:
    return Tensor(text_vec) @ params["sem.proj"]


def category_embeddings(params: Parameters, spec: FeatureSpec, text_fn) -> Tensor:
    """(C, d) projected embeddings of the category names, in choices order."""
    if spec.ftype != CATEGORICAL:
        raise DataError(f"feature {spec.id!r} is not categorical")
    mat = np.stack([text_fn(c) for c in spec.choices])
    return Tensor(mat) @ params["sem.proj"]


def pool_choices(params: Parameters, cat_embs: Tensor, mode: str = "attention") -> Tensor:
    """Permutation-invariant pooling of (C, d) category embeddings to (d,)."""
    if mode == "sum":
        return cat_embs.sum(axis=0)
    if mode != "attention":
        raise DataError(f"unknown choice pooling mode {mode!r}")
    keys = cat_embs @ params["sem.pool.key"]      # (C, d)
    vals = cat_embs @ params["sem.pool.value"]    # (C, d)
    d = keys.shape[-1]
    scores = (keys @ params["sem.pool.seed"].reshape(d, 1)) * (1.0 / np.sqrt(d))
    attn = scores.softmax(axis=0)                 # (C, 1)
    return (vals * attn).sum(axis=0)


def feature_embedding(params: Parameters, spec: FeatureSpec, text_fn, pool_mode="attention") -> Tensor:
    """project(desc) + E_type[ftype] + (categorical ? pooled choices : 0)."""
    desc = project_text(params, text_fn(spec.desc))
    typ = params["sem.type"].gather_rows([TYPE_INDEX[spec.ftype]]).reshape(desc.shape[-1])
    out = desc + typ
    if spec.ftype == CATEGORICAL:
        out = out + pool_choices(params, category_embeddings(params, spec, text_fn), pool_mode)
    return out
