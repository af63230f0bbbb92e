"""Semantic feature embeddings: composition, pooling, alignment."""

import numpy as np
import pytest

from setinfer.data import FeatureSpec
from setinfer.errors import DataError
from setinfer.semantic import (
    category_embeddings,
    feature_embedding,
    init_semantic_params,
    pool_choices,
    project_text,
)
from setinfer.tensor import Parameters, Tensor
from setinfer.text import TextConfig, encode_text

D_TEXT, D = 16, 12
TCFG = TextConfig(d_text=D_TEXT)


def text_fn(s):
    return encode_text(s, TCFG)


def make_params(seed=0):
    params = Parameters()
    init_semantic_params(params, D_TEXT, D, np.random.default_rng(seed))
    return params


def cont_spec(desc="age in years"):
    return FeatureSpec(id="a", desc=desc, ftype="continuous", range=(0.0, 100.0))


def cat_spec(choices=("red", "green", "blue")):
    return FeatureSpec(id="c", desc="dominant color", ftype="categorical", choices=choices)


def test_continuous_is_projection_plus_type_only():
    params = make_params()
    spec = cont_spec()
    out = feature_embedding(params, spec, text_fn)
    manual = (
        project_text(params, text_fn(spec.desc)).data
        + params["sem.type"].data[1]
    )
    assert np.allclose(out.data, manual, atol=1e-12)


def test_all_zero_params_give_zero_vector():
    params = Parameters()
    params.add("sem.proj", np.zeros((D_TEXT, D)))
    params.add("sem.type", np.zeros((2, D)))
    params.add("sem.pool.seed", np.zeros(D))
    params.add("sem.pool.key", np.zeros((D, D)))
    params.add("sem.pool.value", np.zeros((D, D)))
    out = feature_embedding(params, cont_spec(), text_fn)
    assert np.allclose(out.data, 0.0)


def test_categorical_adds_pooled_choices():
    params = make_params()
    spec = cat_spec()
    out = feature_embedding(params, spec, text_fn)
    base = (
        project_text(params, text_fn(spec.desc)).data
        + params["sem.type"].data[0]
    )
    assert not np.allclose(out.data, base)


def test_choice_order_invariance():
    params = make_params()
    a = feature_embedding(params, cat_spec(("red", "green", "blue")), text_fn)
    b = feature_embedding(params, cat_spec(("blue", "red", "green")), text_fn)
    assert np.max(np.abs(a.data - b.data)) <= 1e-9


def test_sum_pooling_option_also_invariant():
    params = make_params()
    a = feature_embedding(params, cat_spec(("x", "y")), text_fn, pool_mode="sum")
    b = feature_embedding(params, cat_spec(("y", "x")), text_fn, pool_mode="sum")
    assert np.max(np.abs(a.data - b.data)) <= 1e-9


def test_singleton_pooling_closed_form():
    # Attention over one element puts weight 1 on it: pool = W_value @ x.
    params = make_params()
    spec = cat_spec(("only",))
    embs = category_embeddings(params, spec, text_fn)
    pooled = pool_choices(params, embs)
    manual = embs.data[0] @ params["sem.pool.value"].data
    assert np.allclose(pooled.data, manual, atol=1e-12)


def test_identical_metadata_identical_embeddings():
    # Same desc/type/choices under different ids: the alignment mechanism.
    params = make_params()
    s1 = FeatureSpec(id="q1", desc="resting heart rate", ftype="continuous", range=(30.0, 220.0))
    s2 = FeatureSpec(id="zz", desc="resting heart rate", ftype="continuous", range=(30.0, 220.0))
    a = feature_embedding(params, s1, text_fn)
    b = feature_embedding(params, s2, text_fn)
    assert a.data.tobytes() == b.data.tobytes()


def test_category_embeddings_shape_and_order():
    params = make_params()
    spec = cat_spec()
    embs = category_embeddings(params, spec, text_fn)
    assert embs.shape == (3, D)
    single = project_text(params, text_fn("green")).data
    assert np.allclose(embs.data[1], single, atol=1e-12)


def test_category_embeddings_rejects_continuous():
    with pytest.raises(DataError):
        category_embeddings(make_params(), cont_spec(), text_fn)


def test_unknown_pool_mode_rejected():
    params = make_params()
    embs = category_embeddings(params, cat_spec(), text_fn)
    with pytest.raises(DataError):
        pool_choices(params, embs, mode="max")
