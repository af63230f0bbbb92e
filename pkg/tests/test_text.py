"""Hashed text encoder and external embedding client."""

import itertools

import numpy as np
import pytest

from setinfer.errors import TextError, TransportError
from setinfer.text import (
    ExternalTextEncoder,
    TextConfig,
    encode_batch,
    encode_text,
    normalize,
)

CFG = TextConfig()


def test_determinism():
    a = encode_text("age", CFG)
    b = encode_text("age", CFG)
    assert a.tobytes() == b.tobytes()


def test_normalization_contract():
    assert normalize("AGE ") == "age"
    assert normalize("Body-Mass  Index!") == "body mass index"
    assert normalize("dose in µg/ml") == "dose in µg/ml"
    a = encode_text("age", CFG)
    b = encode_text("AGE ", CFG)
    assert a.tobytes() == b.tobytes()


def test_unit_norm():
    v = encode_text("body mass index", CFG)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)


def test_dimension():
    assert encode_text("x", CFG).shape == (CFG.d_text,)
    small = TextConfig(d_text=16)
    assert encode_text("x", small).shape == (16,)


def test_d_text_floor():
    with pytest.raises(TextError):
        TextConfig(d_text=4)


def test_empty_string_errors():
    with pytest.raises(TextError):
        encode_text("", CFG)
    with pytest.raises(TextError):
        encode_text("  !!  ", CFG)


def test_batch_matches_single_and_names_index():
    vecs = encode_batch(["a", "b"], CFG)
    assert vecs[0].tobytes() == encode_text("a", CFG).tobytes()
    assert vecs[1].tobytes() == encode_text("b", CFG).tobytes()
    assert encode_batch([], CFG) == []
    with pytest.raises(TextError) as exc:
        encode_batch(["ok", "   "], CFG)
    assert "index 1" in str(exc.value)


def test_batch_of_identical_strings():
    vecs = encode_batch(["same"] * 100, CFG)
    ref = vecs[0].tobytes()
    assert all(v.tobytes() == ref for v in vecs)


def test_seed_changes_vectors():
    a = encode_text("age", TextConfig(hash_seed=1))
    b = encode_text("age", TextConfig(hash_seed=2))
    assert a.tobytes() != b.tobytes()


def test_no_exact_collisions_over_vocabulary():
    # 1,000 distinct words from syllable products; all should embed distinctly.
    syllables = ["ka", "ti", "mo", "re", "su", "ba", "ne", "lo", "di", "fu"]
    vocab = ["".join(p) for p in itertools.product(syllables, repeat=3)]
    assert len(vocab) == 1000
    seen = set()
    for w in vocab:
        seen.add(encode_text(w, CFG).tobytes())
    assert len(seen) == len(vocab)


class FakePost:
    def __init__(self, response=None, raises=None):
        self.calls = []
        self.response = response
        self.raises = raises

    def __call__(self, url, payload):
        self.calls.append((url, payload))
        if self.raises:
            raise self.raises
        if callable(self.response):
            return self.response(payload)
        return self.response


def test_external_encoder_normalizes_and_caches(tmp_path):
    def respond(payload):
        return {"embeddings": [[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] for _ in payload["texts"]]}

    post = FakePost(response=respond)
    cache = tmp_path / "cache.jsonl"
    enc = ExternalTextEncoder("http://emb.local/v1", d_text=8, cache_path=str(cache), post=post)
    v = enc.encode_text("Hello World")
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert post.calls[0][1] == {"texts": ["hello world"]}
    enc.encode_text("hello   world")
    assert len(post.calls) == 1  # cache hit

    enc2 = ExternalTextEncoder("http://emb.local/v1", d_text=8, cache_path=str(cache), post=post)
    v2 = enc2.encode_text("hello world")
    assert len(post.calls) == 1  # disk cache hit
    assert v2.tobytes() == v.tobytes()


def test_external_encoder_transport_error():
    post = FakePost(raises=TransportError("connection refused"))
    enc = ExternalTextEncoder("http://emb.local/v1", d_text=8, post=post)
    with pytest.raises(TransportError):
        enc.encode_text("hello")


def test_external_encoder_bad_response():
    enc = ExternalTextEncoder("http://e/", d_text=8, post=FakePost(response={"nope": []}))
    with pytest.raises(TextError):
        enc.encode_text("hello")
    enc = ExternalTextEncoder(
        "http://e/", d_text=8, post=FakePost(response={"embeddings": [[1.0, 2.0]]})
    )
    with pytest.raises(TextError):
        enc.encode_text("hello")
    enc = ExternalTextEncoder("http://e/", d_text=8, post=FakePost(response={"embeddings": []}))
    with pytest.raises(TextError):
        enc.encode_text("hello")
