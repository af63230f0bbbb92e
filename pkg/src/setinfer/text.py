"""Fixed-dimension text embeddings for feature descriptions and context.

Default mode is a deterministic offline encoder: character n-grams with
signed feature hashing into d_text buckets, L2-normalized. It stands in
for a pretrained sentence encoder; the model only consumes the vector
geometry, never the encoder internals, so the two are interchangeable.

An optional external client posts {"texts": [...]} to an embedding
service and expects {"embeddings": [[...]]} back, with an append-only
on-disk cache. No gradients ever flow into text embeddings.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TextError, TransportError

# Characters that survive normalization besides letters/digits/space.
# Units and magnitudes show up in feature descriptions ("cost in $",
# "temp in °C", "dose µg/ml") and carry real signal.
UNIT_CHARS = set("%/°µ$²³")


@dataclass(frozen=True)
class TextConfig:
    d_text: int = 64
    ngram_orders: tuple = (3, 4, 5)
    hash_seed: int = 1234

    def __post_init__(self):
        if self.d_text < 8:
            raise TextError(f"d_text must be >= 8, got {self.d_text}")

    def as_dict(self) -> dict:
        return {
            "d_text": self.d_text,
            "ngram_orders": list(self.ngram_orders),
            "hash_seed": self.hash_seed,
        }


def normalize(s: str) -> str:
    out = []
    for ch in s.lower():
        if ch.isalnum() or ch in UNIT_CHARS:
            out.append(ch)
        else:
            out.append(" ")
    return " ".join("".join(out).split())


def _tokens(norm: str, orders: tuple) -> list:
    toks = [norm]
    padded = f" {norm} "
    for n in orders:
        if len(padded) >= n:
            toks.extend(padded[i : i + n] for i in range(len(padded) - n + 1))
    return toks


@lru_cache(maxsize=65536)
def _encode_cached(norm: str, cfg: TextConfig) -> bytes:
    key = cfg.hash_seed.to_bytes(8, "little", signed=False)
    vec = np.zeros(cfg.d_text, dtype=np.float64)
    for tok in _tokens(norm, cfg.ngram_orders):
        h = hashlib.blake2b(tok.encode("utf-8"), key=key, digest_size=8).digest()
        val = int.from_bytes(h, "little")
        bucket = val % cfg.d_text
        sign = 1.0 if (val >> 63) & 1 else -1.0
        vec[bucket] += sign
    nrm = float(np.linalg.norm(vec))
    if nrm == 0.0:
        # Signed counts cancelled exactly; fall back to a unit basis vector
        # keyed by the whole string so the output is still deterministic.
        h = hashlib.blake2b(norm.encode("utf-8"), key=key, digest_size=8).digest()
        vec[int.from_bytes(h, "little") % cfg.d_text] = 1.0
    else:
        vec /= nrm
    return vec.tobytes()


def encode_text(s: str, cfg: TextConfig) -> np.ndarray:
    norm = normalize(s)
    if not norm:
        raise TextError(f"text is empty after normalization: {s!r}")
    return np.frombuffer(_encode_cached(norm, cfg), dtype=np.float64).copy()


def encode_batch(strings, cfg: TextConfig) -> list:
    out = []
    for i, s in enumerate(strings):
        try:
            out.append(encode_text(s, cfg))
        except TextError as e:
            raise TextError(f"batch index {i}: {e}") from e
    return out


class ExternalTextEncoder:
    """Client for an external embedding service with a disk cache.

    The cache file is an append-only record log: one JSON object per line,
    {"key": sha256(normalized|endpoint|dim), "text": ..., "vector": [...]}.
    Single-writer, multi-reader: writes go through a lock.
    """

    def __init__(self, endpoint: str, d_text: int, cache_path=None, post=None, timeout=10.0):
        self.endpoint = endpoint
        self.d_text = d_text
        self.cache_path = cache_path
        self.timeout = timeout
        if post is None:
            import requests

            def post(url, payload):
                try:
                    resp = requests.post(url, json=payload, timeout=self.timeout)
                except requests.RequestException as e:
                    raise TransportError(f"embedding endpoint unreachable: {e}") from e
                if resp.status_code != 200:
                    raise TextError(
                        f"embedding endpoint returned HTTP {resp.status_code}"
                    )
                return resp.json()

        self._post = post
        self._lock = threading.Lock()
        self._cache: dict[str, np.ndarray] = {}
        if cache_path and os.path.exists(cache_path):
            with open(cache_path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._cache[rec["key"]] = np.asarray(rec["vector"], dtype=np.float64)

    def _key(self, norm: str) -> str:
        raw = f"{norm}|{self.endpoint}|{self.d_text}".encode("utf-8")
        return hashlib.sha256(raw).hexdigest()

    def encode_batch(self, strings) -> list:
        norms = []
        for i, s in enumerate(strings):
            norm = normalize(s)
            if not norm:
                raise TextError(f"batch index {i}: text is empty after normalization: {s!r}")
            norms.append(norm)
        missing = [n for n in norms if self._key(n) not in self._cache]
        missing = list(dict.fromkeys(missing))
        if missing:
            payload = {"texts": missing}
            body = self._post(self.endpoint, payload)
            if not isinstance(body, dict) or "embeddings" not in body:
                raise TextError("bad response: missing 'embeddings' field")
            embs = body["embeddings"]
            if len(embs) != len(missing):
                raise TextError(
                    f"bad response: {len(embs)} embeddings for {len(missing)} texts"
                )
            with self._lock:
                for norm, emb in zip(missing, embs):
                    vec = np.asarray(emb, dtype=np.float64)
                    if vec.shape != (self.d_text,):
                        raise TextError(
                            f"bad response: embedding dim {vec.shape} != ({self.d_text},)"
                        )
                    nrm = float(np.linalg.norm(vec))
                    if not np.isfinite(nrm) or nrm == 0.0:
                        raise TextError("bad response: non-finite or zero embedding")
                    vec = vec / nrm
                    key = self._key(norm)
                    self._cache[key] = vec
                    if self.cache_path:
                        rec = {"key": key, "text": norm, "vector": vec.tolist()}
                        with open(self.cache_path, "a") as fh:
                            fh.write(json.dumps(rec) + "\n")
        return [self._cache[self._key(n)].copy() for n in norms]

    def encode_text(self, s: str) -> np.ndarray:
        return self.encode_batch([s])[0]
