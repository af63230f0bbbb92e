"""The set-based predictive model over heterogeneous schemas.

A query instance is the full schema: observed features carry their
values, every other feature carries the shared missing token. Query
atoms, fully observed support shots, and context tokens are encoded,
tagged with their information-type token (query / shot / context),
fused by a set-to-set attention stack, and read out per target by
origin identity, never by position. Continuous targets get a Gaussian
mixture head, categorical targets a dot-product head against the
category embeddings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import checkpoint as ckpt
from .data import CONTINUOUS, DatasetBundle, FeatureSpec, Instance, Value
from .encoder import (
    atom_embedding_batch,
    init_encoder_params,
    instance_encode,
    set_stack,
    value_encoding,
)
from .errors import DataError, ShapeError
from .heads import (
    categorical_log_likelihood,
    categorical_logits,
    gmm_log_likelihood,
    gmm_params,
    init_head_params,
    prediction_from_heads,
)
from .semantic import category_embeddings, feature_embedding, init_semantic_params
from .tensor import Parameters, Tensor, concat, no_grad, stack
from .text import TextConfig, encode_text


@dataclass(frozen=True)
class ModelConfig:
    d: int = 128
    d_text: int = 64
    d_tag: int = 16
    heads: int = 4
    layers_instance: int = 8
    layers_aggregate: int = 8
    mixture_components: int = 10
    ngram_orders: tuple = (3, 4, 5)
    hash_seed: int = 1234
    choice_pool: str = "attention"  # or "sum"
    context_mode: str = "single"    # or "sentences"
    sigma_floor: float = 1e-3
    smax: int = 5

    def __post_init__(self):
        if self.d % 2 != 0:
            raise ShapeError(f"model width d={self.d} must be even")
        if self.d % self.heads != 0:
            raise ShapeError(f"d={self.d} not divisible by heads={self.heads}")

    def text_config(self) -> TextConfig:
        return TextConfig(
            d_text=self.d_text,
            ngram_orders=tuple(self.ngram_orders),
            hash_seed=self.hash_seed,
        )

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "d_text": self.d_text,
            "d_tag": self.d_tag,
            "heads": self.heads,
            "layers_instance": self.layers_instance,
            "layers_aggregate": self.layers_aggregate,
            "mixture_components": self.mixture_components,
            "ngram_orders": list(self.ngram_orders),
            "hash_seed": self.hash_seed,
            "choice_pool": self.choice_pool,
            "context_mode": self.context_mode,
            "sigma_floor": self.sigma_floor,
            "smax": self.smax,
        }

    @staticmethod
    def from_dict(obj: dict) -> "ModelConfig":
        obj = dict(obj)
        obj["ngram_orders"] = tuple(obj.get("ngram_orders", (3, 4, 5)))
        return ModelConfig(**obj)


DESK_CONFIG = dict(d=32, layers_instance=2, layers_aggregate=2, d_tag=8)


def desk_config(**overrides) -> ModelConfig:
    """Small widths for desk-scale training and tests."""
    kw = dict(DESK_CONFIG)
    kw.update(overrides)
    return ModelConfig(**kw)


class Model:
    def __init__(self, cfg: ModelConfig, params: Parameters, text_encoder=None):
        self.cfg = cfg
        self.params = params
        self._external_text = text_encoder
        self._text_cfg = cfg.text_config()

    # -- text ------------------------------------------------------------

    def text_vec(self, s: str) -> np.ndarray:
        if self._external_text is not None:
            return self._external_text.encode_text(s)
        return encode_text(s, self._text_cfg)

    def context_vectors(self, context: str) -> list:
        context = context.strip()
        if not context:
            return []
        if self.cfg.context_mode == "sentences":
            parts = [p for p in re.split(r"[.!?]+\s+", context) if p.strip()]
        else:
            parts = [context]
        return [self.text_vec(p) for p in parts]

    # -- embeddings ------------------------------------------------------

    def feature_embedding(self, spec: FeatureSpec) -> Tensor:
        return feature_embedding(
            self.params, spec, self.text_vec, pool_mode=self.cfg.choice_pool
        )

    def category_embeddings(self, spec: FeatureSpec) -> Tensor:
        return category_embeddings(self.params, spec, self.text_vec)

    def value_encoding(self, spec: FeatureSpec, value) -> Tensor:
        return value_encoding(self.params, spec, value, self.text_vec, self.cfg.d)

    def _atom_matrix(
        self, bundle: DatasetBundle, entries: list, fcache: dict, ccache: dict
    ) -> Tensor:
        """(n, d) atom embeddings for [(fid, value-or-None), ...].

        fcache/ccache share per-feature embedding nodes across the
        instances of one forward pass (graph fan-out handles the reuse).
        """
        feats, vencs, missing = [], [], []
        for fid, value in entries:
            spec = bundle.feature(fid)
            if fid not in fcache:
                fcache[fid] = self.feature_embedding(spec)
            feats.append(fcache[fid])
            if value is not None and spec.ftype != CONTINUOUS:
                if fid not in ccache:
                    ccache[fid] = self.category_embeddings(spec)
                if not 0 <= value.index < spec.n_choices:
                    raise DataError(
                        f"feature {fid!r}: category index {value.index} out of range "
                        f"[0, {spec.n_choices})"
                    )
                vencs.append(ccache[fid].gather_rows([value.index]).reshape(self.cfg.d))
            else:
                vencs.append(self.value_encoding(spec, value))
            missing.append(1.0 if value is None else 0.0)
        return atom_embedding_batch(
            self.params,
            stack(feats, axis=0),
            stack(vencs, axis=0),
            np.array(missing),
        )

    # -- fused forward ---------------------------------------------------

    def _query_entries(self, bundle: DatasetBundle, observed: dict) -> list:
        for fid, value in observed.items():
            spec = bundle.feature(fid)  # raises on unknown id
            if value is None:
                raise DataError(f"observed feature {fid!r} carries no value")
            if value.kind != spec.ftype:
                raise DataError(
                    f"observed feature {fid!r}: {value.kind} value for {spec.ftype} feature"
                )
        entries = [(fid, value) for fid, value in observed.items()]
        seen = set(observed)
        entries += [(f.id, None) for f in bundle.features if f.id not in seen]
        return entries

    def _shot_entries(self, bundle: DatasetBundle, shot: Instance, index: int) -> list:
        if shot.mask != frozenset(shot.atoms):
            raise DataError(f"shot {index}: must be fully observed")
        for fid, value in shot.atoms.items():
            if value is None:
                raise DataError(f"shot {index}: feature {fid!r} has no value")
        return list(shot.atoms.items())

    def fused(self, bundle: DatasetBundle, observed: dict, shots: list):
        """Aggregate the tagged union set; returns (tokens (N, d), origins)."""
        cfg = self.cfg
        q_entries = self._query_entries(bundle, observed)
        shot_entries = [
            self._shot_entries(bundle, shot, j) for j, shot in enumerate(shots)
        ]

        fcache, ccache = {}, {}
        q_atoms = self._atom_matrix(bundle, q_entries, fcache, ccache)
        shot_atoms = [
            self._atom_matrix(bundle, e, fcache, ccache) for e in shot_entries
        ]

        n_q = len(q_entries)
        same = [m for m in shot_atoms if m.shape[0] == n_q]
        if len(same) == len(shot_atoms) and shot_atoms:
            batch = stack([q_atoms] + shot_atoms, axis=0)
            enc = instance_encode(
                self.params, batch, cfg.layers_instance, cfg.heads
            )
            q_enc = enc[0]
            shot_encs = [enc[1 + j] for j in range(len(shot_atoms))]
        else:
            q_enc = instance_encode(
                self.params, q_atoms, cfg.layers_instance, cfg.heads
            )
            shot_encs = [
                instance_encode(self.params, m, cfg.layers_instance, cfg.heads)
                for m in shot_atoms
            ]

        ctx_vecs = self.context_vectors(bundle.context)
        parts, origins = [], []

        def tag(mat: Tensor, tag_name: str) -> Tensor:
            n = mat.shape[0]
            tag_vec = self.params[tag_name].reshape(1, cfg.d_tag)
            tags = concat([tag_vec] * n, axis=0) if n > 1 else tag_vec
            wide = concat([mat, tags], axis=1)
            return wide @ self.params["tag.proj.w"] + self.params["tag.proj.b"]

        parts.append(tag(q_enc, "tag.query"))
        origins.extend(("query", fid) for fid, _ in q_entries)
        for j, enc in enumerate(shot_encs):
            parts.append(tag(enc, "tag.shot"))
            origins.extend(("shot", j, fid) for fid, _ in shot_entries[j])
        if ctx_vecs:
            ctx = Tensor(np.stack(ctx_vecs)) @ self.params["sem.proj"]
            parts.append(tag(ctx, "tag.ctx"))
            origins.extend(("ctx", i) for i in range(len(ctx_vecs)))

        union = concat(parts, axis=0) if len(parts) > 1 else parts[0]
        fused = set_stack(
            self.params, "agg", union, cfg.layers_aggregate, cfg.heads
        )
        return fused, origins

    def _target_tokens(self, fused: Tensor, origins: list, targets: list) -> dict:
        index = {origin: i for i, origin in enumerate(origins)}
        out = {}
        for fid in targets:
            out[fid] = fused[index[("query", fid)]]
        return out

    # -- likelihood and prediction ---------------------------------------

    def target_log_likelihood(self, bundle, token: Tensor, spec: FeatureSpec, truth: Value) -> Tensor:
        if spec.ftype == CONTINUOUS:
            logw, _, mu, sigma = gmm_params(
                self.params, token, self.cfg.mixture_components, self.cfg.sigma_floor
            )
            return gmm_log_likelihood(logw, mu, sigma, truth.normalized)
        cat = self.category_embeddings(spec)
        logits = categorical_logits(self.params, token, cat)
        return categorical_log_likelihood(logits, truth.index)

    def loss_for_query(self, bundle: DatasetBundle, row: Instance, mask, shots: list):
        """Negative log-likelihood of all unobserved row atoms, as a Tensor.

        Returns (loss, n_targets).
        """
        mask = frozenset(mask)
        observed = {fid: row.atoms[fid] for fid in row.atoms if fid in mask}
        targets = sorted(set(row.atoms) - mask)
        if not targets:
            raise DataError("no unobserved atoms to score")
        fused, origins = self.fused(bundle, observed, shots)
        tokens = self._target_tokens(fused, origins, targets)
        total = None
        for fid in targets:
            ll = self.target_log_likelihood(
                bundle, tokens[fid], bundle.feature(fid), row.atoms[fid]
            )
            total = ll if total is None else total + ll
        return -total, len(targets)

    def predict(
        self,
        bundle: DatasetBundle,
        observed: dict,
        targets: list,
        shots: list = (),
    ) -> dict:
        """Per-target predictive distributions given observed values."""
        for fid in targets:
            bundle.feature(fid)
            if fid in observed:
                raise DataError(f"target {fid!r} is observed")
        with no_grad():
            fused, origins = self.fused(bundle, observed, list(shots))
            tokens = self._target_tokens(fused, origins, list(targets))
            out = {}
            for fid in targets:
                out[fid] = prediction_from_heads(
                    self.params,
                    tokens[fid],
                    bundle.feature(fid),
                    self.text_vec,
                    self.cfg.mixture_components,
                    self.cfg.choice_pool,
                )
        return out

    # -- persistence -----------------------------------------------------

    def save(self, path, extra: dict | None = None):
        ckpt.save_checkpoint(
            path, self.params.state_arrays(), self.cfg.as_dict(), extra=extra
        )

    def config_digest(self) -> str:
        return ckpt.config_digest(self.cfg.as_dict())


def build_model(cfg: ModelConfig, seed: int, text_encoder=None) -> Model:
    """Deterministic parameter construction for a config and seed."""
    rng = np.random.default_rng(seed)
    params = Parameters()
    init_semantic_params(params, cfg.d_text, cfg.d, rng)
    init_encoder_params(params, cfg.d, cfg.layers_instance, rng, stack_name="inst")
    init_encoder_params(params, cfg.d, cfg.layers_aggregate, rng, stack_name="agg")
    for name in ("tag.query", "tag.shot", "tag.ctx"):
        params.add(name, rng.normal(scale=0.02, size=(cfg.d_tag,)))
    params.add(
        "tag.proj.w",
        rng.normal(scale=1.0 / np.sqrt(cfg.d + cfg.d_tag), size=(cfg.d + cfg.d_tag, cfg.d)),
    )
    params.add("tag.proj.b", np.zeros(cfg.d))
    init_head_params(params, cfg.d, cfg.mixture_components, rng)
    return Model(cfg, params, text_encoder=text_encoder)


def load_model(path, text_encoder=None) -> Model:
    ck = ckpt.load_checkpoint(path)
    cfg = ModelConfig.from_dict(ck.config)
    model = build_model(cfg, seed=0, text_encoder=text_encoder)
    model.params.load_arrays(ck.arrays)
    return model
