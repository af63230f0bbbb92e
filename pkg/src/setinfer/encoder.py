"""Atom embeddings and the permutation-equivariant set encoder.

Value encodings: continuous values become sinusoidal features of the
normalized value (geometric base-2 frequencies), categorical values the
matching category embedding, and missing values one shared learned
token. A gate computed from the feature embedding conditions the value
encoding before the atom MLP, so the same raw value embeds differently
under different features.

The set encoder is a stack of pre-norm residual self-attention blocks
(multi-head attention + position-wise feed-forward, layer norms with
learned affine terms). No positional encodings anywhere; equivariance
is structural. Inputs may be (n, d) or batched (B, n, d).
"""

from __future__ import annotations

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, FeatureSpec, Value
from .errors import DataError, ShapeError
from .semantic import category_embeddings
from .tensor import Parameters, Tensor, concat

# -- parameter construction ---------------------------------------------


def _linear_init(params, name, n_in, n_out, rng):
    params.add(f"{name}.w", rng.normal(scale=1.0 / np.sqrt(n_in), size=(n_in, n_out)))
    params.add(f"{name}.b", np.zeros(n_out))


def _block_init(params, prefix, d, rng):
    for part in ("wq", "wk", "wv", "wo"):
        _linear_init(params, f"{prefix}.attn.{part}", d, d, rng)
    _linear_init(params, f"{prefix}.ff.w1", d, 4 * d, rng)
    _linear_init(params, f"{prefix}.ff.w2", 4 * d, d, rng)
    for ln in ("ln1", "ln2"):
        params.add(f"{prefix}.{ln}.gain", np.ones(d))
        params.add(f"{prefix}.{ln}.bias", np.zeros(d))


def init_encoder_params(params: Parameters, d: int, layers: int, rng, stack_name="inst"):
    if stack_name == "inst":
        params.add("enc.missing", rng.normal(scale=0.02, size=(d,)))
        _linear_init(params, "enc.gate", d, d, rng)
        _linear_init(params, "enc.atom1", 2 * d, 2 * d, rng)
        _linear_init(params, "enc.atom2", 2 * d, d, rng)
    for layer in range(layers):
        _block_init(params, f"{stack_name}.{layer}", d, rng)


# -- value and atom embeddings ------------------------------------------


def sinusoid_features(v: float, d: int) -> np.ndarray:
    """[sin(v w_j) for j] + [cos(v w_j) for j], w_j = 2^j pi, j < d/2."""
    half = d // 2
    freqs = (2.0 ** np.arange(half)) * np.pi
    ang = v * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)])


def value_encoding(params: Parameters, spec: FeatureSpec, value, text_fn, d: int) -> Tensor:
    """Value (or None for missing) to a width-d encoding."""
    if value is None:
        return params["enc.missing"].reshape(d)
    if spec.ftype == CONTINUOUS:
        if value.kind != CONTINUOUS:
            raise DataError(f"feature {spec.id!r}: continuous value expected")
        return Tensor(sinusoid_features(value.normalized, d))
    if value.kind != CATEGORICAL:
        raise DataError(f"feature {spec.id!r}: categorical value expected")
    if not 0 <= value.index < spec.n_choices:
        raise DataError(
            f"feature {spec.id!r}: category index {value.index} out of range "
            f"[0, {spec.n_choices})"
        )
    return category_embeddings(params, spec, text_fn).gather_rows([value.index]).reshape(d)


def atom_embedding(params: Parameters, feat_emb: Tensor, venc: Tensor, missing: bool) -> Tensor:
    """Gated value conditioning then the atom MLP, width d out.

    The missing token bypasses gating: it carries no feature-specific
    value content to condition.
    """
    if missing:
        conditioned = venc
    else:
        gate = (feat_emb @ params["enc.gate.w"] + params["enc.gate.b"]).sigmoid()
        conditioned = venc * gate
    x = concat([feat_emb, conditioned], axis=0)
    h = (x @ params["enc.atom1.w"] + params["enc.atom1.b"]).gelu()
    return h @ params["enc.atom2.w"] + params["enc.atom2.b"]


def atom_embedding_batch(
    params: Parameters, feats: Tensor, vencs: Tensor, missing_mask: np.ndarray
) -> Tensor:
    """Vectorized atom_embedding over rows: feats/vencs (n, d), mask (n,).

    missing_mask is 1.0 where the value is the missing token (gating
    bypassed there), 0.0 otherwise. Identical math to the scalar path.
    """
    gate = (feats @ params["enc.gate.w"] + params["enc.gate.b"]).sigmoid()
    keep = missing_mask.reshape(-1, 1)
    conditioned = vencs * gate * (1.0 - keep) + vencs * keep
    x = concat([feats, conditioned], axis=1)
    h = (x @ params["enc.atom1.w"] + params["enc.atom1.b"]).gelu()
    return h @ params["enc.atom2.w"] + params["enc.atom2.b"]


# -- set transformer -----------------------------------------------------


def _layer_norm_affine(params, prefix, x: Tensor) -> Tensor:
    return x.layer_norm() * params[f"{prefix}.gain"] + params[f"{prefix}.bias"]


def multi_head_attention(params: Parameters, prefix: str, x: Tensor, heads: int) -> Tensor:
    """Self-attention over the set axis (-2); supports leading batch dims."""
    shape = x.shape
    n, d = shape[-2], shape[-1]
    if d % heads != 0:
        raise ShapeError(f"width {d} not divisible by heads {heads}")
    dh = d // heads
    lead = shape[:-2]

    def split(t: Tensor) -> Tensor:
        t = t.reshape(*lead, n, heads, dh)
        axes = tuple(range(len(lead))) + (len(lead) + 1, len(lead), len(lead) + 2)
        return t.transpose(axes)  # (..., heads, n, dh)

    q = split(x @ params[f"{prefix}.wq.w"] + params[f"{prefix}.wq.b"])
    k = split(x @ params[f"{prefix}.wk.w"] + params[f"{prefix}.wk.b"])
    v = split(x @ params[f"{prefix}.wv.w"] + params[f"{prefix}.wv.b"])
    kt_axes = tuple(range(len(lead) + 1)) + (len(lead) + 2, len(lead) + 1)
    scores = (q @ k.transpose(kt_axes)) * (1.0 / np.sqrt(dh))
    attn = scores.softmax(axis=-1)
    out = attn @ v  # (..., heads, n, dh)
    back = tuple(range(len(lead))) + (len(lead) + 1, len(lead), len(lead) + 2)
    out = out.transpose(back).reshape(*lead, n, d)
    return out @ params[f"{prefix}.wo.w"] + params[f"{prefix}.wo.b"]


def set_block(params: Parameters, prefix: str, x: Tensor, heads: int) -> Tensor:
    a = x + multi_head_attention(params, f"{prefix}.attn", _layer_norm_affine(params, f"{prefix}.ln1", x), heads)
    z = _layer_norm_affine(params, f"{prefix}.ln2", a)
    f = (z @ params[f"{prefix}.ff.w1.w"] + params[f"{prefix}.ff.w1.b"]).gelu()
    return a + (f @ params[f"{prefix}.ff.w2.w"] + params[f"{prefix}.ff.w2.b"])


def set_stack(params: Parameters, stack_name: str, x: Tensor, layers: int, heads: int) -> Tensor:
    if x.shape[-2] == 0:
        raise ShapeError(f"set encoder needs >= 1 element, got shape {x.shape}")
    for layer in range(layers):
        x = set_block(params, f"{stack_name}.{layer}", x, heads)
    return x


def instance_encode(params: Parameters, atoms: Tensor, layers: int, heads: int) -> Tensor:
    """(n, d) or (B, n, d) atom embeddings -> same-shape instance embedding."""
    return set_stack(params, "inst", atoms, layers, heads)
