"""Few-shot masked training loop.

Each step samples a batch of bundles with replacement, one target row
per bundle, a random observed mask, and a random number of fully
observed shot rows; the loss is the mean over bundles of the summed
negative log-likelihood of the unobserved atoms. Gradients accumulate
across the batch into a single optimizer update.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint as ckpt
from .data import DatasetBundle, sample_mask, sample_shots
from .errors import CheckpointError, DataError, GradientError
from .model import Model, ModelConfig, build_model
from .optim import Adam
from .tensor import grad_dict, no_grad


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 5000
    batch_size: int = 8
    lr: float = 3e-4
    lr_schedule: str = "constant"  # or "cosine": linear warmup, cosine decay to 0
    warmup: int = 0
    smax: int = 5
    seed: int = 0
    log_every: int = 10       # curve-file cadence; in-memory curve keeps every step
    val_every: int = 250
    val_fraction: float = 0.15
    precision: str = "f64"    # "f64", or "f32" to round state through float32 each step

    def __post_init__(self):
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.smax < 0:
            raise DataError("smax must be >= 0")
        if self.precision not in ("f64", "f32"):
            raise DataError(f"unknown precision mode {self.precision!r}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise DataError("val_fraction must be in [0, 1)")
        if self.lr_schedule not in ("constant", "cosine"):
            raise DataError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.warmup < 0:
            raise DataError("warmup must be >= 0")


def lr_at(cfg: TrainConfig, step: int) -> float:
    """Learning rate for a 0-based step, annealed against cfg.steps."""
    if cfg.lr_schedule == "constant":
        return cfg.lr
    if step < cfg.warmup:
        return cfg.lr * (step + 1) / cfg.warmup
    span = max(cfg.steps - cfg.warmup, 1)
    t = min((step - cfg.warmup) / span, 1.0)
    return cfg.lr * 0.5 * (1.0 + float(np.cos(np.pi * t)))


@dataclass
class TrainState:
    model: Model
    opt: Adam
    rng: np.random.Generator
    step: int = 0
    loss_sum: float = 0.0
    loss_count: int = 0
    clamp_counter: dict = field(default_factory=dict)

    @property
    def mean_loss(self) -> float:
        return self.loss_sum / max(self.loss_count, 1)


def init_state(model: Model, cfg: TrainConfig) -> TrainState:
    return TrainState(
        model=model,
        opt=Adam(model.params, lr=cfg.lr),
        rng=np.random.default_rng(cfg.seed),
    )


def _shot_indices(bundle: DatasetBundle, shots: list) -> list:
    # shots share their atoms dict with the source row, so identity maps back
    out = []
    for s in shots:
        for j, r in enumerate(bundle.rows):
            if r.atoms is s.atoms:
                out.append(j)
                break
    return out


def train_step(state: TrainState, collection: list, cfg: TrainConfig):
    """One sampled batch and one optimizer update.

    Returns (batch loss, per-bundle diagnostics).
    """
    if not collection:
        raise DataError("empty bundle collection")
    rng = state.rng
    model = state.model
    total = None
    infos = []
    for _ in range(cfg.batch_size):
        bi = int(rng.integers(0, len(collection)))
        bundle = collection[bi]
        if len(bundle.rows) < cfg.smax + 1:
            raise DataError(
                f"bundle {bundle.name!r} has {len(bundle.rows)} rows; "
                f"needs >= smax + 1 = {cfg.smax + 1}"
            )
        ri = int(rng.integers(0, len(bundle.rows)))
        row = bundle.rows[ri]
        mask = sample_mask(row, rng)
        shots = sample_shots(bundle, row, rng, smax=cfg.smax)
        loss, n_targets = model.loss_for_query(bundle, row, mask, shots)
        if not np.isfinite(float(loss.data)):
            raise GradientError(
                f"non-finite loss at step {state.step}: bundle {bundle.name!r}, "
                f"row {ri}, mask {sorted(mask)}, shot rows {_shot_indices(bundle, shots)}"
            )
        total = loss if total is None else total + loss
        infos.append(
            {
                "bundle": bundle.name,
                "row": ri,
                "mask_size": len(mask),
                "mask": sorted(mask),
                "n_shots": len(shots),
                "shot_rows": _shot_indices(bundle, shots),
                "n_targets": n_targets,
            }
        )
    batch_loss = total * (1.0 / cfg.batch_size)
    grads = grad_dict(batch_loss, model.params)
    state.opt.lr = lr_at(cfg, state.step)
    state.opt.step(grads)
    if cfg.precision == "f32":
        _round_state_f32(state)
    state.step += 1
    value = float(batch_loss.data)
    state.loss_sum += value
    state.loss_count += 1
    return value, infos


def _round_state_f32(state: TrainState):
    for _, t in state.model.params.items():
        t.data = t.data.astype("<f4").astype(np.float64)
    for d in (state.opt.m, state.opt.v):
        for name in d:
            d[name] = d[name].astype("<f4").astype(np.float64)


# -- train/validation split and the outer loop ---------------------------


def split_rows(collection: list, cfg: TrainConfig):
    """Deterministic per-bundle row split: (train bundles, val row lists).

    Validation entries are (bundle, row) pairs; train bundles keep at
    least smax + 1 rows so shot sampling stays valid.
    """
    train_bundles, val_pairs = [], []
    for bundle in collection:
        n = len(bundle.rows)
        n_val = int(np.floor(n * cfg.val_fraction))
        min_train = cfg.smax + 1
        if n - n_val < min_train:
            n_val = max(0, n - min_train)
        key = int.from_bytes(
            hashlib.blake2b(
                f"split:{cfg.seed}:{bundle.name}".encode(), digest_size=8
            ).digest(),
            "little",
        )
        order = np.random.default_rng(key).permutation(n)
        val_idx = set(int(i) for i in order[:n_val])
        train_rows = tuple(r for i, r in enumerate(bundle.rows) if i not in val_idx)
        if len(train_rows) < min_train:
            raise DataError(
                f"bundle {bundle.name!r}: {len(train_rows)} training rows "
                f"after split; needs >= {min_train}"
            )
        train_bundles.append(
            DatasetBundle(
                name=bundle.name,
                context=bundle.context,
                features=bundle.features,
                rows=train_rows,
                target_ids=bundle.target_ids,
            )
        )
        for i in sorted(val_idx):
            val_pairs.append((train_bundles[-1], bundle.rows[i]))
    return train_bundles, val_pairs


def _val_mask(row, cfg: TrainConfig, bundle_name: str, index: int) -> frozenset:
    key = int.from_bytes(
        hashlib.blake2b(
            f"valmask:{cfg.seed}:{bundle_name}:{index}".encode(), digest_size=8
        ).digest(),
        "little",
    )
    return sample_mask(row, np.random.default_rng(key))


def validate(model: Model, val_pairs: list, cfg: TrainConfig) -> float:
    """Mean per-target NLL over held-out rows, fixed seeded masks, no shots."""
    if not val_pairs:
        return float("nan")
    total, count = 0.0, 0
    with no_grad():
        for i, (bundle, row) in enumerate(val_pairs):
            mask = _val_mask(row, cfg, bundle.name, i)
            loss, n_targets = model.loss_for_query(bundle, row, mask, [])
            total += float(loss.data)
            count += n_targets
    return total / count


def fit(
    model: Model,
    collection: list,
    cfg: TrainConfig,
    curve_path=None,
    checkpoint_path=None,
):
    """Run cfg.steps of train_step with periodic held-out validation.

    Returns (TrainState, curve) where curve is one record per step:
    {"step", "loss", "val_nll"} with val_nll None except at validation
    steps. curve_path mirrors the curve as line-delimited JSON at the
    cfg.log_every cadence (validation records always written).
    """
    if not collection:
        raise DataError("empty bundle collection")
    train_bundles, val_pairs = split_rows(collection, cfg)
    state = init_state(model, cfg)
    curve = []
    fh = open(curve_path, "w") if curve_path else None
    try:
        for _ in range(cfg.steps):
            loss, _ = train_step(state, train_bundles, cfg)
            record = {"step": state.step, "loss": loss, "val_nll": None}
            if cfg.val_every > 0 and state.step % cfg.val_every == 0:
                record["val_nll"] = validate(model, val_pairs, cfg)
            curve.append(record)
            if fh and (
                record["val_nll"] is not None
                or cfg.log_every <= 1
                or state.step % cfg.log_every == 0
            ):
                fh.write(json.dumps(record) + "\n")
        if cfg.steps > 0 and curve and curve[-1]["val_nll"] is None:
            curve[-1]["val_nll"] = validate(model, val_pairs, cfg)
            if fh:
                fh.write(json.dumps(curve[-1]) + "\n")
        if checkpoint_path:
            save_state(state, checkpoint_path)
    finally:
        if fh:
            fh.close()
    return state, curve


def finetune(
    state: TrainState,
    bundle: DatasetBundle,
    cfg: TrainConfig,
    expect_digest: str | None = None,
):
    """Continue the same loop on a single bundle; all parameters trainable."""
    if expect_digest is not None and expect_digest != state.model.config_digest():
        raise CheckpointError(
            f"config digest mismatch: expected {expect_digest}, "
            f"state has {state.model.config_digest()}"
        )
    state.opt.lr = cfg.lr
    for _ in range(cfg.steps):
        train_step(state, [bundle], cfg)
    return state


# -- persistence ---------------------------------------------------------


def save_state(state: TrainState, path):
    """Full training state: parameters, optimizer, RNG, counters."""
    arrays = dict(state.model.params.state_arrays())
    for name, a in state.opt.state_arrays().items():
        arrays[f"opt.{name}"] = a
    extra = {
        "kind": "train_state",
        "step": state.step,
        "loss_sum": state.loss_sum,
        "loss_count": state.loss_count,
        "rng_state": json.dumps(state.rng.bit_generator.state),
    }
    ckpt.save_checkpoint(path, arrays, state.model.cfg.as_dict(), extra=extra)


def load_state(path, cfg: TrainConfig, text_encoder=None) -> TrainState:
    ck = ckpt.load_checkpoint(path)
    if ck.extra.get("kind") != "train_state":
        raise CheckpointError(f"{os.fspath(path)!r} is not a training checkpoint")
    model_cfg = ModelConfig.from_dict(ck.config)
    model = build_model(model_cfg, seed=0, text_encoder=text_encoder)
    model_arrays = {k: v for k, v in ck.arrays.items() if not k.startswith("opt.")}
    model.params.load_arrays(model_arrays)
    opt = Adam(model.params, lr=cfg.lr)
    opt.load_arrays(
        {k[len("opt.") :]: v for k, v in ck.arrays.items() if k.startswith("opt.")}
    )
    rng = np.random.default_rng(cfg.seed)
    rng.bit_generator.state = json.loads(ck.extra["rng_state"])
    return TrainState(
        model=model,
        opt=opt,
        rng=rng,
        step=int(ck.extra["step"]),
        loss_sum=float(ck.extra["loss_sum"]),
        loss_count=int(ck.extra["loss_count"]),
    )
