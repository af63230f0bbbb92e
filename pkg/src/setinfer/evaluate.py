"""Few-shot evaluation protocol and the marginal baseline.

Per seed, each held-out row is predicted with every non-target feature
observed and S fresh demonstration rows sampled from the training split
of the same bundle; metrics aggregate over rows, then average over
seeds. The marginal baseline runs the same rows with nothing observed.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .data import CATEGORICAL, DatasetBundle
from .errors import DataError
from .metrics import metric_f1, metric_rmse
from .model import Model
from .tensor import no_grad

VAL_FRACTION = 0.15


def split_bundle(bundle: DatasetBundle, val_fraction=VAL_FRACTION, split_seed=0):
    """Deterministic row split into (train rows, eval rows)."""
    n = len(bundle.rows)
    n_val = max(1, int(np.floor(n * val_fraction)))
    if n_val >= n:
        raise DataError(f"bundle {bundle.name!r}: too few rows to split ({n})")
    key = int.from_bytes(
        hashlib.blake2b(
            f"evalsplit:{split_seed}:{bundle.name}".encode(), digest_size=8
        ).digest(),
        "little",
    )
    order = np.random.default_rng(key).permutation(n)
    val_idx = set(int(i) for i in order[:n_val])
    train = [r for i, r in enumerate(bundle.rows) if i not in val_idx]
    val = [bundle.rows[i] for i in sorted(val_idx)]
    return train, val


def _target_id(bundle: DatasetBundle, target_id: str | None) -> str:
    if target_id is not None:
        bundle.feature(target_id)
        return target_id
    if not bundle.target_ids:
        raise DataError(f"bundle {bundle.name!r} has no designated target")
    return bundle.target_ids[0]


def eval_few_shot(
    model: Model,
    bundle: DatasetBundle,
    shots: int,
    seeds,
    target_id: str | None = None,
    observed: str = "nontarget",
    val_fraction: float = VAL_FRACTION,
    split_seed: int = 0,
) -> dict:
    """Report mean NLL plus F1 or RMSE for the designated target.

    observed: "nontarget" shows every other feature; "none" hides all
    (the marginal baseline).
    """
    if shots < 0:
        raise DataError("shots must be >= 0")
    if observed not in ("nontarget", "none"):
        raise DataError(f"unknown observed mode {observed!r}")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise DataError("need at least one seed")
    fid = _target_id(bundle, target_id)
    spec = bundle.feature(fid)
    train_rows, eval_rows = split_bundle(bundle, val_fraction, split_seed)
    if shots > len(train_rows):
        raise DataError(
            f"shots={shots} exceeds {len(train_rows)} available training rows"
        )
    eval_rows = [r for r in eval_rows if fid in r.atoms]
    if not eval_rows:
        raise DataError(f"no eval rows carry target {fid!r}")

    per_seed = []
    with no_grad():
        for seed in seeds:
            rng = np.random.default_rng(seed)
            nlls, truths, points = [], [], []
            for row in eval_rows:
                if shots:
                    picked = rng.choice(len(train_rows), size=shots, replace=False)
                    shot_rows = [train_rows[i].fully_observed() for i in picked]
                else:
                    shot_rows = []
                obs = (
                    {f: v for f, v in row.atoms.items() if f != fid}
                    if observed == "nontarget"
                    else {}
                )
                pred = model.predict(bundle, obs, [fid], shot_rows)[fid]
                truth = row.atoms[fid]
                if spec.ftype == CATEGORICAL:
                    nlls.append(-pred.log_prob(truth.index))
                    truths.append(truth.index)
                    points.append(pred.argmax)
                else:
                    nlls.append(-pred.log_density(truth.normalized))
                    truths.append(truth.raw)
                    points.append(pred.mean_raw)
            entry = {"seed": seed, "nll": float(np.mean(nlls))}
            if spec.ftype == CATEGORICAL:
                entry["f1"] = metric_f1(truths, points, n_classes=spec.n_choices)
            else:
                entry["rmse"] = metric_rmse(truths, points)
            per_seed.append(entry)

    metric_keys = [k for k in per_seed[0] if k != "seed"]
    return {
        "dataset": bundle.name,
        "target": fid,
        "shots": shots,
        "observed": observed,
        "seeds": seeds,
        "n_eval_rows": len(eval_rows),
        "config_digest": model.config_digest(),
        "per_seed": per_seed,
        "mean": {k: float(np.mean([e[k] for e in per_seed])) for k in metric_keys},
    }


def marginal_baseline_nll(
    model: Model,
    bundle: DatasetBundle,
    seeds,
    target_id: str | None = None,
    val_fraction: float = VAL_FRACTION,
    split_seed: int = 0,
) -> float:
    """Mean NLL of the target with every feature masked, zero shots."""
    report = eval_few_shot(
        model,
        bundle,
        shots=0,
        seeds=seeds,
        target_id=target_id,
        observed="none",
        val_fraction=val_fraction,
        split_seed=split_seed,
    )
    return report["mean"]["nll"]
