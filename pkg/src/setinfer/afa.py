"""Greedy cost-aware feature acquisition.

At each step the session scores every affordable unobserved feature by
estimated mutual information with the target, normalized by acquisition
cost, and suggests the argmax. MI is the expected KL between the target
posterior after seeing the candidate and the current posterior:

    I(v; y | obs) = E_{v ~ p(v | obs)} KL(p(y | obs, v) || p(y | obs))

Categorical candidates enumerate choices exactly; continuous candidates
are Monte Carlo averaged over draws from the predicted mixture. KL
between categorical targets is exact; between continuous targets it is
integrated on a fixed Simpson grid over the normalized interval.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, DatasetBundle, Value, denormalize, make_value
from .errors import DataError, SessionError
from .metrics import metric_f1, metric_rmse
from .model import Model

MI_GRID_POINTS = 1025
N_VALUE_DRAWS = 32
EPS_MI = 1e-3
_Q_FLOOR = 1e-300


@dataclass(frozen=True)
class AfaConfig:
    target_id: str
    budget: float
    n_value_draws: int = N_VALUE_DRAWS
    eps_mi: float = EPS_MI
    grid_points: int = MI_GRID_POINTS

    def __post_init__(self):
        if self.budget < 0:
            raise DataError("budget must be >= 0")
        if self.eps_mi < 0:
            raise DataError("eps_mi must be >= 0")
        if self.n_value_draws < 1:
            raise DataError("n_value_draws must be >= 1")
        if self.grid_points < 3 or self.grid_points % 2 == 0:
            raise DataError("grid_points must be odd and >= 3")


@dataclass(frozen=True)
class Suggestion:
    feature_id: str
    score: float  # mi / cost
    mi: float
    cost: float


@dataclass
class AfaSession:
    bundle: DatasetBundle
    cfg: AfaConfig
    acquired: dict = field(default_factory=dict)  # fid -> Value, costed
    observed: dict = field(default_factory=dict)  # fid -> Value, given for free
    budget: float = 0.0
    initial_budget: float = 0.0
    history: list = field(default_factory=list)
    phase: str = "active"
    clamp_count: int = 0
    last_suggestion: Suggestion | None = None

    @property
    def known(self) -> dict:
        out = dict(self.observed)
        out.update(self.acquired)
        return out

    def spent(self) -> float:
        return float(sum(r["cost"] for r in self.history))


def new_session(
    bundle: DatasetBundle, cfg: AfaConfig, observed: dict | None = None
) -> AfaSession:
    target = bundle.feature(cfg.target_id)  # raises DataError if unknown
    session = AfaSession(
        bundle=bundle, cfg=cfg, budget=cfg.budget, initial_budget=cfg.budget
    )
    for fid, raw in (observed or {}).items():
        spec = bundle.feature(fid)
        if fid == target.id:
            raise DataError(f"target {fid!r} cannot be pre-observed")
        session.observed[fid] = (
            raw if isinstance(raw, Value) else make_value(spec, raw, where="observed")
        )
    return session


def _simpson_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = 1.0 / (n - 1)
    return w * h / 3.0


def _kl(spec, post, prior, grid, weights) -> float:
    """KL(post || prior) between two predictions over the same target."""
    if spec.ftype == CATEGORICAL:
        p, q = post.probs, prior.probs
        mask = p > 0
        if np.array_equal(p, q):
            return 0.0
        return float(
            np.sum(p[mask] * (np.log(p[mask]) - np.log(np.maximum(q[mask], _Q_FLOOR))))
        )
    logp = post.log_density(grid)
    logq = prior.log_density(grid)
    if np.array_equal(logp, logq):
        return 0.0
    integrand = np.exp(logp) * (logp - logq)
    return float(np.sum(weights * integrand))


def estimate_mi(
    session: AfaSession, candidate: str, model: Model, rng: np.random.Generator
) -> float:
    """Expected information gain about the target from acquiring candidate."""
    cfg = session.cfg
    bundle = session.bundle
    cand_spec = bundle.feature(candidate)
    target_spec = bundle.feature(cfg.target_id)
    known = session.known
    if candidate == cfg.target_id:
        raise DataError("candidate equals the target")
    if candidate in known:
        raise DataError(f"candidate {candidate!r} already observed")
    if cfg.target_id in known:
        raise DataError(f"target {cfg.target_id!r} already observed")

    preds = model.predict(bundle, known, [cfg.target_id, candidate])
    prior, cand_pred = preds[cfg.target_id], preds[candidate]

    grid = weights = None
    if target_spec.ftype == CONTINUOUS:
        grid = np.linspace(0.0, 1.0, cfg.grid_points)
        weights = _simpson_weights(cfg.grid_points)

    if cand_spec.ftype == CATEGORICAL:
        values = [Value.cat(i) for i in range(cand_spec.n_choices)]
        w = cand_pred.probs
    else:
        draws, _ = cand_pred.sample(rng, cfg.n_value_draws)
        values = [
            Value(
                kind=CONTINUOUS,
                raw=denormalize(cand_spec, v),
                normalized=float(v),
            )
            for v in draws
        ]
        w = np.full(len(values), 1.0 / len(values))

    mi = 0.0
    for wi, val in zip(w, values):
        if wi == 0.0:
            continue
        obs = dict(known)
        obs[candidate] = val
        post = model.predict(bundle, obs, [cfg.target_id])[cfg.target_id]
        mi += float(wi) * _kl(target_spec, post, prior, grid, weights)
    if mi < 0.0:
        session.clamp_count += 1
        return 0.0
    return mi


def suggest_next(
    session: AfaSession, model: Model, rng: np.random.Generator
) -> Suggestion | None:
    """Highest MI-per-cost affordable candidate, or None meaning Stop.

    Stop terminates the session.
    """
    if session.phase != "active":
        raise SessionError("session already terminated")
    known = session.known
    candidates = [
        spec
        for spec in session.bundle.features
        if spec.id != session.cfg.target_id
        and spec.id not in known
        and spec.cost <= session.budget + 1e-12
    ]
    best = None
    for spec in sorted(candidates, key=lambda s: s.id):
        mi = estimate_mi(session, spec.id, model, rng)
        score = mi / spec.cost if spec.cost > 0 else float("inf") if mi > 0 else 0.0
        if best is None or score > best.score:
            best = Suggestion(feature_id=spec.id, score=score, mi=mi, cost=spec.cost)
    if best is None or best.score < session.cfg.eps_mi:
        session.phase = "terminated"
        session.last_suggestion = None
        return None
    session.last_suggestion = best
    return best


def acquire(
    session: AfaSession,
    feature_id: str,
    value,
    model: Model,
    mi_estimate: float | None = None,
) -> AfaSession:
    """Record a true value for a feature, pay its cost, log the step."""
    if session.phase != "active":
        raise SessionError("session already terminated")
    spec = session.bundle.feature(feature_id)
    if feature_id == session.cfg.target_id:
        raise DataError("cannot acquire the target")
    if feature_id in session.acquired or feature_id in session.observed:
        raise SessionError(f"feature {feature_id!r} already acquired")
    if spec.cost > session.budget + 1e-12:
        raise SessionError(
            f"insufficient budget: cost {spec.cost} > remaining {session.budget}"
        )
    val = value if isinstance(value, Value) else make_value(spec, value, where="acquire")
    if val.kind != spec.ftype:
        raise DataError(
            f"feature {feature_id!r} expects {spec.ftype}, got {val.kind}"
        )
    if mi_estimate is None and session.last_suggestion is not None:
        if session.last_suggestion.feature_id == feature_id:
            mi_estimate = session.last_suggestion.mi
    session.budget = float(session.budget - spec.cost)
    session.acquired[feature_id] = val
    prediction = predict_target(session, model)
    session.history.append(
        {
            "step": len(session.history) + 1,
            "feature_id": feature_id,
            "mi_estimate": mi_estimate,
            "cost": spec.cost,
            "prediction": prediction.summary(),
        }
    )
    session.last_suggestion = None
    if session.spent() > session.initial_budget + 1e-9:
        raise SessionError(
            f"budget safety violated: spent {session.spent()} "
            f"> initial {session.initial_budget}"
        )
    return session


def predict_target(session: AfaSession, model: Model):
    return model.predict(session.bundle, session.known, [session.cfg.target_id])[
        session.cfg.target_id
    ]


def write_session_log(session: AfaSession, path):
    with open(path, "w") as fh:
        for record in session.history:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def params_digest(params) -> str:
    h = hashlib.blake2b(digest_size=16)
    arrays = params.state_arrays()
    for name in sorted(arrays):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())
    return h.hexdigest()


def run_batch_afa(
    bundle: DatasetBundle,
    model: Model,
    cfg: AfaConfig,
    rng: np.random.Generator,
    rows=None,
):
    """Sequential acquisition on labeled rows, metric per acquisition count.

    Acquired values are read from each row; the target stays hidden.
    Returns {"steps": [{"step", metric, "mean_acquired"}...], "metric",
    "digest"} with the model verified untouched.
    """
    digest_before = params_digest(model.params)
    target_spec = bundle.feature(cfg.target_id)
    eval_rows = list(bundle.rows if rows is None else rows)
    eval_rows = [r for r in eval_rows if cfg.target_id in r.atoms]
    if not eval_rows:
        raise DataError("no labeled rows for batch acquisition")
    metric_name = "f1" if target_spec.ftype == CATEGORICAL else "rmse"

    per_row = []  # per row: list of predictions indexed by acquisition count
    truths = []
    for row in eval_rows:
        truth = row.atoms[cfg.target_id]
        truths.append(truth)
        session = new_session(bundle, cfg)
        preds = [predict_target(session, model)]
        while True:
            sug = suggest_next(session, model, rng)
            if sug is None:
                break
            if sug.feature_id not in row.atoms:
                raise DataError(
                    f"row missing value for suggested feature {sug.feature_id!r}"
                )
            acquire(session, sug.feature_id, row.atoms[sug.feature_id], model)
            preds.append(predict_target(session, model))
        per_row.append(preds)
    assert params_digest(model.params) == digest_before, "parameters changed"

    max_steps = max(len(p) for p in per_row) - 1
    steps = []
    for s in range(max_steps + 1):
        row_preds = [p[min(s, len(p) - 1)] for p in per_row]
        if metric_name == "f1":
            value = metric_f1(
                [t.index for t in truths],
                [p.argmax for p in row_preds],
                n_classes=target_spec.n_choices,
            )
        else:
            value = metric_rmse(
                [t.raw for t in truths], [p.mean_raw for p in row_preds]
            )
        steps.append(
            {
                "step": s,
                metric_name: value,
                "mean_acquired": float(
                    np.mean([min(s, len(p) - 1) for p in per_row])
                ),
            }
        )
    return {"metric": metric_name, "steps": steps, "digest": digest_before}
