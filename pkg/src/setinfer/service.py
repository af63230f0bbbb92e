"""Read-only HTTP surface over prediction and acquisition sessions.

All success responses are serialized with sorted keys and compact
separators so identical state produces identical bytes. The model is
shared read-only; each session has its own lock and RNG, so distinct
sessions never contaminate each other.
"""

from __future__ import annotations

import hashlib
import json
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .afa import AfaConfig, AfaSession, acquire, new_session, predict_target, suggest_next
from .data import CATEGORICAL, DatasetBundle, denormalize, make_value
from .errors import DataError, SessionError
from .heads import CategoricalPrediction
from .model import Model

CURVE_POINTS = 129


def _json(payload, status_code=200) -> Response:
    return Response(
        content=json.dumps(payload, sort_keys=True, separators=(",", ":")),
        status_code=status_code,
        media_type="application/json",
    )


def _bad(field: str, message: str) -> HTTPException:
    return HTTPException(status_code=422, detail={"field": field, "message": message})


def wire_value(spec, value) -> object:
    if spec.ftype == CATEGORICAL:
        return spec.choices[value.index]
    return value.raw


def wire_prediction(pred) -> dict:
    """Wire summary: categorical bars in choice order, or a density curve
    over the raw-unit axis."""
    if isinstance(pred, CategoricalPrediction):
        return {
            "type": "categorical",
            "probs": [
                {"choice": c, "p": float(p)}
                for c, p in zip(pred.spec.choices, pred.probs)
            ],
            "argmax": pred.argmax_choice,
        }
    grid = np.linspace(0.0, 1.0, CURVE_POINTS)
    lo, hi = pred.spec.range
    density = np.exp(pred.log_density(grid)) / (hi - lo)
    return {
        "type": "continuous",
        "mean": float(pred.mean),
        "mean_raw": float(pred.mean_raw),
        "mixture": {
            "weights": [float(v) for v in pred.omega],
            "means": [float(v) for v in pred.mu],
            "scales": [float(v) for v in pred.sigma],
        },
        "curve": {
            "x": [float(denormalize(pred.spec, g)) for g in grid],
            "density": [float(d) for d in density],
        },
    }


def wire_schema(bundle: DatasetBundle) -> dict:
    return {
        "name": bundle.name,
        "context": bundle.context,
        "target_ids": list(bundle.target_ids),
        "n_rows": len(bundle.rows),
        "features": [
            {
                "id": f.id,
                "desc": f.desc,
                "type": f.ftype,
                "choices": list(f.choices),
                "range": list(f.range),
                "cost": f.cost,
            }
            for f in bundle.features
        ],
    }


def wire_session(sid: str, dataset: str, session: AfaSession, prediction) -> dict:
    suggestion = (
        {"stop": True}
        if session.last_suggestion is None
        else {
            "stop": False,
            "feature_id": session.last_suggestion.feature_id,
            "score": session.last_suggestion.score,
            "mi": session.last_suggestion.mi,
            "cost": session.last_suggestion.cost,
        }
    )
    bundle = session.bundle
    acquired = [
        {
            "feature_id": r["feature_id"],
            "value": wire_value(
                bundle.feature(r["feature_id"]), session.acquired[r["feature_id"]]
            ),
            "cost": r["cost"],
            "step": r["step"],
        }
        for r in session.history
    ]
    return {
        "session_id": sid,
        "dataset": dataset,
        "target": session.cfg.target_id,
        "phase": session.phase,
        "budget_initial": session.initial_budget,
        "budget_remaining": session.budget,
        "spent": session.spent(),
        "observed": {
            fid: wire_value(bundle.feature(fid), v)
            for fid, v in sorted(session.observed.items())
        },
        "acquired": acquired,
        "suggestion": suggestion,
        "prediction": wire_prediction(prediction),
        "history": session.history,
        "clamp_count": session.clamp_count,
    }


def build_app(model: Model, bundles: list, seed: int = 0) -> FastAPI:
    by_name = {}
    for b in bundles:
        if b.name in by_name:
            raise DataError(f"duplicate dataset name {b.name!r}")
        by_name[b.name] = b
    app = FastAPI(title="set-based inference service")
    # the console may be served from any static origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    state = {"counter": 0, "lock": threading.Lock()}
    sessions: dict[str, dict] = {}

    def session_rng(sid: str) -> np.random.Generator:
        key = int.from_bytes(
            hashlib.blake2b(f"svc:{seed}:{sid}".encode(), digest_size=8).digest(),
            "little",
        )
        return np.random.default_rng(key)

    def get_entry(sid: str) -> dict:
        entry = sessions.get(sid)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        return entry

    def get_bundle(name) -> DatasetBundle:
        if not isinstance(name, str) or name not in by_name:
            raise HTTPException(status_code=404, detail=f"unknown dataset {name!r}")
        return by_name[name]

    @app.get("/v1/schemas")
    def schemas():
        return _json([wire_schema(by_name[k]) for k in sorted(by_name)])

    @app.post("/v1/sessions")
    async def create_session(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise _bad("body", "expected a JSON object")
        bundle = get_bundle(body.get("dataset"))
        target = body.get("target")
        if not isinstance(target, str):
            raise _bad("target", "target feature id required")
        budget = body.get("budget")
        if not isinstance(budget, (int, float)) or isinstance(budget, bool):
            raise _bad("budget", "numeric budget required")
        observed = body.get("observed", {})
        if not isinstance(observed, dict):
            raise _bad("observed", "expected an object of feature values")
        try:
            cfg = AfaConfig(target_id=target, budget=float(budget))
            session = new_session(bundle, cfg, observed=observed)
        except DataError as e:
            raise _bad("session", str(e))
        with state["lock"]:
            state["counter"] += 1
            sid = f"s-{state['counter']:06d}"
        entry = {
            "session": session,
            "dataset": bundle.name,
            "lock": threading.Lock(),
            "rng": session_rng(sid),
        }
        sessions[sid] = entry
        with entry["lock"]:
            suggest_next(session, model, entry["rng"])
            prediction = predict_target(session, model)
            return _json(wire_session(sid, bundle.name, session, prediction))

    @app.get("/v1/sessions/{sid}")
    def get_session(sid: str):
        entry = get_entry(sid)
        with entry["lock"]:
            session = entry["session"]
            prediction = predict_target(session, model)
            return _json(wire_session(sid, entry["dataset"], session, prediction))

    @app.post("/v1/sessions/{sid}/values")
    async def submit_value(sid: str, request: Request):
        entry = get_entry(sid)
        body = await request.json()
        if not isinstance(body, dict):
            raise _bad("body", "expected a JSON object")
        fid = body.get("feature_id")
        if not isinstance(fid, str):
            raise _bad("feature_id", "feature id required")
        if "value" not in body:
            raise _bad("value", "value required")
        with entry["lock"]:
            session = entry["session"]
            try:
                acquire(session, fid, body["value"], model)
            except SessionError as e:
                raise HTTPException(status_code=409, detail=str(e))
            except DataError as e:
                raise _bad(fid, str(e))
            if session.phase == "active":
                suggest_next(session, model, entry["rng"])
            prediction = predict_target(session, model)
            return _json(wire_session(sid, entry["dataset"], session, prediction))

    @app.delete("/v1/sessions/{sid}")
    def delete_session(sid: str):
        get_entry(sid)
        del sessions[sid]
        return _json({"deleted": sid})

    @app.post("/v1/predict")
    async def predict(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise _bad("body", "expected a JSON object")
        bundle = get_bundle(body.get("dataset"))
        targets = body.get("targets")
        if not isinstance(targets, list) or not targets:
            raise _bad("targets", "non-empty list of feature ids required")
        observed_raw = body.get("observed", {})
        if not isinstance(observed_raw, dict):
            raise _bad("observed", "expected an object of feature values")
        shot_rows = body.get("shots", [])
        if not isinstance(shot_rows, list):
            raise _bad("shots", "expected a list of row indices")
        try:
            # canonical feature order so permuted request keys give
            # byte-identical responses
            observed = {}
            for fid in sorted(observed_raw):
                spec = bundle.feature(fid)
                observed[fid] = make_value(spec, observed_raw[fid], where="observed")
            shots = []
            for idx in shot_rows:
                if not isinstance(idx, int) or not 0 <= idx < len(bundle.rows):
                    raise DataError(f"shot row index {idx!r} out of range")
                shots.append(bundle.rows[idx].fully_observed())
            preds = model.predict(bundle, observed, targets, shots)
        except DataError as e:
            raise _bad("predict", str(e))
        return _json(
            {
                "dataset": bundle.name,
                "predictions": {
                    fid: wire_prediction(pred) for fid, pred in preds.items()
                },
            }
        )

    return app
