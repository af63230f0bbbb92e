"""Command-line surface: synth, train, finetune, eval, afa, serve, inspect."""

import argparse
import json
import sys

import numpy as np

from . import checkpoint as ckpt
from .afa import AfaConfig, acquire, new_session, predict_target, run_batch_afa, \
    suggest_next, write_session_log
from .data import DatasetBundle, bundle_from_json, bundle_to_json, make_value
from .errors import SetinferError, DataError
from .evaluate import eval_few_shot
from .model import Model, build_model, desk_config, load_model
from .report import render_afa_curve, render_eval_report, render_training_curve
from .synth import FAMILIES, GeneratorSpec, synth_generate
from .train import TrainConfig, finetune, fit, load_state, save_state


def _load_json(path, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"{what} file not found: {path}")
    except json.JSONDecodeError as e:
        raise DataError(f"{what} file {path} is not valid JSON: {e}")


def _load_bundle(path) -> DatasetBundle:
    return bundle_from_json(_load_json(path, "dataset"), where=str(path))


def _configs(args) -> tuple:
    """Model and train configs: file sections overridden by explicit flags."""
    file_cfg = _load_json(args.config, "config") if args.config else {}
    for key in file_cfg:
        if key not in ("model", "train"):
            raise DataError(f"config file: unknown section {key!r}")
    model_over = dict(file_cfg.get("model", {}))
    train_over = dict(file_cfg.get("train", {}))
    model_cfg = desk_config(**model_over)
    train_over.setdefault("seed", args.seed)
    if args.precision:
        train_over["precision"] = args.precision
    for name in ("steps", "lr", "batch_size", "smax"):
        v = getattr(args, name, None)
        if v is not None:
            train_over[name] = v
    return model_cfg, TrainConfig(**train_over)


def _load_any_model(path) -> Model:
    """Accept either a bare model checkpoint or a full training state."""
    ck = ckpt.load_checkpoint(path)
    if ck.extra.get("kind") == "train_state":
        state = load_state(path, TrainConfig())
        return state.model
    return load_model(path)


# -- subcommands ---------------------------------------------------------


def cmd_synth(args) -> int:
    spec = GeneratorSpec(
        family=args.family, n_rows=args.rows, n_predictors=args.predictors,
        name=args.name or "",
    )
    bundle = synth_generate(spec, seed=args.seed)
    payload = json.dumps(bundle_to_json(bundle), sort_keys=True, indent=2) + "\n"
    with open(args.out, "w") as fh:
        fh.write(payload)
    print(f"wrote {args.out}: {bundle.name} ({len(bundle.rows)} rows, "
          f"{len(bundle.features)} features)")
    return 0


def cmd_train(args) -> int:
    model_cfg, train_cfg = _configs(args)
    bundles = [_load_bundle(p) for p in args.data]
    model = build_model(model_cfg, seed=args.seed)
    curve_path = None
    if args.report:
        import os
        os.makedirs(args.report, exist_ok=True)
        curve_path = os.path.join(args.report, "training_curve.jsonl")
    state, curve = fit(model, bundles, train_cfg, curve_path=curve_path)
    save_state(state, args.out)
    if args.report:
        paths = render_training_curve(curve, args.report)
        print(f"report: {paths['data']} {paths['figure']}")
    final = [r for r in curve if r.get("val_nll") is not None]
    val = final[-1]["val_nll"] if final else float("nan")
    print(f"trained {train_cfg.steps} steps; mean loss {state.mean_loss:.4f}; "
          f"val nll {val:.4f}; checkpoint {args.out}")
    return 0


def cmd_finetune(args) -> int:
    _, train_cfg = _configs(args)
    state = load_state(args.checkpoint, train_cfg)
    bundle = _load_bundle(args.data)
    finetune(state, bundle, train_cfg, expect_digest=args.expect_digest)
    save_state(state, args.out)
    print(f"finetuned {train_cfg.steps} steps on {bundle.name}; "
          f"checkpoint {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = _load_any_model(args.checkpoint)
    bundle = _load_bundle(args.data)
    seeds = [args.seed + i for i in range(args.seeds)]
    report = eval_few_shot(
        model, bundle, shots=args.shots, seeds=seeds, target_id=args.target,
    )
    line = " ".join(f"{k}={v:.6f}" for k, v in sorted(report["mean"].items()))
    print(f"{bundle.name} target={report['target']} shots={args.shots} "
          f"seeds={args.seeds}: {line}")
    if args.report:
        paths = render_eval_report(report, args.report)
        print(f"report: {paths['data']} {paths['figure']}")
    return 0


def _parse_cli_value(spec, text: str):
    if spec.ftype == "categorical":
        return make_value(spec, text, where="afa")
    try:
        raw = float(text)
    except ValueError:
        raise DataError(f"afa: feature {spec.id!r} expects a number, got {text!r}")
    return make_value(spec, raw, where="afa")


def _interactive_afa(model, bundle, cfg, rng, log_path=None) -> int:
    session = new_session(bundle, cfg)
    print(f"dataset {bundle.name} | target {cfg.target_id} | budget {cfg.budget}")
    while session.phase == "active":
        suggestion = suggest_next(session, model, rng)
        if suggestion is None:
            break
        spec = bundle.feature(suggestion.feature_id)
        hint = "/".join(spec.choices) if spec.ftype == "categorical" \
            else f"{spec.range[0]}..{spec.range[1]}"
        print(f"suggest {suggestion.feature_id} ({spec.desc}) "
              f"mi={suggestion.mi:.4f} cost={suggestion.cost} "
              f"budget={session.budget}")
        try:
            text = input(f"{suggestion.feature_id} [{hint}]> ").strip()
        except EOFError:
            print("eof; stopping")
            break
        if text in ("", "quit", "stop"):
            break
        try:
            value = _parse_cli_value(spec, text)
            acquire(session, suggestion.feature_id, value, model,
                    mi_estimate=suggestion.mi)
        except SetinferError as e:
            print(f"rejected: {e}")
            continue
        print(f"prediction: {json.dumps(predict_target(session, model).summary(), sort_keys=True)}")
    print(f"done after {len(session.history)} acquisitions, "
          f"spent {session.spent()} of {session.initial_budget}")
    print(f"final: {json.dumps(predict_target(session, model).summary(), sort_keys=True)}")
    if log_path:
        write_session_log(session, log_path)
        print(f"session log: {log_path}")
    return 0


def cmd_afa(args) -> int:
    model = _load_any_model(args.checkpoint)
    bundle = _load_bundle(args.data)
    target = args.target or bundle.target_ids[0]
    cfg = AfaConfig(target_id=target, budget=args.budget)
    rng = np.random.default_rng(args.seed)
    if args.interactive:
        return _interactive_afa(model, bundle, cfg, rng, log_path=args.session_log)
    result = run_batch_afa(bundle, model, cfg, rng)
    paths = render_afa_curve(result, args.report)
    last = result["steps"][-1]
    print(f"{bundle.name} target={target} budget={args.budget} "
          f"metric={result['metric']}: step {last['step']} -> {last[result['metric']]:.4f}")
    print(f"report: {paths['data']} {paths['figure']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    model = _load_any_model(args.checkpoint)
    bundles = [_load_bundle(p) for p in args.data]
    app = build_app(model, bundles, seed=args.seed)
    print(f"serving {len(bundles)} schema(s) on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_inspect(args) -> int:
    path = args.path
    if str(path).endswith(".jsonl"):
        with open(path) as fh:
            lines = [json.loads(ln) for ln in fh if ln.strip()]
        print(f"{path}: {len(lines)} records")
        if lines:
            print(f"first: {json.dumps(lines[0], sort_keys=True)}")
            print(f"last:  {json.dumps(lines[-1], sort_keys=True)}")
        return 0
    if str(path).endswith(".json"):
        obj = _load_json(path, "report")
        if "rows" in obj and "features" in obj:
            bundle = bundle_from_json(obj, where=str(path))
            print(f"{path}: dataset {bundle.name}, {len(bundle.rows)} rows")
            for spec in bundle.features:
                kind = "/".join(spec.choices) if spec.ftype == "categorical" \
                    else f"[{spec.range[0]}, {spec.range[1]}]"
                print(f"  {spec.id} ({spec.ftype}, cost {spec.cost}): {kind}")
        else:
            print(json.dumps(obj, sort_keys=True, indent=2))
        return 0
    ck = ckpt.load_checkpoint(path)
    kind = ck.extra.get("kind", "model")
    print(f"{path}: {kind} checkpoint, config digest {ck.digest[:16]}")
    print(f"config: {json.dumps(ck.config, sort_keys=True)}")
    n_params = sum(int(np.prod(a.shape)) for n, a in ck.arrays.items()
                   if not n.startswith("opt."))
    print(f"arrays: {len(ck.arrays)} ({n_params} model parameters)")
    for key in ("step", "loss_sum", "loss_count"):
        if key in ck.extra:
            print(f"{key}: {ck.extra[key]}")
    return 0


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="setinfer",
        description="Set-based few-shot inference over tabular schemas.",
    )
    p.add_argument("--seed", type=int, default=0, help="global RNG seed")
    p.add_argument("--config", default=None, help="JSON config file (model/train sections)")
    p.add_argument("--precision", choices=("f64", "f32"), default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset bundle")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--rows", type=int, default=200)
    s.add_argument("--predictors", type=int, default=3)
    s.add_argument("--name", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train a model on dataset bundles")
    s.add_argument("--data", required=True, nargs="+")
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--lr", type=float, default=None)
    s.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    s.add_argument("--smax", type=int, default=None)
    s.add_argument("--report", default=None, help="directory for curve data + figure")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("finetune", help="continue training on one bundle")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--lr", type=float, default=None)
    s.add_argument("--expect-digest", default=None, dest="expect_digest")
    s.set_defaults(func=cmd_finetune)

    s = sub.add_parser("eval", help="few-shot evaluation")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--shots", type=int, default=0)
    s.add_argument("--seeds", type=int, default=3, help="number of seeds")
    s.add_argument("--target", default=None)
    s.add_argument("--report", default=None, help="directory for report data + figure")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("afa", help="active feature acquisition")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--target", default=None)
    s.add_argument("--budget", type=float, required=True)
    s.add_argument("--report", default="afa-report",
                   help="directory for curve data + figure (batch mode)")
    s.add_argument("--interactive", action="store_true",
                   help="terminal acquisition session")
    s.add_argument("--session-log", default=None, dest="session_log")
    s.set_defaults(func=cmd_afa)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True, nargs="+")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8321)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("inspect", help="dump a checkpoint, dataset, or report")
    s.add_argument("path")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SetinferError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
