"""Report emission: line-delimited data files plus SVG figure renders.

Every writer is deterministic for identical inputs: JSON is emitted
with sorted keys, and the SVG backend runs with a fixed hash salt and
no embedded timestamps, so re-running a seeded pipeline reproduces
report files byte for byte.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

matplotlib.rcParams["svg.hashsalt"] = "setinfer"


def _savefig(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_jsonl(records, path):
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def render_training_curve(curve, out_dir, stem="training_curve"):
    """Loss and validation NLL against step; data beside the figure."""
    os.makedirs(out_dir, exist_ok=True)
    data_path = os.path.join(out_dir, f"{stem}.jsonl")
    fig_path = os.path.join(out_dir, f"{stem}.svg")
    write_jsonl(curve, data_path)

    steps = [r["step"] for r in curve]
    losses = [r["loss"] for r in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, losses, lw=0.8, label="train loss")
    val = [(r["step"], r["val_nll"]) for r in curve if r.get("val_nll") is not None]
    if val:
        ax.plot(*zip(*val), marker="o", ms=3, lw=1.2, label="val nll")
    ax.set_xlabel("step")
    ax.set_ylabel("nats")
    ax.legend(frameon=False)
    fig.tight_layout()
    _savefig(fig, fig_path)
    return {"data": data_path, "figure": fig_path}


def render_afa_curve(result, out_dir, stem="afa_curve"):
    """Metric against acquisition count, the acquisition-curve figure."""
    os.makedirs(out_dir, exist_ok=True)
    data_path = os.path.join(out_dir, f"{stem}.jsonl")
    fig_path = os.path.join(out_dir, f"{stem}.svg")
    write_jsonl(result["steps"], data_path)

    metric = result["metric"]
    xs = [r["step"] for r in result["steps"]]
    ys = [r[metric] for r in result["steps"]]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(xs, ys, marker="o", ms=4)
    ax.set_xlabel("features acquired")
    ax.set_ylabel(metric)
    ax.set_xticks(xs)
    if metric == "f1":
        ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    _savefig(fig, fig_path)
    return {"data": data_path, "figure": fig_path}


def render_eval_report(report, out_dir, stem="eval"):
    """Per-seed metric dots with the mean line; JSON beside the figure."""
    os.makedirs(out_dir, exist_ok=True)
    data_path = os.path.join(out_dir, f"{stem}.json")
    fig_path = os.path.join(out_dir, f"{stem}.svg")
    write_json(report, data_path)

    keys = sorted(report["mean"])
    fig, axes = plt.subplots(1, len(keys), figsize=(3.2 * len(keys), 3.4))
    if len(keys) == 1:
        axes = [axes]
    for ax, key in zip(axes, keys):
        values = [e[key] for e in report["per_seed"]]
        ax.plot(range(len(values)), values, "o", ms=5)
        ax.axhline(report["mean"][key], lw=1.0, ls="--")
        ax.set_xticks(range(len(values)))
        ax.set_xticklabels([str(e["seed"]) for e in report["per_seed"]])
        ax.set_xlabel("seed")
        ax.set_title(key)
    fig.tight_layout()
    _savefig(fig, fig_path)
    return {"data": data_path, "figure": fig_path}
