"""Command-line experiment harness.

Subcommands: gen-data, train, eval, sweep-w, ablate-grid, ablate-realtime,
saliency. Each reads --config (TOML-subset, every key optional), an
optional --seed override, and writes its outputs under --out. Exit codes:
0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from tagflow import errors
from tagflow.bench import campaigns
from tagflow.bench.config import ExperimentConfig, config_hash, load_config
from tagflow.bench.report import export_report
from tagflow.bench.saliency import saliency, tag_saliency
from tagflow.bench.svg import heatmap, line_chart
from tagflow.core.dataset import load_dataset, save_dataset
from tagflow.core.rng import RngStream
from tagflow.counterfact.baselines import BaselineKind
from tagflow.counterfact.cache import InstructionCache
from tagflow.nn.checkpoint import load_checkpoint, save_checkpoint
from tagflow.policy.encode import EncodeSpec
from tagflow.sim.render import observe
from tagflow.sim.scene import generate_scene

_DATA_ERRORS = (
    errors.DataFailure,
    errors.IoFailure,
    errors.ParseFailure,
    errors.VersionMismatch,
    errors.DegenerateEpisode,
    errors.PlacementFailure,
)
_NUMERIC_ERRORS = (errors.NonFiniteGradient, errors.NonFiniteLoss, errors.NonFiniteState)


def _spec_for(cfg: ExperimentConfig) -> EncodeSpec:
    return EncodeSpec(
        img=(cfg.sim.img_size, cfg.sim.img_size, 3),
        wrist=(cfg.sim.wrist_size, cfg.sim.wrist_size, 3),
        classes=cfg.sim.classes,
        horizon=cfg.data.expert.horizon,
    )


def _write_erased(path, build: campaigns.DatasetBuild, img_size: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"version": 1, "img": [img_size, img_size, 3]}) + "\n")
        for episode, frames in zip(build.episodes, build.erased):
            fh.write(
                json.dumps({"seed": episode.seed, "frames": [f.tolist() for f in frames]}) + "\n"
            )


def _read_erased(path) -> dict[int, list[np.ndarray]]:
    out: dict[int, list[np.ndarray]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise errors.ParseFailure(lineno, f"invalid JSON: {exc}") from exc
            if lineno == 1:
                if data.get("version") != 1:
                    raise errors.VersionMismatch(f"erased sidecar version {data.get('version')!r}")
                continue
            out[data["seed"]] = [np.asarray(f, dtype=float) for f in data["frames"]]
    return out


def cmd_gen_data(cfg: ExperimentConfig, out: str, seed: int) -> int:
    cache = InstructionCache(os.path.join(out, "cache.json"))
    build = campaigns.build_dataset(cfg, seed, cache=cache)
    save_dataset(build.episodes, os.path.join(out, "dataset.jsonl"))
    _write_erased(os.path.join(out, "erased.jsonl"), build, cfg.sim.img_size)
    with open(os.path.join(out, "audit.jsonl"), "w", encoding="utf-8") as fh:
        for record in build.records:
            fh.write(json.dumps(record.to_json()) + "\n")
    kept, total = len(build.episodes), len(build.records)
    print(f"gen-data: kept {kept}/{total} episodes, audit log {total} records")
    return 0


def cmd_train(cfg: ExperimentConfig, out: str, seed: int | None) -> int:
    episodes = load_dataset(os.path.join(out, "dataset.jsonl"))
    erased_by_seed = _read_erased(os.path.join(out, "erased.jsonl"))
    build = campaigns.DatasetBuild(
        episodes, [erased_by_seed[ep.seed] for ep in episodes], [], None
    )
    params, curve, spec = campaigns.train_policy(build, cfg, seed=seed)
    meta = {
        "encode": {
            "img": list(spec.img),
            "wrist": list(spec.wrist),
            "classes": spec.classes,
            "horizon": spec.horizon,
        },
        "config_hash": config_hash(cfg),
    }
    save_checkpoint(params, os.path.join(out, "ckpt.jsonl"), meta)
    with open(os.path.join(out, "curve.csv"), "w", encoding="utf-8") as fh:
        fh.write("step,loss,lr\n")
        for s, loss, lr in curve:
            fh.write(f"{s},{loss!r},{lr!r}\n")
    print(f"train: {cfg.train.steps} steps, final loss {curve[-1][1]:.6f}")
    return 0


def _load_ckpt(cfg: ExperimentConfig, out: str):
    params, meta = load_checkpoint(os.path.join(out, "ckpt.jsonl"))
    enc = meta.get("encode")
    if enc:
        spec = EncodeSpec(tuple(enc["img"]), tuple(enc["wrist"]), enc["classes"], enc["horizon"])
    else:
        spec = _spec_for(cfg)
    return params, spec


def cmd_eval(cfg: ExperimentConfig, out: str, seed: int) -> int:
    params, spec = _load_ckpt(cfg, out)
    cell = campaigns.eval_cell(
        params,
        spec,
        cfg,
        uncond=cfg.infer.uncond,
        w=cfg.infer.w,
        train_kind=cfg.train.substitution,
        seed=seed,
    )
    export_report([cell.row], os.path.join(out, "report.csv"))
    print(f"eval: SR={cell.row.sr:.3f} wrong_object={cell.row.wrong_object:.3f}")
    return 0


def cmd_sweep_w(cfg: ExperimentConfig, out: str, seed: int) -> int:
    params, spec = _load_ckpt(cfg, out)
    rows, degraded = campaigns.run_sweep(
        params, spec, cfg, train_kind=cfg.train.substitution, seed=seed
    )
    export_report(rows, os.path.join(out, "report.csv"))
    line_chart(
        [(row.w, row.sr) for row in rows],
        os.path.join(out, "curves.svg"),
        title="success rate vs guidance scale",
        xlabel="w",
        ylabel="SR",
        log_x=True,
    )
    print(f"sweep-w: {len(rows)} scales, over-guidance degradation={'yes' if degraded else 'no'}")
    return 0


def cmd_ablate_grid(cfg: ExperimentConfig, out: str, seed: int) -> int:
    episodes = load_dataset(os.path.join(out, "dataset.jsonl"))
    erased_by_seed = _read_erased(os.path.join(out, "erased.jsonl"))
    build = campaigns.DatasetBuild(
        episodes, [erased_by_seed[ep.seed] for ep in episodes], [], None
    )
    rows = campaigns.run_grid(build, cfg, seed=seed)
    best = max(rows, key=lambda r: r.sr)
    export_report(rows, os.path.join(out, "report.csv"), highlight=best)
    print(f"ablate-grid: best cell {best.train_kind}/{best.eval_kind} SR={best.sr:.3f}")
    return 0


def cmd_ablate_realtime(cfg: ExperimentConfig, out: str, seed: int) -> int:
    params, spec = _load_ckpt(cfg, out)
    rows = campaigns.run_realtime(params, spec, cfg, train_kind=cfg.train.substitution, seed=seed)
    export_report(rows, os.path.join(out, "report.csv"))
    static = [r.sr for r in rows[:2]]
    realtime = [r.sr for r in rows[2:]]
    print(
        f"ablate-realtime: static mean SR={sum(static) / 2:.3f}, "
        f"realtime mean SR={sum(realtime) / 3:.3f}"
    )
    return 0


def cmd_saliency(cfg: ExperimentConfig, out: str, seed: int) -> int:
    params, spec = _load_ckpt(cfg, out)
    heat_dir = os.path.join(out, "heatmaps")
    os.makedirs(heat_dir, exist_ok=True)
    root = RngStream(seed)
    scene = generate_scene(root.fork("scene"), cfg.sim)
    obs = observe(scene, cfg.sim.classes, img_size=cfg.sim.img_size, wrist_size=cfg.sim.wrist_size)
    from tagflow.counterfact.baselines import baseline_image

    obs_uncond = obs.with_global(
        baseline_image(scene, cfg.infer.uncond, img_size=cfg.sim.img_size)
    )
    chunk = root.fork("chunk").generator().standard_normal((spec.horizon, 3))
    cond = saliency(params, spec, obs, chunk, 1.0, use_ema=cfg.infer.use_ema)
    tag = tag_saliency(
        params, spec, obs, obs_uncond, chunk, 1.0, cfg.infer.w, use_ema=cfg.infer.use_ema
    )
    heatmap(cond, os.path.join(heat_dir, "cond.svg"), title="conditional branch saliency")
    heatmap(tag, os.path.join(heat_dir, "tag.svg"), title=f"guided saliency (w={cfg.infer.w})")
    print(f"saliency: wrote {heat_dir}/cond.svg and {heat_dir}/tag.svg")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tagflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "gen-data",
        "train",
        "eval",
        "sweep-w",
        "ablate-grid",
        "ablate-realtime",
        "saliency",
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="TOML-subset config file")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default="out", help="output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    seed = args.seed
    handlers = {
        "gen-data": lambda: cmd_gen_data(cfg, args.out, 0 if seed is None else seed),
        "train": lambda: cmd_train(cfg, args.out, seed),
        "eval": lambda: cmd_eval(cfg, args.out, 0 if seed is None else seed),
        "sweep-w": lambda: cmd_sweep_w(cfg, args.out, 0 if seed is None else seed),
        "ablate-grid": lambda: cmd_ablate_grid(cfg, args.out, 0 if seed is None else seed),
        "ablate-realtime": lambda: cmd_ablate_realtime(cfg, args.out, 0 if seed is None else seed),
        "saliency": lambda: cmd_saliency(cfg, args.out, 0 if seed is None else seed),
    }
    try:
        return handlers[args.command]()
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
