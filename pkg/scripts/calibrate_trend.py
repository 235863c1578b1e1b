"""Calibration harness for the directional campaign (not part of the package).

Builds one dataset + checkpoint per arm and prints the cells the trend
criteria look at, so training/eval defaults can be pinned empirically.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from tagflow.bench import build_config, parse_config_text, eval_cell, build_dataset, train_policy
from tagflow.bench.report import two_proportion_z
from tagflow.counterfact import BaselineKind


def run_arm(name: str, config_text: str, seeds=(0,), cells=("base", "tag", "over")):
    cfg = build_config(parse_config_text(config_text))
    for seed in seeds:
        t0 = time.time()
        build = build_dataset(cfg, seed)
        t_data = time.time() - t0
        t0 = time.time()
        params, curve, spec = train_policy(build, cfg, kind=BaselineKind.ERASE, seed=seed)
        t_train = time.time() - t0
        pairs = sum(len(e.steps) for e in build.episodes)
        print(
            f"[{name} seed {seed}] data {len(build.episodes)}ep/{pairs}pairs {t_data:.0f}s, "
            f"train loss {curve[0][1]:.3f}->{curve[-1][1]:.3f} {t_train:.0f}s"
        )
        t0 = time.time()
        rows = {}
        spec_cells = {
            "base": (BaselineKind.BACKGROUND, 1.0, None),
            "tag": (BaselineKind.BACKGROUND, 1.25, None),
            "over": (BaselineKind.BACKGROUND, 15.0, None),
            "black": (BaselineKind.BLACK, 1.25, None),
            "erase": (BaselineKind.ERASE, 1.25, None),
            "rtgray": (BaselineKind.REALTIME_MASK_GRAY, 1.25, None),
            "rtblack": (BaselineKind.REALTIME_MASK_BLACK, 1.25, None),
            "rterase": (BaselineKind.REALTIME_ERASE, 1.25, None),
        }
        for cell_name in cells:
            kind, w, jit = spec_cells[cell_name]
            res = eval_cell(
                params, spec, cfg, uncond=kind, w=w, train_kind=BaselineKind.ERASE, seed=seed,
                realtime_jitter=jit,
            )
            rows[cell_name] = res.row
            r = res.row
            print(
                f"    {cell_name:8s} w={w:<5} SR={r.sr:.3f} NM={r.near_miss:.3f} "
                f"WO={r.wrong_object:.3f} TO={r.timeout:.3f} PS={r.mean_ps:.3f}"
            )
        if "base" in rows and "tag" in rows:
            n = cfg.eval.episodes
            z = two_proportion_z(rows["tag"].sr, n, rows["base"].sr, n)
            print(
                f"    gain={rows['tag'].sr - rows['base'].sr:+.3f} z={z:.2f} "
                f"WO {rows['base'].wrong_object:.3f}->{rows['tag'].wrong_object:.3f} "
                f"eval {time.time()-t0:.0f}s"
            )


BASE = """
[data]
episodes = {episodes}
[train]
steps = {steps}
batch = {batch}
hidden = {hidden}
peak = {peak}
final = {final}
warmup = {warmup}
[eval]
episodes = {eval_episodes}
"""

if __name__ == "__main__":
    arm = sys.argv[1] if len(sys.argv) > 1 else "quick"
    if arm == "quick":
        run_arm(
            "quick 3k/128",
            BASE.format(
                episodes=200, steps=3000, batch=32, hidden="[128, 128]",
                peak=1e-3, final=1e-4, warmup=300, eval_episodes=100,
            ),
            cells=("base", "tag", "over"),
        )
    elif arm == "steps":
        for steps in (1500, 3000, 6000):
            run_arm(
                f"steps={steps}",
                BASE.format(
                    episodes=200, steps=steps, batch=32, hidden="[128, 128]",
                    peak=1e-3, final=1e-4, warmup=max(100, steps // 10), eval_episodes=100,
                ),
                cells=("base", "tag"),
            )
    elif arm == "full":
        run_arm(
            "full",
            BASE.format(
                episodes=200, steps=4000, batch=32, hidden="[128, 128]",
                peak=1e-3, final=1e-4, warmup=400, eval_episodes=200,
            ),
            cells=("base", "tag", "over", "black", "erase", "rtgray", "rtblack", "rterase"),
        )
