"""Closed-loop policy execution in the simulator.

At every replanning point the conditional observation is rendered from
the live scene while the unconditional global image comes from the
configured baseline kind: static kinds are computed once from the initial
scene and reused all episode, realtime kinds are recomputed per replan
and optionally corrupted with per-frame jitter (the stand-in for
inpainting artifacts).
"""

from __future__ import annotations

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.core.types import Episode, Step
from tagflow.counterfact.baselines import baseline_image, is_static
from tagflow.policy.guidance import InferConfig, ReplanMode, VelocityFn, integrate
from tagflow.sim.outcome import classify_outcome, delivery_event
from tagflow.sim.render import observe
from tagflow.sim.scene import Scene, SceneConfig, step


def rollout(
    model: VelocityFn,
    scene: Scene,
    infer: InferConfig,
    rng: RngStream,
    *,
    sim_cfg: SceneConfig,
    max_steps: int = 48,
    horizon: int = 8,
    seed: int = 0,
) -> Episode:
    """Run one episode and classify its outcome."""
    static_uncond = None
    if is_static(infer.uncond):
        static_uncond = baseline_image(scene, infer.uncond, img_size=sim_cfg.img_size)

    scenes = [scene]
    steps: list[Step] = []
    done = False
    k = 0
    while not done and len(scenes) - 1 < max_steps:
        obs = observe(scene, sim_cfg.classes, img_size=sim_cfg.img_size, wrist_size=sim_cfg.wrist_size)
        if static_uncond is not None:
            uncond_img = static_uncond
        else:
            uncond_img = baseline_image(scene, infer.uncond, img_size=sim_cfg.img_size)
            if infer.realtime_jitter > 0.0:
                noise_gen = rng.fork(f"jitter-{k}").generator()
                uncond_img = np.clip(
                    uncond_img + noise_gen.standard_normal(uncond_img.shape) * infer.realtime_jitter,
                    0.0,
                    1.0,
                )
        obs_uncond = obs.with_global(uncond_img)

        chunk = integrate(
            model,
            obs,
            obs_uncond,
            infer,
            rng.fork(f"noise-{k}"),
            horizon=horizon,
            a_max=sim_cfg.a_max,
        )
        steps.append(Step(obs, chunk, len(scenes) - 1))

        n_exec = horizon if infer.replan is ReplanMode.FULL_CHUNK else 1
        for action in chunk[:n_exec]:
            nxt = step(scene, action, a_max=sim_cfg.a_max, r_grasp=sim_cfg.grasp_radius)
            scenes.append(nxt)
            if delivery_event(scene, nxt):
                scene = nxt
                done = True
                break
            scene = nxt
            if len(scenes) - 1 >= max_steps:
                break
        k += 1

    episode = Episode(seed=seed, instruction=scene.target.cls, scenes=scenes, steps=steps)
    episode.outcome = classify_outcome(episode, r_grasp=sim_cfg.grasp_radius)
    return episode
