"""Expert demonstration collection.

Episodes are rolled out chunk by chunk (the same cadence the policy uses
at inference), recording an (observation, planned chunk) pair at every
replanning point and a scene snapshot at every environment tick. Only
successful episodes are retained.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from tagflow.core.rng import RngStream
from tagflow.core.types import Episode, Step
from tagflow.errors import DataFailure
from tagflow.sim.expert import ExpertConfig, expert_chunk
from tagflow.sim.outcome import classify_outcome, delivery_event
from tagflow.sim.render import observe
from tagflow.sim.scene import Scene, SceneConfig, generate_scene, step


@dataclass(frozen=True)
class DataConfig:
    episodes: int = 200
    max_steps: int = 48
    oversample: int = 10
    sim: SceneConfig = field(default_factory=SceneConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)


def run_expert_episode(scene: Scene, cfg: DataConfig, rng: RngStream, seed: int) -> Episode:
    """Roll the expert until delivery or cfg.max_steps environment ticks."""
    sim_cfg, exp_cfg = cfg.sim, cfg.expert
    scenes = [scene]
    steps: list[Step] = []
    done = False
    k = 0
    while not done and len(scenes) - 1 < cfg.max_steps:
        obs = observe(scene, sim_cfg.classes, img_size=sim_cfg.img_size, wrist_size=sim_cfg.wrist_size)
        chunk = expert_chunk(scene, exp_cfg, rng.fork(f"chunk-{k}"))
        steps.append(Step(obs, chunk, len(scenes) - 1))
        for action in chunk:
            nxt = step(scene, action, a_max=sim_cfg.a_max, r_grasp=sim_cfg.grasp_radius)
            scenes.append(nxt)
            if delivery_event(scene, nxt):
                scene = nxt
                done = True
                break
            scene = nxt
            if len(scenes) - 1 >= cfg.max_steps:
                break
        k += 1
    episode = Episode(seed=seed, instruction=scene.target.cls, scenes=scenes, steps=steps)
    episode.outcome = classify_outcome(episode, r_grasp=sim_cfg.grasp_radius)
    return episode


def collect_demonstrations(cfg: DataConfig, rng: RngStream) -> list[Episode]:
    """Collect cfg.episodes successful expert episodes.

    Candidates are drawn from per-index forked streams, so retained
    episodes are reproducible regardless of how many were rejected.
    Raises DataFailure if the oversampling budget runs out.
    """
    if cfg.episodes <= 0:
        raise ValueError("cfg.episodes must be positive")
    retained: list[Episode] = []
    budget = cfg.oversample * cfg.episodes
    from tagflow.core.types import OutcomeKind

    for cand in range(budget):
        if len(retained) >= cfg.episodes:
            break
        ep_rng = rng.fork(f"ep-{cand}")
        scene = generate_scene(ep_rng.fork("scene"), cfg.sim)
        episode = run_expert_episode(scene, cfg, ep_rng, seed=cand)
        if episode.outcome.kind is OutcomeKind.SUCCESS:
            retained.append(episode)
    if len(retained) < cfg.episodes:
        raise DataFailure(
            f"retained {len(retained)}/{cfg.episodes} episodes after {budget} rollouts"
        )
    return retained
