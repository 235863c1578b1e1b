"""JSON-lines dataset files.

Line 1 is a manifest: {"version": 1, "img": [H, W, 3], "wrist": [h, w, 3],
"horizon": H, "classes": K}. Every following line is one episode with keys
seed, instruction, outcome, scenes, steps. Floats are serialized at full
round-trip precision, so save -> load -> save is byte identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from tagflow.core.types import Episode, Observation, Outcome, OutcomeKind, Step
from tagflow.errors import IoFailure, ParseFailure, VersionMismatch

FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetManifest:
    img: tuple[int, int, int] = (32, 32, 3)
    wrist: tuple[int, int, int] = (12, 12, 3)
    horizon: int = 8
    classes: int = 4

    def to_json(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "img": list(self.img),
            "wrist": list(self.wrist),
            "horizon": self.horizon,
            "classes": self.classes,
        }

    @staticmethod
    def from_json(data: dict) -> "DatasetManifest":
        return DatasetManifest(
            img=tuple(data["img"]),
            wrist=tuple(data["wrist"]),
            horizon=data["horizon"],
            classes=data["classes"],
        )

    @staticmethod
    def of_episodes(episodes: list[Episode]) -> "DatasetManifest":
        """Manifest derived from the first episode, defaults when empty."""
        if not episodes or not episodes[0].steps:
            return DatasetManifest()
        obs = episodes[0].steps[0].obs
        return DatasetManifest(
            img=obs.global_img.shape,
            wrist=obs.wrist_img.shape,
            horizon=episodes[0].steps[0].chunk.shape[0],
            classes=obs.instruction.shape[0],
        )


def _image_to_json(img: np.ndarray) -> list:
    return img.tolist()


def _obs_to_json(obs: Observation) -> dict:
    return {
        "global": _image_to_json(obs.global_img),
        "wrist": _image_to_json(obs.wrist_img),
        "proprio": obs.proprio.tolist(),
        "instruction": obs.instruction.tolist(),
    }


def _obs_from_json(data: dict) -> Observation:
    return Observation(
        global_img=np.asarray(data["global"], dtype=float),
        wrist_img=np.asarray(data["wrist"], dtype=float),
        proprio=np.asarray(data["proprio"], dtype=float),
        instruction=np.asarray(data["instruction"], dtype=float),
    )


def episode_to_json(episode: Episode) -> dict:
    from tagflow.sim.scene import scene_to_json

    outcome = None
    if episode.outcome is not None:
        outcome = {"kind": episode.outcome.kind.value, "ps": episode.outcome.ps}
    return {
        "seed": episode.seed,
        "instruction": episode.instruction,
        "outcome": outcome,
        "scenes": [scene_to_json(s) for s in episode.scenes],
        "steps": [
            {"obs": _obs_to_json(s.obs), "chunk": s.chunk.tolist(), "t": s.t}
            for s in episode.steps
        ],
    }


def episode_from_json(data: dict) -> Episode:
    from tagflow.sim.scene import scene_from_json

    outcome = None
    if data["outcome"] is not None:
        outcome = Outcome(OutcomeKind(data["outcome"]["kind"]), data["outcome"]["ps"])
    return Episode(
        seed=data["seed"],
        instruction=data["instruction"],
        scenes=[scene_from_json(s) for s in data["scenes"]],
        steps=[
            Step(_obs_from_json(s["obs"]), np.asarray(s["chunk"], dtype=float), s["t"])
            for s in data["steps"]
        ],
        outcome=outcome,
    )


def save_dataset(episodes: list[Episode], path, manifest: DatasetManifest | None = None) -> None:
    """Write episodes as JSON lines under a manifest header."""
    manifest = manifest or DatasetManifest.of_episodes(episodes)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest.to_json()) + "\n")
            for episode in episodes:
                fh.write(json.dumps(episode_to_json(episode)) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write dataset to {path}: {exc}") from exc


def load_dataset(path, with_manifest: bool = False):
    """Exact inverse of save_dataset.

    Raises ParseFailure with the offending 1-based line number, or
    VersionMismatch when the manifest version differs.
    """
    if not os.path.exists(path):
        raise IoFailure(f"dataset file not found: {path}")
    episodes: list[Episode] = []
    manifest: DatasetManifest | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseFailure(lineno, f"invalid JSON: {exc}") from exc
            if lineno == 1:
                if data.get("version") != FORMAT_VERSION:
                    raise VersionMismatch(
                        f"dataset version {data.get('version')!r}, expected {FORMAT_VERSION}"
                    )
                manifest = DatasetManifest.from_json(data)
                continue
            try:
                episodes.append(episode_from_json(data))
            except (KeyError, TypeError, IndexError, ValueError) as exc:
                raise ParseFailure(lineno, f"bad episode record: {exc}") from exc
    if manifest is None:
        raise ParseFailure(1, "missing manifest line")
    return (episodes, manifest) if with_manifest else episodes
