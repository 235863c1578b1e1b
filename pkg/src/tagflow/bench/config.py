"""Experiment configuration: a small TOML-subset file format.

Grammar (documented in the README): `#` comments, `[section]` headers,
and `key = value` lines where value is a quoted string, integer, float,
true/false, or a flat [v, v, ...] list of those. Unknown keys are
rejected so typos fail loudly with exit code 2.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass

from tagflow.counterfact.baselines import BaselineKind
from tagflow.counterfact.pipeline import PipelineConfig
from tagflow.errors import ConfigError
from tagflow.nn.optim import LrSchedule
from tagflow.policy.guidance import InferConfig, ReplanMode
from tagflow.policy.training import TrainConfig
from tagflow.sim.collect import DataConfig
from tagflow.sim.expert import ExpertConfig
from tagflow.sim.scene import SceneConfig

_KINDS = {
    "erase": BaselineKind.ERASE,
    "background": BaselineKind.BACKGROUND,
    "black": BaselineKind.BLACK,
    "rt_mask_gray": BaselineKind.REALTIME_MASK_GRAY,
    "rt_mask_black": BaselineKind.REALTIME_MASK_BLACK,
    "rt_erase": BaselineKind.REALTIME_ERASE,
}


@dataclass(frozen=True)
class EvalConfig:
    episodes: int = 200
    max_steps: int = 48
    scene_seed: int = 777
    train_seeds: tuple[int, ...] = (0, 1, 2)
    w_list: tuple[float, ...] = (1.0, 1.25, 1.3, 1.5, 1.8, 2.0, 3.0, 8.0, 15.0)
    realtime_jitter: float = 0.05
    near_miss_factor: float = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SceneConfig = field(default_factory=SceneConfig)
    data: DataConfig = field(default_factory=DataConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    infer: InferConfig = field(default_factory=InferConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _parse_scalar(token: str, lineno: int):
    token = token.strip()
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {token!r}") from None


def parse_config_text(text: str) -> dict[str, dict]:
    """Parse the TOML subset into {section: {key: value}}."""
    sections: dict[str, dict] = {}
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            current[key] = (
                [] if not inner else [_parse_scalar(tok, lineno) for tok in inner.split(",")]
            )
        else:
            current[key] = _parse_scalar(value, lineno)
    return sections


def _kind(name, lineno_hint: str) -> BaselineKind:
    if isinstance(name, BaselineKind):
        return name
    try:
        return _KINDS[str(name)]
    except KeyError:
        raise ConfigError(f"{lineno_hint}: unknown baseline kind {name!r}") from None


def build_config(sections: dict[str, dict]) -> ExperimentConfig:
    """Materialize the typed config, applying defaults for missing keys."""
    known = {"sim", "data", "pipeline", "train", "infer", "eval"}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")

    def take(section: str, cls, aliases: dict[str, str] | None = None, convert=None) -> dict:
        raw = dict(sections.get(section, {}))
        aliases = aliases or {}
        out = {}
        names = {f.name for f in fields(cls)}
        for key, value in raw.items():
            name = aliases.get(key, key)
            if name not in names:
                raise ConfigError(f"[{section}] unknown key {key!r}")
            if convert:
                value = convert(name, value)
            out[name] = value
        return out

    try:
        sim = SceneConfig(**take("sim", SceneConfig))
        expert_keys = {f.name for f in fields(ExpertConfig)}
        data_raw = dict(sections.get("data", {}))
        expert_kwargs = {k: data_raw.pop(k) for k in list(data_raw) if k in expert_keys}
        data_kwargs = {}
        for key, value in data_raw.items():
            if key not in {"episodes", "max_steps", "oversample"}:
                raise ConfigError(f"[data] unknown key {key!r}")
            data_kwargs[key] = value
        expert = ExpertConfig(
            **{**expert_kwargs, "a_max": sim.a_max, "r_grasp": sim.grasp_radius}
        )
        data = DataConfig(sim=sim, expert=expert, **data_kwargs)
        pipeline = PipelineConfig(**take("pipeline", PipelineConfig))

        train_raw = dict(sections.get("train", {}))
        sched_kwargs = {
            k: train_raw.pop(k) for k in ("warmup", "total", "peak", "final") if k in train_raw
        }
        if "steps" in train_raw and "total" not in sched_kwargs:
            sched_kwargs["total"] = train_raw["steps"]
        total = sched_kwargs.get("total", LrSchedule.total)
        if "warmup" not in sched_kwargs and total <= LrSchedule.warmup:
            sched_kwargs["warmup"] = max(1, total // 10)
        if "substitution" in train_raw:
            train_raw["substitution"] = _kind(train_raw["substitution"], "[train] substitution")
        if "hidden" in train_raw:
            train_raw["hidden"] = tuple(int(v) for v in train_raw["hidden"])
        allowed = {f.name for f in fields(TrainConfig)} - {"schedule"}
        bad = set(train_raw) - allowed
        if bad:
            raise ConfigError(f"[train] unknown keys {sorted(bad)}")
        train = TrainConfig(schedule=LrSchedule(**sched_kwargs), **train_raw)

        infer_raw = dict(sections.get("infer", {}))
        if "uncond" in infer_raw:
            infer_raw["uncond"] = _kind(infer_raw["uncond"], "[infer] uncond")
        if "replan" in infer_raw:
            try:
                infer_raw["replan"] = ReplanMode(infer_raw["replan"])
            except ValueError:
                raise ConfigError(f"[infer] unknown replan mode {infer_raw['replan']!r}") from None
        allowed = {f.name for f in fields(InferConfig)}
        bad = set(infer_raw) - allowed
        if bad:
            raise ConfigError(f"[infer] unknown keys {sorted(bad)}")
        infer = InferConfig(**infer_raw)

        eval_raw = dict(sections.get("eval", {}))
        for key in ("train_seeds", "w_list"):
            if key in eval_raw:
                eval_raw[key] = tuple(eval_raw[key])
        allowed = {f.name for f in fields(EvalConfig)}
        bad = set(eval_raw) - allowed
        if bad:
            raise ConfigError(f"[eval] unknown keys {sorted(bad)}")
        evaluation = EvalConfig(**eval_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    return ExperimentConfig(sim=sim, data=data, pipeline=pipeline, train=train, infer=infer, eval=evaluation)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text))


def _jsonable(value):
    if is_dataclass(value):
        return {k: _jsonable(v) for k, v in asdict(value).items()}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (BaselineKind, ReplanMode)):
        return value.value
    return value


def config_hash(cfg: ExperimentConfig) -> str:
    """Short stable hash of the effective config; whitespace-insensitive."""
    canon = json.dumps(_jsonable(cfg), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]
