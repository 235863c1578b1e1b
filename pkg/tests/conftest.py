import numpy as np
import pytest

from tagflow.core.rng import RngStream
from tagflow.sim.collect import DataConfig, collect_demonstrations
from tagflow.sim.scene import SceneConfig


@pytest.fixture(scope="session")
def tiny_demos():
    """A small batch of expert episodes shared across test modules."""
    cfg = DataConfig(episodes=6)
    return collect_demonstrations(cfg, RngStream(1234).fork("demos"))


@pytest.fixture()
def rng():
    return RngStream(99)


def random_episode(seed: int):
    """One seeded expert episode on a small scene, for round-trip tests."""
    from tagflow.core.rng import RngStream
    from tagflow.sim.collect import run_expert_episode

    from tagflow.sim.scene import generate_scene

    root = RngStream(seed)
    cfg = DataConfig(episodes=1, sim=SceneConfig(distractors=2))
    scene = generate_scene(root.fork("scene"), cfg.sim)
    return run_expert_episode(scene, cfg, root, seed=seed)


def assert_images_equal(a: np.ndarray, b: np.ndarray):
    assert a.shape == b.shape
    assert np.array_equal(a, b)
