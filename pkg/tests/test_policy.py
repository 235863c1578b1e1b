import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagflow.core.rng import RngStream
from tagflow.counterfact import BaselineKind
from tagflow.errors import NonFiniteState, ShapeMismatch
from tagflow.nn import LrSchedule
from tagflow.policy import (
    EncodeSpec,
    InferConfig,
    ReplanMode,
    TrainConfig,
    corrupt,
    encode,
    fm_loss,
    integrate,
    make_velocity_fn,
    rollout,
    tag_velocity,
    target_velocity,
    tau_features,
    train,
)
from tagflow.policy.training import flatten_pairs
from tagflow.sim import SceneConfig, generate_scene, observe


SPEC = EncodeSpec()


@pytest.fixture(scope="module")
def sample_obs():
    scene = generate_scene(RngStream(0).fork("s"), SceneConfig())
    return observe(scene, 4)


class TestEncode:
    def test_input_length(self, sample_obs):
        chunk = np.zeros((8, 3))
        row = encode(SPEC, sample_obs, chunk, 0.5)
        assert row.shape == (32 * 32 * 3 + 12 * 12 * 3 + 3 + 4 + 8 * 3 + 3,)
        assert SPEC.input_dim == row.shape[0]

    def test_equal_observations_equal_encodings(self, sample_obs):
        chunk = np.ones((8, 3)) * 0.01
        a = encode(SPEC, sample_obs, chunk, 0.25)
        b = encode(SPEC, sample_obs, chunk, 0.25)
        assert np.array_equal(a, b)

    def test_instruction_permutation_touches_k_coordinates(self, sample_obs):
        chunk = np.zeros((8, 3))
        base = encode(SPEC, sample_obs, chunk, 0.0)
        rolled = sample_obs.with_global(sample_obs.global_img)
        rolled = type(sample_obs)(
            sample_obs.global_img,
            sample_obs.wrist_img,
            sample_obs.proprio,
            np.roll(sample_obs.instruction, 1),
        )
        other = encode(SPEC, rolled, chunk, 0.0)
        assert (base != other).sum() == 2  # one-hot moved: two coords changed

    def test_tau_features(self):
        assert np.allclose(tau_features(0.0), [0.0, 0.0, 1.0])
        assert np.allclose(tau_features(0.25), [0.25, 1.0, 0.0], atol=1e-12)

    def test_shape_mismatch(self, sample_obs):
        with pytest.raises(ShapeMismatch):
            encode(SPEC, sample_obs, np.zeros((4, 3)), 0.0)


class TestFlowAlgebra:
    def test_corrupt_endpoints(self):
        gen = RngStream(1).fork("x").generator()
        chunk = gen.standard_normal((8, 3))
        eps = gen.standard_normal((8, 3))
        assert np.array_equal(corrupt(chunk, 0.0, eps), chunk)
        assert np.array_equal(corrupt(chunk, 1.0, eps), eps)

    def test_corrupt_midpoint(self):
        assert corrupt(np.array([[2.0, 0, 0]] * 8), 0.5, np.zeros((8, 3)))[0, 0] == 1.0

    def test_velocity_special_cases(self):
        gen = RngStream(2).fork("x").generator()
        a = gen.standard_normal((8, 3))
        assert not target_velocity(a, a).any()
        assert np.array_equal(target_velocity(np.zeros((8, 3)), a), a)

    def test_integration_identity_over_1000_draws(self):
        # x_tau - tau * u == x0 for every (x0, eps, tau)
        gen = RngStream(3).fork("x").generator()
        for _ in range(1000):
            chunk = gen.standard_normal((8, 3))
            eps = gen.standard_normal((8, 3))
            tau = float(gen.random())
            x_tau = corrupt(chunk, tau, eps)
            u = target_velocity(chunk, eps)
            assert np.abs(x_tau - tau * u - chunk).max() < 1e-12

    @given(st.floats(0.0, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_corrupt_affine_property(self, tau):
        gen = RngStream(4).fork("x").generator()
        chunk = gen.standard_normal((8, 3))
        eps = gen.standard_normal((8, 3))
        x = corrupt(chunk, tau, eps)
        assert np.abs(x - (tau * eps + (1 - tau) * chunk)).max() == 0.0


class TestFmLoss:
    def make_params(self, hidden=(16,)):
        from tagflow.nn import MlpSpec, init_params

        spec = MlpSpec((SPEC.input_dim, *hidden, SPEC.horizon * 3))
        return init_params(spec, RngStream(0).fork("i"))

    def test_zero_loss_for_oracle_predictor(self, sample_obs, tiny_demos):
        # replay the generator draws to compute the oracle's target exactly
        params = self.make_params()
        batch = [(sample_obs, tiny_demos[0].steps[0].chunk)]
        probe = RngStream(9).fork("loss").generator()
        taus = probe.random(1)
        noises = probe.standard_normal((1, 8, 3))
        x_tau = corrupt(batch[0][1], taus[0], noises[0])
        row = encode(SPEC, sample_obs, x_tau, taus[0])
        target = target_velocity(batch[0][1], noises[0]).ravel()

        # build params that reproduce the target for this single row: zero
        # weights, bias = target, so prediction == target identically
        from tagflow.nn import MlpSpec, init_params

        lin = init_params(MlpSpec((SPEC.input_dim, SPEC.horizon * 3)), RngStream(0).fork("z"))
        lin.weights[0][:] = 0.0
        lin.biases[0][:] = target
        loss, grads = fm_loss(lin, SPEC, batch, RngStream(9).fork("loss").generator())
        assert loss == pytest.approx(0.0, abs=1e-24)
        assert all(not g.any() for g in grads.w)

    def test_zero_predictor_loss_matches_recomputed_draws(self, sample_obs, tiny_demos):
        params = self.make_params()
        for w in params.weights:
            w[:] = 0.0
        for b in params.biases:
            b[:] = 0.0
        batch = [(sample_obs, tiny_demos[0].steps[0].chunk)] * 3
        loss, _ = fm_loss(params, SPEC, batch, RngStream(11).fork("loss").generator())
        probe = RngStream(11).fork("loss").generator()
        taus = probe.random(3)
        noises = probe.standard_normal((3, 8, 3))
        expected = np.mean(
            [target_velocity(batch[i][1], noises[i]) ** 2 for i in range(3)]
        )
        assert loss == pytest.approx(expected, rel=1e-12)

    def test_gradients_match_finite_differences(self, sample_obs, tiny_demos):
        # 2-sample batch, full-loss finite differences
        params = self.make_params(hidden=(6,))
        pairs = flatten_pairs(tiny_demos[:1])[:2]
        batch = [(sample_obs, pairs[0][1]), (sample_obs, pairs[1][1])]

        def loss_at():
            return fm_loss(params, SPEC, batch, RngStream(5).fork("fd").generator())

        loss, grads = loss_at()
        gen = RngStream(6).fork("pick").generator()
        h = 1e-5
        checked = 0
        for tensor, grad in ((params.weights[0], grads.w[0]), (params.weights[1], grads.w[1]), (params.biases[0], grads.b[0])):
            flat_idx = gen.integers(0, tensor.size, size=8)
            for idx in flat_idx:
                orig = tensor.flat[idx]
                tensor.flat[idx] = orig + h
                up, _ = loss_at()
                tensor.flat[idx] = orig - h
                down, _ = loss_at()
                tensor.flat[idx] = orig
                numeric = (up - down) / (2 * h)
                if abs(numeric) < 1e-10:
                    continue
                assert abs(grad.flat[idx] - numeric) / max(abs(numeric), 1e-8) < 1e-4
                checked += 1
        assert checked >= 12


def constant_model(velocity):
    def model(obs, chunk, tau):
        return velocity

    return model


class TestTagVelocity:
    def test_w_one_is_conditional_bitwise(self, sample_obs, tiny_demos):
        from tagflow.nn import MlpSpec, init_params

        params = init_params(MlpSpec((SPEC.input_dim, 16, 24)), RngStream(1).fork("i"))
        model = make_velocity_fn(params, SPEC, use_ema=False)
        obs_u = sample_obs.with_global(np.zeros_like(sample_obs.global_img))
        chunk = RngStream(2).fork("c").generator().standard_normal((8, 3))
        v, _ = tag_velocity(model, chunk, 0.7, sample_obs, obs_u, 1.0)
        v_cond = model(sample_obs, chunk, 0.7)
        assert np.array_equal(v, v_cond)

    def test_equal_branches_w_independent(self, sample_obs):
        from tagflow.nn import MlpSpec, init_params

        params = init_params(MlpSpec((SPEC.input_dim, 16, 24)), RngStream(1).fork("i"))
        model = make_velocity_fn(params, SPEC, use_ema=False)
        chunk = np.zeros((8, 3))
        outs = [
            tag_velocity(model, chunk, 0.5, sample_obs, sample_obs, w)[0] for w in (0.0, 1.0, 3.7, 15.0)
        ]
        for v in outs[1:]:
            assert np.array_equal(outs[0], v)

    def test_paper_arithmetic_example(self, sample_obs):
        calls = []

        def model(obs, chunk, tau):
            calls.append(obs)
            if len(calls) % 2 == 1:  # conditional branch first
                return np.array([[1.0, 2.0, 0.0]])
            return np.array([[0.0, 0.0, 0.0]])

        v, residual = tag_velocity(model, np.zeros((1, 3)), 1.0, sample_obs, sample_obs, 1.25)
        assert np.allclose(v, [[1.25, 2.5, 0.0]])
        assert np.allclose(residual, [[1.0, 2.0, 0.0]])
        assert len(calls) == 2

    def test_affinity_in_w(self, sample_obs):
        from tagflow.nn import MlpSpec, init_params

        params = init_params(MlpSpec((SPEC.input_dim, 16, 24)), RngStream(1).fork("i"))
        model = make_velocity_fn(params, SPEC, use_ema=False)
        obs_u = sample_obs.with_global(np.zeros_like(sample_obs.global_img))
        chunk = RngStream(3).fork("c").generator().standard_normal((8, 3))
        v1, dv = tag_velocity(model, chunk, 0.3, sample_obs, obs_u, 1.5)
        v2, _ = tag_velocity(model, chunk, 0.3, sample_obs, obs_u, 2.75)
        assert np.abs((v2 - v1) - (2.75 - 1.5) * dv).max() < 1e-12


class TestIntegrate:
    def test_constant_field_recovers_data_any_n(self, sample_obs):
        target = np.full((8, 3), 0.03)
        noise_rng = RngStream(7).fork("noise-test")
        eps0 = noise_rng.generator().standard_normal((8, 3))
        model = constant_model(eps0 - target)
        outs = {}
        for n in (1, 2, 5, 10):
            cfg = InferConfig(w=1.0, steps=n)
            outs[n] = integrate(model, sample_obs, sample_obs, cfg, noise_rng, a_max=1.0)
            assert np.abs(outs[n] - target).max() < 1e-12
        for n in (2, 5, 10):
            assert np.abs(outs[n] - outs[1]).max() < 1e-12

    def test_2n_model_calls(self, sample_obs):
        calls = []

        def model(obs, chunk, tau):
            calls.append(tau)
            return np.zeros((8, 3))

        cfg = InferConfig(w=1.25, steps=10)
        integrate(model, sample_obs, sample_obs, cfg, RngStream(0).fork("n"))
        assert len(calls) == 2 * 10

    def test_non_finite_state_raises(self, sample_obs):
        def model(obs, chunk, tau):
            return np.full((8, 3), np.inf)

        with pytest.raises(NonFiniteState):
            integrate(model, sample_obs, sample_obs, InferConfig(w=2.0, steps=4), RngStream(0).fork("n"))

    def test_output_respects_action_bounds(self, sample_obs):
        def model(obs, chunk, tau):
            return np.full((8, 3), -30.0)

        out = integrate(model, sample_obs, sample_obs, InferConfig(w=1.0, steps=3), RngStream(0).fork("n"))
        assert np.abs(out[:, :2]).max() <= 0.08
        assert np.abs(out[:, 2]).max() <= 1.0


class TestTraining:
    def test_zero_steps_returns_initialization(self, tiny_demos):
        cfg = TrainConfig(steps=0, hidden=(8,), schedule=LrSchedule(warmup=1, total=2))
        params, curve = train(tiny_demos, None, _no_sub(cfg), SPEC)
        from tagflow.nn import MlpSpec, init_params

        fresh = init_params(
            MlpSpec((SPEC.input_dim, 8, 24)),
            RngStream(cfg.seed).fork("init"),
            input_blocks=SPEC.block_dims,
            zero_final=True,
        )
        assert all(np.array_equal(a, b) for a, b in zip(params.weights, fresh.weights))
        assert curve == []

    def test_determinism_same_seed_same_checkpoint(self, tiny_demos):
        cfg = _no_sub(TrainConfig(steps=12, hidden=(8,), schedule=LrSchedule(warmup=2, total=12), seed=3))
        a, _ = train(tiny_demos, None, cfg, SPEC)
        b, _ = train(tiny_demos, None, cfg, SPEC)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        assert all(np.array_equal(x, y) for x, y in zip(a.ema_weights, b.ema_weights))

    def test_single_datapoint_overfit_recovers_action(self, tiny_demos):
        # the overfit oracle: one datum, many steps, then w=1 sampling
        episode = tiny_demos[0]
        single = _single_pair_episode(episode)
        cfg = _no_sub(
            TrainConfig(
                steps=5_000,
                batch=8,
                hidden=(64, 64),
                schedule=LrSchedule(warmup=100, total=5_000, peak=2e-3, final=2e-4),
                seed=0,
            )
        )
        params, curve = train([single], None, cfg, SPEC)
        assert curve[-1][1] < curve[0][1]
        model = make_velocity_fn(params, SPEC, use_ema=True)
        obs = single.steps[0].obs
        target = single.steps[0].chunk
        out = integrate(
            model,
            obs,
            obs,
            InferConfig(w=1.0, steps=10),
            RngStream(123).fork("sample"),
        )
        assert np.abs(out - target).max() < 0.05


def _no_sub(cfg: TrainConfig) -> TrainConfig:
    from dataclasses import replace

    return replace(cfg, substitution=BaselineKind.BLACK, p_cf=0.0)


def _single_pair_episode(episode):
    from tagflow.core.types import Episode

    single = Episode(
        seed=episode.seed,
        instruction=episode.instruction,
        scenes=episode.scenes,
        steps=[episode.steps[0]],
        outcome=episode.outcome,
    )
    return single


@pytest.fixture(scope="module")
def trained(tiny_demos):
    cfg = _no_sub(
        TrainConfig(steps=300, batch=16, hidden=(32, 32), schedule=LrSchedule(warmup=30, total=300), seed=1)
    )
    params, _ = train(tiny_demos, None, cfg, SPEC)
    return make_velocity_fn(params, SPEC, use_ema=True)


def _rollout_module():
    # the package re-exports the function under the module's name, so
    # resolve the module itself for monkeypatching
    import sys

    return sys.modules["tagflow.policy.rollout"]


class TestRollout:
    def test_static_uncond_computed_once(self, trained, monkeypatch):
        rollout_mod = _rollout_module()
        calls = []
        original = rollout_mod.baseline_image

        def counting(scene, kind, **kw):
            calls.append(kind)
            return original(scene, kind, **kw)

        monkeypatch.setattr(rollout_mod, "baseline_image", counting)
        scene = generate_scene(RngStream(5).fork("s"), SceneConfig())
        cfg = InferConfig(w=1.25, steps=4, uncond=BaselineKind.BACKGROUND)
        rollout(trained, scene, cfg, RngStream(5).fork("r"), sim_cfg=SceneConfig(), max_steps=16)
        assert len(calls) == 1

    def test_realtime_uncond_computed_every_replan(self, trained, monkeypatch):
        rollout_mod = _rollout_module()
        calls = []
        original = rollout_mod.baseline_image

        def counting(scene, kind, **kw):
            calls.append(kind)
            return original(scene, kind, **kw)

        monkeypatch.setattr(rollout_mod, "baseline_image", counting)
        scene = generate_scene(RngStream(5).fork("s"), SceneConfig())
        cfg = InferConfig(w=1.25, steps=4, uncond=BaselineKind.REALTIME_ERASE)
        episode = rollout(trained, scene, cfg, RngStream(5).fork("r"), sim_cfg=SceneConfig(), max_steps=16)
        assert len(calls) == len(episode.steps)

    def test_w1_rollout_equals_conditional_rollout(self, trained):
        scene = generate_scene(RngStream(8).fork("s"), SceneConfig())
        a = rollout(
            trained,
            scene,
            InferConfig(w=1.0, steps=4, uncond=BaselineKind.BACKGROUND),
            RngStream(8).fork("r"),
            sim_cfg=SceneConfig(),
            max_steps=16,
        )
        # a "conditional only" run: uncond image is ignored at w=1 by the
        # bitwise guidance identity, so any uncond kind gives the same path
        b = rollout(
            trained,
            scene,
            InferConfig(w=1.0, steps=4, uncond=BaselineKind.BLACK),
            RngStream(8).fork("r"),
            sim_cfg=SceneConfig(),
            max_steps=16,
        )
        assert len(a.scenes) == len(b.scenes)
        for x, y in zip(a.scenes, b.scenes):
            assert x == y

    def test_first_action_replan_executes_one_step(self, trained):
        scene = generate_scene(RngStream(9).fork("s"), SceneConfig())
        cfg = InferConfig(w=1.0, steps=2, replan=ReplanMode.FIRST_ACTION)
        episode = rollout(trained, scene, cfg, RngStream(9).fork("r"), sim_cfg=SceneConfig(), max_steps=5)
        assert len(episode.scenes) == 6  # initial + 5 single-action steps
        assert len(episode.steps) == 5
