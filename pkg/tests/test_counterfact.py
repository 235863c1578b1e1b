import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagflow.core.rng import RngStream
from tagflow.counterfact import (
    BBox,
    BaselineKind,
    InstructionCache,
    PipelineConfig,
    PipelineStatus,
    Verdict,
    area_fraction,
    baseline_image,
    dilate,
    instruction_text,
    is_static,
    make_baseline,
    make_oracle_backends,
    mask_from_boxes,
    run_pipeline,
    sample_latter_half,
    substitute_training_obs,
)
from tagflow.counterfact.backends import OracleParser, PipelineBackends
from tagflow.errors import DegenerateEpisode, IoFailure
from tagflow.sim import RenderMode, View, drop_target, render


class TestDilate:
    def test_single_pixel_becomes_square(self):
        mask = np.zeros((9, 9), dtype=bool)
        mask[4, 4] = True
        out = dilate(mask, 5)
        assert out.sum() == 25
        assert out[2:7, 2:7].all()

    def test_empty_stays_empty(self):
        assert not dilate(np.zeros((6, 6), dtype=bool), 5).any()

    def test_output_superset_of_input(self):
        gen = RngStream(0).fork("m").generator()
        for _ in range(20):
            mask = gen.random((12, 12)) < 0.2
            out = dilate(mask, 3)
            assert (out | mask).sum() == out.sum()
            assert out.sum() <= mask.sum() * 9

    def test_matches_naive_double_loop(self):
        # brute-force neighborhood OR oracle
        gen = RngStream(1).fork("m").generator()
        for trial in range(50):
            mask = gen.random((10, 14)) < 0.15
            k = 5 if trial % 2 else 3
            r = (k - 1) // 2
            h, w = mask.shape
            expected = np.zeros_like(mask)
            for i in range(h):
                for j in range(w):
                    lo_i, hi_i = max(0, i - r), min(h, i + r + 1)
                    lo_j, hi_j = max(0, j - r), min(w, j + r + 1)
                    expected[i, j] = mask[lo_i:hi_i, lo_j:hi_j].any()
            assert np.array_equal(dilate(mask, k), expected)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            dilate(np.zeros((4, 4), dtype=bool), 4)


class TestAreaFraction:
    def test_quarter_frame_box(self):
        assert area_fraction([BBox(0, 0, 16, 16)], 32, 32) == 0.25

    def test_duplicate_boxes_count_once(self):
        box = BBox(3, 4, 10, 12)
        one = area_fraction([box], 32, 32)
        assert area_fraction([box, box], 32, 32) == one

    def test_matches_rasterizing_oracle(self):
        gen = RngStream(2).fork("b").generator()
        for _ in range(200):
            n = int(gen.integers(1, 6))
            boxes = []
            for _ in range(n):
                x0, y0 = int(gen.integers(0, 28)), int(gen.integers(0, 28))
                x1 = int(gen.integers(x0 + 1, 33))
                y1 = int(gen.integers(y0 + 1, 33))
                boxes.append(BBox(x0, y0, x1, y1))
            expected = mask_from_boxes(boxes, 32, 32).sum() / (32 * 32)
            assert area_fraction(boxes, 32, 32) == pytest.approx(expected, abs=1e-12)

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 20), st.integers(0, 20), st.integers(1, 12), st.integers(1, 12)
            ),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_under_adding_boxes(self, raw):
        boxes = [BBox(x, y, x + w, y + h) for x, y, w, h in raw]
        prev = 0.0
        for i in range(1, len(boxes) + 1):
            cur = area_fraction(boxes[:i], 32, 32)
            assert cur >= prev - 1e-12
            prev = cur

    def test_empty_is_zero(self):
        assert area_fraction([], 32, 32) == 0.0


class TestSampleLatterHalf:
    def test_even_spacing_example(self):
        assert sample_latter_half(10, 3) == [5, 7, 9]

    def test_two_frame_boundary(self):
        assert sample_latter_half(2, 1) == [1]

    def test_all_indices_in_latter_half(self):
        gen = RngStream(3).fork("t").generator()
        for _ in range(1000):
            t = int(gen.integers(2, 60))
            k = int(gen.integers(1, 8))
            idx = sample_latter_half(t, k)
            assert all(i >= (t + 1) // 2 for i in idx)
            assert all(i <= t - 1 for i in idx)
            assert idx == sorted(set(idx))

    def test_degenerate_episode(self):
        with pytest.raises(DegenerateEpisode):
            sample_latter_half(1, 3)


class TestBaselines:
    def test_black_is_all_zero(self, tiny_demos):
        frames = make_baseline(tiny_demos[0], BaselineKind.BLACK)
        assert len(frames) == len(tiny_demos[0].steps)
        assert not any(f.any() for f in frames)

    def test_static_kinds_frame_invariant(self, tiny_demos):
        ep = tiny_demos[0]
        for kind in (BaselineKind.ERASE, BaselineKind.BACKGROUND, BaselineKind.BLACK):
            assert is_static(kind)
            frames = make_baseline(ep, kind)
            for f in frames[1:]:
                assert np.array_equal(frames[0], f)

    def test_realtime_erase_matches_per_frame_render(self, tiny_demos):
        ep = tiny_demos[0]
        frames = make_baseline(ep, BaselineKind.REALTIME_ERASE)
        for step, frame in zip(ep.steps, frames):
            truth = render(drop_target(ep.scenes[step.t]), View.GLOBAL, RenderMode.FULL)
            assert np.array_equal(frame, truth)

    def test_realtime_differs_when_target_moves(self, tiny_demos):
        # the expert carries the target, so late frames differ from frame 0
        ep = tiny_demos[0]
        frames = make_baseline(ep, BaselineKind.REALTIME_MASK_GRAY)
        assert any(not np.array_equal(frames[0], f) for f in frames[1:])

    def test_mask_kinds_overwrite_target_footprint(self, tiny_demos):
        ep = tiny_demos[0]
        scene = ep.scenes[0]
        from tagflow.sim import object_pixel_mask

        cover = object_pixel_mask(scene, scene.target_index)
        gray = baseline_image(scene, BaselineKind.REALTIME_MASK_GRAY)
        black = baseline_image(scene, BaselineKind.REALTIME_MASK_BLACK)
        assert (gray[cover] == 0.5).all()
        assert (black[cover] == 0.0).all()


class TestSubstitution:
    def test_p_zero_never_substitutes(self, tiny_demos):
        obs = tiny_demos[0].steps[0].obs
        erased = np.zeros_like(obs.global_img)
        gen = RngStream(0).fork("p").generator()
        for _ in range(100):
            assert substitute_training_obs(obs, erased, gen, 0.0) is obs

    def test_p_one_always_substitutes_and_keeps_wrist(self, tiny_demos):
        obs = tiny_demos[0].steps[0].obs
        erased = np.zeros_like(obs.global_img)
        gen = RngStream(0).fork("p").generator()
        out = substitute_training_obs(obs, erased, gen, 1.0)
        assert np.array_equal(out.global_img, erased)
        assert out.wrist_img is obs.wrist_img
        assert out.proprio is obs.proprio
        assert out.instruction is obs.instruction

    def test_rate_matches_p_cf(self, tiny_demos):
        obs = tiny_demos[0].steps[0].obs
        erased = np.zeros_like(obs.global_img)
        gen = RngStream(42).fork("rate").generator()
        hits = sum(
            substitute_training_obs(obs, erased, gen, 0.1) is not obs for _ in range(100_000)
        )
        assert 0.095 <= hits / 100_000 <= 0.105


class TestInstructionCache:
    def test_miss_then_hit(self, tmp_path):
        cache = InstructionCache(tmp_path / "cache.json")
        assert cache.get("pick red") is None
        cache.put("pick red", "red disc")
        assert cache.get("pick red") == "red disc"

    def test_persists_across_instances(self, tmp_path):
        path = tmp_path / "cache.json"
        InstructionCache(path).put("a", "b")
        assert InstructionCache(path).get("a") == "b"

    def test_sorted_keys_on_disk(self, tmp_path):
        path = tmp_path / "cache.json"
        cache = InstructionCache(path)
        cache.put("zebra", "1")
        cache.put("apple", "2")
        data = path.read_text()
        assert data.index("apple") < data.index("zebra")

    def test_corrupt_store_raises(self, tmp_path):
        path = tmp_path / "cache.json"
        path.write_text("{not json")
        with pytest.raises(IoFailure):
            InstructionCache(path)


class TestPipeline:
    def test_zero_error_accepts_on_first_attempt(self, tiny_demos, rng):
        ep = tiny_demos[0]
        frames, record = run_pipeline(ep, make_oracle_backends(ep, rng), PipelineConfig())
        assert record.status is PipelineStatus.ACCEPTED
        assert len(record.attempts) == 1
        assert record.attempts[0].threshold == 0.35
        assert frames is not None

    def test_zero_error_output_pixel_exact(self, tiny_demos, rng):
        for ep in tiny_demos[:3]:
            frames, record = run_pipeline(ep, make_oracle_backends(ep, rng), PipelineConfig())
            assert record.status is PipelineStatus.ACCEPTED
            for step, frame in zip(ep.steps, frames):
                truth = render(drop_target(ep.scenes[step.t]), View.GLOBAL, RenderMode.FULL)
                assert np.array_equal(frame, truth)

    def test_oversized_boxes_exhaust_retries(self, tiny_demos, rng):
        ep = tiny_demos[0]
        backends = make_oracle_backends(ep, rng, oversize_rate=1.0)
        frames, record = run_pipeline(ep, backends, PipelineConfig())
        assert frames is None
        assert record.status is PipelineStatus.DISCARDED
        assert [round(a.threshold, 2) for a in record.attempts] == [0.35, 0.40, 0.45, 0.50]
        assert all(a.verdict == "oversized" for a in record.attempts)

    def test_detector_miss_leads_to_incomplete_then_discard(self, tiny_demos, rng):
        ep = tiny_demos[0]
        backends = make_oracle_backends(ep, rng, miss_rate=1.0)
        frames, record = run_pipeline(ep, backends, PipelineConfig())
        assert frames is None
        assert len(record.attempts) == 4
        assert all(a.verdict == "incomplete" for a in record.attempts)

    def test_flaky_verifier_accepted_on_third_attempt(self, tiny_demos, rng):
        ep = tiny_demos[0]
        backends = make_oracle_backends(ep, rng)

        class FlakyVerifier:
            def __init__(self):
                self.calls = 0

            def verify(self, frames, sample_indices):
                self.calls += 1
                return Verdict.INCOMPLETE if self.calls <= 2 else Verdict.OK

        backends.verifier = FlakyVerifier()
        frames, record = run_pipeline(ep, backends, PipelineConfig())
        assert record.status is PipelineStatus.ACCEPTED
        assert len(record.attempts) == 3
        assert record.attempts[-1].threshold == pytest.approx(0.45)

    def test_parser_called_once_across_shared_instructions(self, tiny_demos, rng, tmp_path):
        cache = InstructionCache(tmp_path / "cache.json")
        parser = OracleParser()
        # rewrite instructions so every episode shares one
        episodes = [ep for ep in tiny_demos]
        for ep in episodes:
            ep.instruction = 1
        for ep in episodes:
            backends = make_oracle_backends(ep, rng, cache=cache, parser=parser)
            run_pipeline(ep, backends, PipelineConfig())
        assert parser.calls == 1

    def test_record_serializes(self, tiny_demos, rng):
        ep = tiny_demos[0]
        _, record = run_pipeline(ep, make_oracle_backends(ep, rng), PipelineConfig())
        blob = json.dumps(record.to_json())
        assert instruction_text(ep.instruction) in blob

    def test_attempts_never_exceed_cap(self, tiny_demos, rng):
        ep = tiny_demos[0]
        cfg = PipelineConfig(max_retries=2)
        backends = make_oracle_backends(ep, rng, miss_rate=1.0)
        _, record = run_pipeline(ep, backends, cfg)
        assert len(record.attempts) == 1 + cfg.max_retries

    def test_jittered_detector_can_recover_on_retry(self, tiny_demos):
        # at least one episode should need >1 attempt yet still be accepted
        saw_retry = False
        for seed in range(30):
            ep = tiny_demos[seed % len(tiny_demos)]
            backends = make_oracle_backends(ep, RngStream(seed).fork("j"), jitter_px=3)
            frames, record = run_pipeline(ep, backends, PipelineConfig())
            if record.status is PipelineStatus.ACCEPTED and len(record.attempts) > 1:
                saw_retry = True
                break
        assert saw_retry
