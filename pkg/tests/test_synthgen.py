"""Synthetic corpus generation: planted views, corruption, geometry."""

from __future__ import annotations

import re

import numpy as np
import pytest

from bestview.corpus import save_manifest
from bestview.synthgen import (
    _ADJECTIVES,
    _FILLER,
    _NOUNS,
    _VERBS,
    SynthConfig,
    SynthError,
    generate,
)

JUNK = re.compile(r"^x\d{3}$")


def caption_tokens(corpus):
    for clip in corpus:
        for view in clip.views:
            for caption in view.captions.values():
                yield clip, view, caption.split()


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_clips": 0},
            {"n_views": 1},
            {"f_dim": 0},
            {"n_captioners": 0},
            {"vocab_size": 0},
            {"narration_len": 0},
            {"corruption_rate": -0.1},
            {"corruption_rate": 1.5},
            {"feature_snr": 0.0},
            {"camera_radius": -1.0},
        ],
    )
    def test_bad_values(self, kwargs):
        with pytest.raises(SynthError):
            SynthConfig(**kwargs)


class TestDeterminism:
    CFG = SynthConfig(n_clips=8, n_views=3, f_dim=5, n_captioners=2, seed=21)

    def test_same_seed_same_manifest_bytes(self, tmp_path):
        paths = []
        for name in ("a.jsonl", "b.jsonl"):
            corpus, _ = generate(self.CFG)
            p = tmp_path / name
            save_manifest(corpus, str(p))
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_same_seed_same_planted(self):
        _, p1 = generate(self.CFG)
        _, p2 = generate(self.CFG)
        assert p1 == p2

    def test_seed_changes_narrations(self):
        c1, _ = generate(self.CFG)
        from dataclasses import replace

        c2, _ = generate(replace(self.CFG, seed=22))
        assert [c.narration for c in c1] != [c.narration for c in c2]


class TestStructure:
    def test_counts_and_ids(self, synth_small):
        corpus, planted = synth_small
        assert len(corpus) == 20
        assert corpus.n_views == 3
        assert corpus.f_dim == 6
        assert corpus.captioner_ids == ("cap0", "cap1", "cap2")
        assert [c.clip_id for c in corpus] == [f"clip{m:05d}" for m in range(20)]
        assert set(planted) == {c.clip_id for c in corpus}
        assert all(0 <= v < 3 for v in planted.values())

    def test_first_view_is_ego(self, synth_small):
        corpus, _ = synth_small
        for clip in corpus:
            assert clip.views[0].is_ego
            assert not any(v.is_ego for v in clip.views[1:])

    def test_every_view_has_all_captioners(self, synth_small):
        corpus, _ = synth_small
        for clip in corpus:
            for view in clip.views:
                assert set(view.captions) == set(corpus.captioner_ids)


class TestCameras:
    def test_ego_sits_at_center_exos_on_ring(self):
        cfg = SynthConfig(n_clips=2, n_views=5, f_dim=4, n_captioners=1,
                          seed=0, camera_radius=2.5)
        corpus, _ = generate(cfg)
        clip = corpus.clips[0]
        assert np.linalg.norm(clip.views[0].extrinsics.center()) < 1e-9
        for view in clip.views[1:]:
            assert np.linalg.norm(view.extrinsics.center()) == pytest.approx(2.5)

    def test_cameras_shared_across_clips(self, synth_small):
        corpus, _ = synth_small
        first = corpus.clips[0]
        for clip in corpus.clips[1:]:
            for a, b in zip(first.views, clip.views):
                np.testing.assert_array_equal(a.extrinsics.rotation, b.extrinsics.rotation)
                np.testing.assert_array_equal(a.extrinsics.translation, b.extrinsics.translation)

    def test_exo_cameras_look_at_center(self):
        cfg = SynthConfig(n_clips=1, n_views=4, f_dim=4, n_captioners=1, seed=0)
        corpus, _ = generate(cfg)
        for view in corpus.clips[0].views[1:]:
            ext = view.extrinsics
            looked = ext.rotation @ (np.zeros(3) - ext.center())
            # center projects onto the +z (forward) axis
            assert looked[2] > 0
            assert abs(looked[0]) < 1e-9 and abs(looked[1]) < 1e-9


class TestNarrations:
    def test_length_within_padding_slack(self):
        cfg = SynthConfig(n_clips=30, n_views=2, f_dim=4, n_captioners=1,
                          seed=3, narration_len=12)
        corpus, _ = generate(cfg)
        for clip in corpus:
            n = len(clip.narration.split())
            assert 12 <= n <= 14

    def test_padding_repeats_with_the_noun(self):
        cfg = SynthConfig(n_clips=30, n_views=2, f_dim=4, n_captioners=1,
                          seed=3, narration_len=14)
        corpus, _ = generate(cfg)
        padded = 0
        for clip in corpus:
            tokens = clip.narration.split()
            if len(tokens) > 8:  # longest template
                assert tokens[-3:-1] == ["with", "the"]
                assert tokens[-1] in _NOUNS
                padded += 1
        assert padded > 0

    def test_tokens_come_from_pools(self, synth_small):
        corpus, _ = synth_small
        pool = set(_NOUNS) | set(_ADJECTIVES) | {v + "s" for v in _VERBS}
        pool |= {"c", "the", "on", "with", "both", "hands"}
        for clip in corpus:
            assert set(clip.narration.split()) <= pool


class TestCorruption:
    def test_zero_rate_copies_narration_everywhere(self):
        cfg = SynthConfig(n_clips=10, n_views=3, f_dim=4, n_captioners=2,
                          seed=7, corruption_rate=0.0)
        corpus, _ = generate(cfg)
        for clip, _, tokens in caption_tokens(corpus):
            assert tokens == clip.narration.split()

    def test_planted_view_never_corrupted(self):
        cfg = SynthConfig(n_clips=15, n_views=3, f_dim=4, n_captioners=2,
                          seed=8, corruption_rate=1.0)
        corpus, planted = generate(cfg)
        for clip in corpus:
            view = clip.views[planted[clip.clip_id]]
            for caption in view.captions.values():
                assert caption == clip.narration

    def test_other_views_do_get_corrupted(self):
        cfg = SynthConfig(n_clips=15, n_views=3, f_dim=4, n_captioners=2,
                          seed=8, corruption_rate=1.0)
        corpus, planted = generate(cfg)
        changed = sum(
            caption != clip.narration
            for clip in corpus
            for v, view in enumerate(clip.views)
            if v != planted[clip.clip_id]
            for caption in view.captions.values()
        )
        assert changed > 0

    def test_corruption_only_swaps_in_junk_tokens(self):
        cfg = SynthConfig(n_clips=15, n_views=3, f_dim=4, n_captioners=2,
                          seed=9, corruption_rate=0.8)
        corpus, _ = generate(cfg)
        for clip, _, tokens in caption_tokens(corpus):
            narr = clip.narration.split()
            assert len(tokens) == len(narr)
            for got, want in zip(tokens, narr):
                assert got == want or JUNK.match(got)

    def test_junk_vocabulary_disjoint_from_pools(self):
        pool = set(_NOUNS) | set(_ADJECTIVES) | set(_VERBS) | set(_FILLER)
        pool |= {v + "s" for v in _VERBS}
        assert not any(JUNK.match(w) for w in pool)

    def test_higher_rate_lowers_overlap(self):
        def mean_overlap(rate):
            cfg = SynthConfig(n_clips=25, n_views=3, f_dim=4, n_captioners=2,
                              seed=10, corruption_rate=rate)
            corpus, planted = generate(cfg)
            overlaps = []
            for clip in corpus:
                narr = clip.narration.split()
                for v, view in enumerate(clip.views):
                    if v == planted[clip.clip_id]:
                        continue
                    for caption in view.captions.values():
                        toks = caption.split()
                        overlaps.append(
                            sum(a == b for a, b in zip(toks, narr)) / len(narr)
                        )
            return np.mean(overlaps)

        assert mean_overlap(0.05) > mean_overlap(0.9) + 0.3


class TestVerboseCaptions:
    CFG = SynthConfig(n_clips=12, n_views=3, f_dim=4, n_captioners=2,
                      seed=13, corruption_rate=0.0, verbose_captions=True)

    def test_appends_filler_only(self):
        corpus, _ = generate(self.CFG)
        grew = 0
        for clip, _, tokens in caption_tokens(corpus):
            narr = clip.narration.split()
            assert tokens[: len(narr)] == narr
            extra = tokens[len(narr):]
            assert set(extra) <= set(_FILLER)
            grew += bool(extra)
        assert grew > 0

    def test_caption_length_fixed_per_view(self):
        corpus, _ = generate(self.CFG)
        for clip in corpus:
            for view in clip.views:
                lengths = {len(c.split()) for c in view.captions.values()}
                assert len(lengths) == 1


class TestFeatures:
    def test_planted_view_has_largest_feature_norm(self):
        cfg = SynthConfig(n_clips=50, n_views=4, f_dim=8, n_captioners=1,
                          seed=17, feature_snr=200.0)
        corpus, planted = generate(cfg)
        hits = sum(
            int(np.argmax([np.linalg.norm(v.feature) for v in clip.views]))
            == planted[clip.clip_id]
            for clip in corpus
        )
        assert hits >= 48

    def test_noise_scales_inversely_with_snr(self):
        from dataclasses import replace

        base = SynthConfig(n_clips=40, n_views=3, f_dim=8, n_captioners=1, seed=18)
        spreads = {}
        for snr in (5.0, 500.0):
            corpus, planted = generate(replace(base, feature_snr=snr))
            norms = [
                np.linalg.norm(clip.views[planted[clip.clip_id]].feature)
                for clip in corpus
            ]
            spreads[snr] = np.std(norms)
        assert spreads[500.0] < spreads[5.0]
