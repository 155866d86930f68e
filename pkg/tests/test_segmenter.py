import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from usqz.codec import encode_contour
from usqz.errors import MissingClass, TopologyFailure
from usqz.grid import (ContourSet, EXTERNAL, LUMEN, LabelMap, MEDIA,
                       ProbeGeometry, rasterize_contours)
from usqz.segmenter import (ClassifierModel, classify, classify_labels,
                            extract_contours, train_classifier)
from usqz.speckle import CHANNEL_NAMES, FeatureStack

from conftest import ring_contours, random_encodable_radii


def _stack_from_labels(geometry, labels, offsets, noise=0.0, rng=None):
    """Synthetic feature stack whose channels encode the class id."""
    base = np.zeros((3,) + geometry.polar_shape)
    for cid, vec in offsets.items():
        mask = labels == cid
        for ch in range(3):
            base[ch][mask] = vec[ch]
    if noise and rng is not None:
        base = base + rng.normal(0, noise, size=base.shape)
    return FeatureStack(geometry, base, window=3)


SEPARATED = {LUMEN: (1.0, -3.0, 0.1), MEDIA: (1.0, 0.0, 0.6), EXTERNAL: (1.2, -1.0, 0.35)}


class TestTrainClassifier:
    def test_separable_case_reproduces_training_labels(self, small_geometry):
        labels = rasterize_contours(ring_contours(small_geometry, 30, 50),
                                    small_geometry)
        rng = np.random.default_rng(0)
        stack = _stack_from_labels(small_geometry, labels.labels, SEPARATED,
                                   noise=0.01, rng=rng)
        model = train_classifier([stack], [labels])
        pred = classify_labels(stack, model)
        assert np.array_equal(pred.labels, labels.labels)

    def test_priors_match_pixel_fractions(self, small_geometry):
        labels = rasterize_contours(ring_contours(small_geometry, 30, 50),
                                    small_geometry)
        rng = np.random.default_rng(1)
        stack = _stack_from_labels(small_geometry, labels.labels, SEPARATED,
                                   noise=0.01, rng=rng)
        model = train_classifier([stack], [labels])
        total = labels.labels.size
        for k, cid in enumerate(model.class_ids):
            assert model.priors[k] == pytest.approx(
                np.sum(labels.labels == cid) / total)

    def test_missing_class_raises(self, small_geometry):
        labels = LabelMap(small_geometry,
                          np.zeros(small_geometry.polar_shape, np.uint8))
        stack = _stack_from_labels(small_geometry, labels.labels, SEPARATED)
        with pytest.raises(MissingClass):
            train_classifier([stack], [labels])


class TestClassify:
    def _model(self):
        means = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
        variances = np.full((3, 3), 0.1)
        priors = np.full(3, 1 / 3)
        return ClassifierModel((LUMEN, MEDIA, EXTERNAL), means, variances, priors)

    def test_feature_at_class_mean_wins(self, small_geometry):
        model = self._model()
        feats = np.ones((3,) + small_geometry.polar_shape)
        stack = FeatureStack(small_geometry, feats, 3)
        pred = classify_labels(stack, model)
        assert np.all(pred.labels == MEDIA)

    def test_posteriors_normalized_far_from_all_means(self, small_geometry):
        model = self._model()
        feats = np.full((3,) + small_geometry.polar_shape, 1e6)
        post = classify(FeatureStack(small_geometry, feats, 3), model)
        assert np.allclose(post.sum(axis=0), 1.0, atol=1e-9)

    def test_scan_line_reindex_invariance(self, small_geometry):
        model = self._model()
        rng = np.random.default_rng(4)
        feats = rng.normal(1.0, 0.5, size=(3,) + small_geometry.polar_shape)
        post = classify(FeatureStack(small_geometry, feats, 3), model)
        rolled = classify(FeatureStack(small_geometry, np.roll(feats, 5, axis=2), 3),
                          model)
        assert np.array_equal(rolled, np.roll(post, 5, axis=2))


class TestExtractContours:
    def test_perfect_ring_exact(self, geometry):
        labels = rasterize_contours(ring_contours(geometry), geometry)
        cs = extract_contours(labels)
        assert np.all(cs.radii[0] == 50)
        assert np.all(cs.radii[1] == 90)

    def test_salt_and_pepper_noise_within_two_samples(self, geometry):
        truth = ring_contours(geometry, 60, 100)
        labels = rasterize_contours(truth, geometry)
        rng = np.random.default_rng(8)
        noisy = labels.labels.copy()
        flip = rng.random(noisy.shape) < 0.01
        noisy[flip] = rng.integers(0, 3, size=int(flip.sum()), dtype=np.uint8)
        cs = extract_contours(LabelMap(geometry, noisy))
        assert np.max(np.abs(cs.radii[0] - 60)) <= 2
        assert np.max(np.abs(cs.radii[1] - 100)) <= 2

    def test_missing_lumen_topology_failure(self, geometry):
        labels = LabelMap(geometry,
                          np.full(geometry.polar_shape, EXTERNAL, np.uint8))
        with pytest.raises(TopologyFailure):
            extract_contours(labels)

    def test_output_always_encodable_and_nested(self, geometry):
        rng = np.random.default_rng(12)
        for _ in range(20):
            r_l = random_encodable_radii(rng, geometry.num_scan_lines, 200)
            gap = rng.integers(5, 80, size=geometry.num_scan_lines)
            r_m = np.minimum(r_l + gap, geometry.samples_per_line - 1)
            labels = rasterize_contours(
                ContourSet.with_clamping((LUMEN, MEDIA), np.vstack([r_l, r_m]),
                                         geometry.samples_per_line), geometry)
            noisy = labels.labels.copy()
            flip = rng.random(noisy.shape) < 0.005
            noisy[flip] = rng.integers(0, 3, size=int(flip.sum()), dtype=np.uint8)
            cs = extract_contours(LabelMap(geometry, noisy))
            assert np.all(cs.radii[0] <= cs.radii[1])
            for k in range(2):
                encode_contour(cs.radii[k])  # raises if not encodable

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=25, deadline=None)
    def test_encodability_property(self, seed):
        geometry = ProbeGeometry(64, 96, 200, 200)
        rng = np.random.default_rng(seed)
        r_l = random_encodable_radii(rng, 64, 60)
        r_m = np.minimum(r_l + rng.integers(3, 20, size=64), 95)
        labels = rasterize_contours(
            ContourSet.with_clamping((LUMEN, MEDIA), np.vstack([r_l, r_m]), 96),
            geometry)
        noisy = labels.labels.copy()
        flip = rng.random(noisy.shape) < 0.01
        noisy[flip] = rng.integers(0, 3, size=int(flip.sum()), dtype=np.uint8)
        try:
            cs = extract_contours(LabelMap(geometry, noisy))
        except TopologyFailure:
            return
        assert np.all(cs.radii[0] <= cs.radii[1])
        for k in range(2):
            encode_contour(cs.radii[k])

    def test_end_to_end_label_agreement(self, geometry):
        rng = np.random.default_rng(21)
        r_l = random_encodable_radii(rng, geometry.num_scan_lines, 150)
        r_m = np.minimum(r_l + 40, geometry.samples_per_line - 1)
        truth = ContourSet.with_clamping((LUMEN, MEDIA), np.vstack([r_l, r_m]),
                                         geometry.samples_per_line)
        labels = rasterize_contours(truth, geometry)
        noisy = labels.labels.copy()
        flip = rng.random(noisy.shape) < 0.01
        noisy[flip] = rng.integers(0, 3, size=int(flip.sum()), dtype=np.uint8)
        cs = extract_contours(LabelMap(geometry, noisy))
        redrawn = rasterize_contours(cs, geometry)
        disagree = np.mean(redrawn.labels != labels.labels)
        assert disagree <= 0.05


class TestModelSerialization:
    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        model = ClassifierModel(
            (LUMEN, MEDIA, EXTERNAL),
            rng.normal(size=(3, 3)),
            rng.uniform(0.1, 1.0, size=(3, 3)),
            np.array([0.2, 0.3, 0.5]))
        path = tmp_path / "model.bin"
        model.save(path)
        loaded = ClassifierModel.load(path)
        assert loaded.class_ids == model.class_ids
        assert loaded.feature_names == tuple(CHANNEL_NAMES)
        assert np.array_equal(loaded.means, model.means)
        assert np.array_equal(loaded.variances, model.variances)
        assert np.array_equal(loaded.priors, model.priors)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a model")
        with pytest.raises(ValueError):
            ClassifierModel.load(path)
