import numpy as np
import pytest

from hardlab.dynamics import compute_aum, compute_el2n, compute_forgetting
from hardlab.errors import TrainingDivergedError
from hardlab.synthlab import (
    FOUR_BLOB_HARD_CLASS,
    BlobSpec,
    TrainConfig,
    class_metrics,
    four_blob_spec,
    generate_blobs,
    train_ensemble,
    train_reference,
    two_blob_spec,
)

from oracles import confusion_metrics

FAST = TrainConfig(epochs=16, lr_decay_epochs=(10,), batch_size=64, seed=0)


class TestBlobs:
    def test_deterministic_under_seed(self):
        spec = four_blob_spec(seed=7, per_class=50)
        a = generate_blobs(spec)
        b = generate_blobs(spec)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_different_seeds_differ(self):
        a = generate_blobs(four_blob_spec(seed=1, per_class=50))
        b = generate_blobs(four_blob_spec(seed=2, per_class=50))
        assert not np.array_equal(a.features, b.features)

    def test_far_separated_classes_pure_neighborhoods(self):
        from hardlab.geometry import build_knn, knn_metrics

        spec = BlobSpec(centers=np.array([[0.0, 0.0], [500.0, 0.0]]),
                        scales=(1.0, 1.0), per_class_n=(60, 60), seed=3)
        fs = generate_blobs(spec)
        tables = knn_metrics(fs, build_knn(fs, k=10))
        assert (tables["N3"].values == 0).all()

    def test_coincident_centers_mixed_neighborhoods(self):
        from hardlab.geometry import build_knn, knn_metrics

        spec = BlobSpec(centers=np.zeros((2, 2)), scales=(1.0, 1.0),
                        per_class_n=(400, 400), seed=4)
        fs = generate_blobs(spec)
        tables = knn_metrics(fs, build_knn(fs, k=40))
        assert tables["CP"].values.mean() == pytest.approx(0.5, abs=0.05)

    def test_degenerate_scale_rejected(self):
        spec = BlobSpec(centers=np.zeros((1, 2)), scales=(0.0,),
                        per_class_n=(5,), seed=0)
        with pytest.raises(ValueError):
            generate_blobs(spec)


class TestTrainReference:
    def test_separable_set_reaches_full_accuracy(self):
        spec = BlobSpec(centers=np.array([[-8.0, 0.0], [8.0, 0.0]]),
                        scales=(0.5, 0.5), per_class_n=(80, 80), seed=5)
        fs = generate_blobs(spec)
        run = train_reference(fs, FAST)
        final_margin = run.log.margin[-1]
        assert (final_margin > 0).all()
        preds = run.predict(fs.features)
        assert (preds == fs.labels).mean() == 1.0

    def test_overlapped_class_lowest_recall(self):
        fs = generate_blobs(four_blob_spec(seed=6, per_class=150))
        run = train_reference(fs, TrainConfig(epochs=25, lr_decay_epochs=(15,),
                                              batch_size=64, seed=6))
        recall = run.metrics.recall
        assert np.argmin(recall) == FOUR_BLOB_HARD_CLASS

    def test_errnorm_within_softmax_bound(self):
        fs = generate_blobs(two_blob_spec(seed=7, per_class=60))
        run = train_reference(fs, FAST)
        assert run.log.errnorm.min() >= 0.0
        assert run.log.errnorm.max() <= np.sqrt(2.0) + 1e-6

    def test_bit_reproducible(self):
        fs = generate_blobs(four_blob_spec(seed=8, per_class=40))
        a = train_reference(fs, FAST)
        b = train_reference(fs, FAST)
        np.testing.assert_array_equal(a.log.margin, b.log.margin)
        np.testing.assert_array_equal(a.log.loss, b.log.loss)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_heldout_split_disjoint_and_stratified(self):
        fs = generate_blobs(four_blob_spec(seed=9, per_class=50))
        run = train_reference(fs, FAST)
        assert len(set(run.train_ids) & set(run.heldout_ids)) == 0
        assert len(run.train_ids) + len(run.heldout_ids) == fs.n_samples
        held_labels = fs.labels[run.heldout_ids]
        np.testing.assert_array_equal(np.bincount(held_labels), [10, 10, 10, 10])

    def test_divergence_raises_with_epoch(self):
        fs = generate_blobs(two_blob_spec(seed=10, per_class=30))
        crazy = TrainConfig(epochs=30, learning_rate=1e9, batch_size=16, seed=10,
                            lr_decay_epochs=())
        with pytest.raises(TrainingDivergedError):
            train_reference(fs, crazy)

    def test_log_satisfies_dynamics_invariants(self):
        fs = generate_blobs(four_blob_spec(seed=11, per_class=30))
        run = train_reference(fs, FAST)
        run.log.validate()
        compute_aum(run.log)
        compute_el2n(run.log, probe_epoch=5)
        compute_forgetting(run.log)

    def test_ensemble_seeds_step(self):
        fs = generate_blobs(four_blob_spec(seed=12, per_class=30))
        runs = train_ensemble(fs, FAST, 3)
        ids = [r.log.model_id for r in runs]
        assert len(set(ids)) == 3
        assert not np.array_equal(runs[0].log.margin, runs[1].log.margin)


class TestClassMetrics:
    def test_perfect_predictions(self):
        m = class_metrics([0, 1, 2], [0, 1, 2])
        np.testing.assert_array_equal(m.precision, [1, 1, 1])
        np.testing.assert_array_equal(m.recall, [1, 1, 1])

    def test_all_one_class(self):
        m = class_metrics([0, 0, 0, 0], [0, 0, 1, 1])
        np.testing.assert_array_equal(m.recall, [1.0, 0.0])
        assert m.precision[0] == 0.5
        assert not m.precision_defined[1]
        assert m.precision[1] == 0.0

    def test_matches_confusion_oracle(self):
        rng = np.random.default_rng(13)
        preds = rng.integers(0, 5, size=300)
        labels = rng.integers(0, 5, size=300)
        m = class_metrics(preds, labels, 5)
        exp_p, exp_r = confusion_metrics(preds, labels, 5)
        np.testing.assert_allclose(m.precision, exp_p, rtol=1e-12)
        np.testing.assert_allclose(m.recall, exp_r, rtol=1e-12)


def test_four_blob_hard_class_is_hardest_by_aum_across_seeds():
    hits = 0
    for seed in range(4):
        fs = generate_blobs(four_blob_spec(seed=seed, per_class=80))
        cfg = TrainConfig(epochs=20, lr_decay_epochs=(12,), batch_size=64, seed=seed)
        run = train_reference(fs, cfg)
        aum = compute_aum(run.log).values
        means = [aum[fs.labels == c].mean() for c in range(4)]
        if int(np.argmin(means)) == FOUR_BLOB_HARD_CLASS:
            hits += 1
    assert hits == 4
