import warnings

import numpy as np
import pytest

from conftest import dataset_path
from lshitables.data import DataError, check_reference_shape, load_csv, synth_ball_pair, synth_planted
from lshitables.evaluation import ball_count
from lshitables.hashing import compute_feature_stats, weighted_l1


def write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_dedup_keeps_first(self, tmp_path):
        ds = load_csv(write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n1,2,1\n"))
        assert ds.n == 2
        assert ds.y.tolist() == [0, 1] and ds.ids.tolist() == [0, 1]

    def test_no_dedup(self, tmp_path):
        assert load_csv(write(tmp_path, "1,2,0\n3,4,1\n1,2,1\n"), dedup=False).n == 3

    def test_label_column_index(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,5,7\n0,6,8\n"), label_col=0)
        assert ds.X.tolist() == [[5, 7], [6, 8]] and ds.y.tolist() == [1, 0]

    def test_idempotent(self, tmp_path):
        path = write(tmp_path, "1,2,0\n3,4,1\n1,2,1\n5,5,0\n")
        a, b = load_csv(path), load_csv(path)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "a,b,label\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataError, match="row 3"):
            load_csv(write(tmp_path, "a,b,label\n1,2,0\n1,0\n"))

    def test_non_numeric(self, tmp_path):
        with pytest.raises(DataError, match="row 2"):
            load_csv(write(tmp_path, "1,2,0\nx,2,0\n"))

    def test_bad_label(self, tmp_path):
        with pytest.raises(DataError, match="label must be 0 or 1"):
            load_csv(write(tmp_path, "1,2,0\n1,3,2\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_reference_shape_mismatch_warns(self, tmp_path):
        with pytest.warns(UserWarning, match="breastw"):
            load_csv(write(tmp_path, "1,2,0\n3,4,1\n", name="breastw.csv"))

    def test_breastw_raw_counts(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ds = load_csv(dataset_path("breastw"), dedup=False)
        assert (ds.n, ds.d, ds.n_outliers) == (683, 9, 239)
        assert check_reference_shape(ds)

    def test_breastw_after_dedup(self):
        with pytest.warns(UserWarning):
            ds = load_csv(dataset_path("breastw"))
        assert (ds.n, ds.d, ds.n_outliers) == (449, 9, 236)
        assert len(np.unique(ds.X, axis=0)) == ds.n

    def test_pima(self):
        ds = load_csv(dataset_path("pima"))
        assert (ds.n, ds.d, ds.n_outliers) == (768, 8, 268)


class TestSynthPlanted:
    def test_no_outliers(self):
        assert synth_planted(50, 0, 3, 2.0).y.sum() == 0

    def test_reproducible(self):
        a, b = synth_planted(50, 5, 3, 2.0, seed=4), synth_planted(50, 5, 3, 2.0, seed=4)
        assert np.array_equal(a.X, b.X)

    def test_shell_radius(self):
        ds = synth_planted(100, 10, 4, 3.0, seed=1)
        inlier_max = np.linalg.norm(ds.X[:100], axis=1).max()
        assert np.allclose(np.linalg.norm(ds.X[100:], axis=1), 3.0 * inlier_max)

    def test_far_outliers_are_isolated(self):
        ds = synth_planted(200, 10, 2, 10.0, seed=2)
        stats = compute_feature_stats(ds.X)
        inl, out = ds.X[ds.y == 0], ds.X[ds.y == 1]
        nn_in = max(min(weighted_l1(x, z, stats) for j, z in enumerate(inl) if j != i) for i, x in enumerate(inl))
        nn_out = min(min(weighted_l1(x, z, stats) for z in inl) for x in out)
        assert nn_out > nn_in

    def test_bad_separation(self):
        with pytest.raises(ValueError):
            synth_planted(10, 1, 2, 0.0)


class TestSynthBallPair:
    def test_counts_confirmed(self):
        inst = synth_ball_pair(200, seed=3)
        assert (inst.count1, inst.count2) == (30, 5)
        assert ball_count(inst.points, inst.q1, inst.r, inst.stats) == 30
        assert ball_count(inst.points, inst.q2, inst.r, inst.stats) == 5
        assert len(inst.points) == 200

    def test_unit_ranges(self):
        inst = synth_ball_pair(100, seed=0)
        assert np.allclose(inst.stats.ranges, 1.0)

    def test_reproducible(self):
        a, b = synth_ball_pair(100, seed=5), synth_ball_pair(100, seed=5)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.q1, b.q1)

    def test_equal_ball_sizes_rejected(self):
        with pytest.raises(ValueError):
            synth_ball_pair(100, near1=5, near2=5)

    def test_too_small(self):
        with pytest.raises(ValueError):
            synth_ball_pair(10)
