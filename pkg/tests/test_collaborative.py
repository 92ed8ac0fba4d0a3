import json

import numpy as np
import pytest

from lshitables.collaborative import (
    OUTLIER_SKEWED,
    Coordinator,
    PartitionSpec,
    PrivacyAccount,
    local_iforest_aucs,
    partition,
    run_collaboration,
    run_collaboration_rsh,
)
from lshitables.data import Dataset, synth_planted
from lshitables.ensemble import DetectorKind, lsh_itables_train
from lshitables.evaluation import auc


@pytest.fixture(scope="module")
def small():
    return synth_planted(180, 20, 3, 2.0, seed=1)


class TestPartition:
    def test_single_shard(self, small):
        (shard,) = partition(small, PartitionSpec(1))
        assert np.array_equal(shard.X, small.X) and np.array_equal(shard.ids, small.ids)

    def test_uniform_sizes(self):
        ds = Dataset("d", np.arange(100.0)[:, None], np.zeros(100))
        assert [s.n for s in partition(ds, PartitionSpec(2, seed=3))] == [50, 50]

    def test_disjoint_cover(self, small):
        shards = partition(small, PartitionSpec(7, seed=2))
        ids = np.concatenate([s.ids for s in shards])
        assert sorted(ids.tolist()) == list(range(small.n))

    def test_skewed_routes_every_outlier(self, small):
        shards = partition(small, PartitionSpec(5, OUTLIER_SKEWED, 1.0, seed=4))
        assert shards[0].n_outliers == small.n_outliers
        assert all(s.n_outliers == 0 for s in shards[1:])

    def test_partial_skew(self, small):
        shards = partition(small, PartitionSpec(4, OUTLIER_SKEWED, 0.5, seed=5))
        assert shards[0].n_outliers >= 10

    def test_too_many_participants(self):
        ds = Dataset("d", np.zeros((3, 1)), np.zeros(3))
        with pytest.raises(ValueError):
            partition(ds, PartitionSpec(4))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            PartitionSpec(0)
        with pytest.raises(ValueError):
            PartitionSpec(2, "round-robin")
        with pytest.raises(ValueError):
            PartitionSpec(2, OUTLIER_SKEWED, 1.5)


class TestPrivacyAccount:
    def test_sum(self):
        acc = PrivacyAccount([0.01, 0.02, 0.03], releases_per_participant=100)
        assert acc.total == pytest.approx(0.06)
        assert acc.sequential_total == pytest.approx(6.0)

    def test_order_independent(self):
        assert PrivacyAccount([0.3, 0.1, 0.2]).total == PrivacyAccount([0.1, 0.2, 0.3]).total


class TestCollaboration:
    def test_k1_equals_centralised(self, small):
        res = run_collaboration(small, PartitionSpec(1), m=20, seed=6)
        central = lsh_itables_train(small.X, m=20, seed=6)
        assert res.aucs[0] == auc(central.score(small.X), small.y, central.orientation)
        assert np.array_equal(res.participants[0].score(), central.score(small.X))

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_merged_histograms_equal_centralised(self, small, k):
        res = run_collaboration(small, PartitionSpec(k, seed=k), m=15, seed=8)
        central = lsh_itables_train(small.X, m=15, seed=8)
        for p in res.participants:
            for merged, ref in zip(p.model.models, central.models):
                assert np.array_equal(merged.histogram.counts, ref.histogram.counts)
            assert np.array_equal(p.score(), central.score(p.shard.X))

    def test_rsh_non_private_merge_equals_centralised_sketch(self, small):
        res = run_collaboration_rsh(small, PartitionSpec(2, seed=1), m=5, seed=3)
        coord = Coordinator(small.X, 5, 3, DetectorKind.RSH)
        specs = coord.hash_spec_message()["models"]
        for merged, spec in zip(res.participants[0].model.models, specs):
            central = merged.spec.new_sketch().insert(merged.spec.keys(small.X))
            assert merged.spec.to_dict() == spec
            assert np.array_equal(merged.sketch.counters, central.counters)

    def test_private_run_accounts_budgets(self, small):
        res = run_collaboration(small, PartitionSpec(3, seed=0), m=10, epsilon=[0.1, 0.2, 0.3], seed=1)
        assert res.account.total == pytest.approx(0.6)
        assert res.account.sequential_total == pytest.approx(6.0)
        assert res.participants[0].model.models[0].histogram.epsilons == [0.1, 0.2, 0.3]

    def test_budget_list_length(self, small):
        with pytest.raises(ValueError):
            run_collaboration(small, PartitionSpec(2), m=5, epsilon=[0.1])

    def test_non_positive_budget(self, small):
        with pytest.raises(ValueError):
            run_collaboration(small, PartitionSpec(2), m=5, epsilon=0.0)

    def test_deterministic(self, small):
        a = run_collaboration(small, PartitionSpec(3, seed=2), m=10, epsilon=0.5, seed=4)
        b = run_collaboration(small, PartitionSpec(3, seed=2), m=10, epsilon=0.5, seed=4)
        assert a.aucs == b.aucs

    def test_single_class_shard_excluded(self, small, caplog):
        res = run_collaboration(small, PartitionSpec(4, OUTLIER_SKEWED, 1.0, seed=0), m=10, seed=0)
        assert all(res.aucs[p] is None for p in (1, 2, 3))
        assert res.mean_auc == res.aucs[0]
        assert "excluded" in caplog.text

    def test_transcript(self, small, tmp_path):
        path = tmp_path / "t.jsonl"
        run_collaboration(small, PartitionSpec(2, seed=0), m=3, epsilon=0.5, seed=0, transcript_path=path)
        msgs = [json.loads(line) for line in path.read_text().splitlines()]
        kinds = [m["kind"] for m in msgs]
        assert kinds == ["hash-spec"] * 2 + ["release"] * 6
        release = msgs[2]
        assert set(release) == {"kind", "l", "counts", "epsilon", "model_id", "participant_id"}
        assert release["epsilon"] == 0.5

    def test_noise_lowers_auc(self):
        ds = synth_planted(400, 20, 3, 3.0, seed=2)
        clean = run_collaboration(ds, PartitionSpec(2, seed=0), m=30, seed=0).mean_auc
        noisy = run_collaboration(ds, PartitionSpec(2, seed=0), m=30, epsilon=0.001, seed=0).mean_auc
        assert noisy < clean


class TestLocalIForest:
    def test_empty_and_single_class_shards(self, small):
        shards = partition(small, PartitionSpec(3, OUTLIER_SKEWED, 1.0, seed=0))
        shards.append(small.subset([], name="empty"))
        aucs = local_iforest_aucs(shards, m=10)
        assert aucs[0] is not None and aucs[1] is None and aucs[3] is None

