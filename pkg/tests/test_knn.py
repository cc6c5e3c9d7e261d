import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_topk_neighbors
from coss.knn import NeighborIndex, build_index, sample_neighbors


class TestBuildIndex:
    def test_three_sample_ranking(self):
        # checked against the O(N^2) loop oracle
        idx = build_index([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]], pool=1)
        np.testing.assert_array_equal(idx.neighbors, [[1], [0], [1]])

    def test_all_tie_one_hot(self):
        idx = build_index(np.eye(4), pool=2)
        np.testing.assert_array_equal(
            idx.neighbors, [[1, 2], [0, 2], [0, 1], [0, 1]]
        )

    def test_two_samples(self):
        idx = build_index([[1.0, 0.0], [0.5, 0.5]], pool=1)
        np.testing.assert_array_equal(idx.neighbors, [[1], [0]])

    def test_pool_too_large(self):
        with pytest.raises(ValueError, match="pool too large"):
            build_index(np.eye(3), pool=3)

    @given(st.integers(0, 2**32 - 1), st.integers(3, 24), st.integers(1, 6))
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force(self, seed, n, dim):
        rng = np.random.default_rng(seed)
        emb = rng.normal(size=(n, dim))
        # inject exact duplicates so tie-breaking is actually exercised
        emb[n // 2] = emb[0]
        pool = min(4, n - 1)
        idx = build_index(emb, pool)
        np.testing.assert_array_equal(idx.neighbors, brute_topk_neighbors(emb, pool))

    def test_row_scale_invariant(self):
        rng = np.random.default_rng(5)
        emb = rng.normal(size=(12, 4))
        scaled = emb * rng.uniform(0.1, 9.0, size=(12, 1))
        assert build_index(emb, 3) == build_index(scaled, 3)

    def test_blockwise_matches_dense(self):
        emb = np.random.default_rng(11).normal(size=(40, 6))
        assert build_index(emb, 5, block_size=7) == build_index(emb, 5, block_size=4096)


class TestNeighborIndexInvariants:
    def test_rejects_self_reference(self):
        with pytest.raises(ValueError, match="own sample index"):
            NeighborIndex(n=3, pool=1, neighbors=[[0], [0], [0]])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            NeighborIndex(n=3, pool=2, neighbors=[[1, 1], [0, 2], [0, 1]])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            NeighborIndex(n=3, pool=1, neighbors=[[5], [0], [0]])


class TestSampleNeighbors:
    def setup_method(self):
        shifted = (np.arange(10)[:, None] + np.array([1, 2, 3])) % 10
        self.index = NeighborIndex(n=10, pool=3, neighbors=shifted)

    def test_full_pool_is_permutation(self):
        got = sample_neighbors(self.index, 0, 3, np.random.default_rng(0))
        assert sorted(got) == [1, 2, 3]

    def test_zero_draw(self):
        assert sample_neighbors(self.index, 0, 0, np.random.default_rng(0)) == []

    def test_seeded_determinism(self):
        a = sample_neighbors(self.index, 4, 2, np.random.default_rng(99))
        b = sample_neighbors(self.index, 4, 2, np.random.default_rng(99))
        assert a == b

    def test_k_exceeds_pool(self):
        with pytest.raises(ValueError, match="k exceeds pool"):
            sample_neighbors(self.index, 0, 4, np.random.default_rng(0))

    def test_uniform_membership_frequency(self):
        rng = np.random.default_rng(123)
        draws = 6000
        counts = {1: 0, 2: 0, 3: 0}
        for _ in range(draws):
            for j in sample_neighbors(self.index, 0, 2, rng):
                counts[j] += 1
        # expect k/pool = 2/3 per member; binomial 3-sigma band
        expect = draws * 2 / 3
        sigma = (draws * (2 / 3) * (1 / 3)) ** 0.5
        for member, count in counts.items():
            assert abs(count - expect) < 4 * sigma, (member, count)


class TestRoundTrip:
    def test_save_load_identity(self, tmp_path):
        idx = build_index(np.random.default_rng(1).normal(size=(9, 5)), pool=4)
        path = tmp_path / "nn.cssk"
        from coss.knn import load_index, save_index

        save_index(idx, path)
        assert load_index(path) == idx
