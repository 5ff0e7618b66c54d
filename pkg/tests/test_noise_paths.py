import numpy as np
import pytest

from spde_lab.noise_paths import (
    MAX_LEVEL,
    coarsen_increments,
    sample_increment_batch,
    sample_path,
)


def test_determinism():
    a = sample_path(1.0, 10, master_seed=42, sample_index=5)
    b = sample_path(1.0, 10, master_seed=42, sample_index=5)
    assert np.array_equal(a.increments, b.increments)


def test_distinct_sample_indices_differ():
    a = sample_path(1.0, 10, 42, 0)
    b = sample_path(1.0, 10, 42, 1)
    assert not np.array_equal(a.increments, b.increments)
    # streams should be essentially uncorrelated, not shifted copies
    r = np.corrcoef(a.increments, b.increments)[0, 1]
    assert abs(r) < 0.2


def test_count_and_variance():
    p = sample_path(1.0, 16, 7, 0)
    assert p.increments.size == 2**16
    assert p.tau_min == 2.0**-16
    assert p.increments.var() == pytest.approx(2.0**-16, rel=0.05)
    assert abs(p.increments.mean()) <= 4 * np.sqrt(p.tau_min) / 2**8


def test_level_cap():
    with pytest.raises(ValueError):
        sample_path(1.0, MAX_LEVEL + 1, 0, 0)
    with pytest.raises(ValueError):
        sample_path(-1.0, 4, 0, 0)


def test_coarsen_pairs_exact():
    p = sample_path(2.0, 2, 3, 1)
    a, b, c, d = p.increments
    assert np.array_equal(p.coarsen(1), [a + b, c + d])
    assert np.array_equal(p.coarsen(0), [(a + b) + (c + d)])


def test_coarsen_identity():
    p = sample_path(1.0, 8, 3, 2)
    assert np.array_equal(p.coarsen(8), p.increments)


def test_coarsen_rejects_finer_level():
    p = sample_path(1.0, 4, 0, 0)
    with pytest.raises(ValueError):
        p.coarsen(5)


def test_total_sum_telescopes():
    p = sample_path(1.0, 14, 11, 4)
    total = p.partial_sums()[-1]
    for j in range(0, 15, 3):
        assert p.coarsen(j).sum() == pytest.approx(total, abs=1e-13)


def test_partial_sum_consistency():
    # coarse partial sums interleave with fine partial sums
    p = sample_path(1.0, 12, 5, 9)
    fine = p.partial_sums()
    for j in (3, 6, 9, 11):
        block = 2 ** (12 - j)
        coarse = np.cumsum(p.coarsen(j))
        assert np.allclose(coarse, fine[block - 1 :: block], rtol=0, atol=1e-12)


def test_batch_rows_match_single_paths():
    batch = sample_increment_batch(0.5, 9, 42, range(3, 7))
    for row, k in enumerate(range(3, 7)):
        single = sample_path(0.5, 9, 42, k)
        assert np.array_equal(batch[row], single.increments)


def test_batched_coarsening_matches_single():
    batch = sample_increment_batch(0.5, 10, 1, range(0, 4))
    coarse = coarsen_increments(batch, 10, 6)
    for row in range(4):
        assert np.array_equal(coarse[row], coarsen_increments(batch[row], 10, 6))


def test_increment_distribution_scaling():
    # variance scales with the horizon
    p = sample_path(4.0, 12, 123, 0)
    assert p.increments.var() == pytest.approx(4.0 / 2**12, rel=0.1)
