import numpy as np
import pytest

from ecfdens.grids import GridField, SampleSet, ecf_evaluate, make_grid
from ecfdens.threshold import (
    RULE_LOG,
    RULE_SQRT_LOG,
    RULE_U_DEPENDENT,
    BinaryMask,
    ThresholdRule,
    apply_threshold,
    threshold_mask,
    write_mask_pbm,
)


def _random_ecf(seed=0, n=200):
    rng = np.random.default_rng(seed)
    s = SampleSet(rng.normal(size=(n, 2)))
    return ecf_evaluate(s, make_grid([4.0, 4.0], [17, 17]))


def test_sqrt_log_level_at_kappa_zero():
    rule = ThresholdRule(kind=RULE_SQRT_LOG, kappa=0.0)
    assert rule.level(100) == pytest.approx(0.1, abs=1e-15)


def test_tie_is_inclusive():
    g = make_grid([1.0], [3])
    level = ThresholdRule(kind=RULE_SQRT_LOG, kappa=0.0).level(100)
    vals = np.array([0.0, 1.0, level], dtype=complex)
    mask = threshold_mask(GridField(grid=g, values=vals), ThresholdRule(RULE_SQRT_LOG, 0.0), 100)
    assert mask.bits[2]  # modulus exactly at the level is kept


def test_huge_kappa_empties_mask():
    f = _random_ecf()
    mask = threshold_mask(f, ThresholdRule(RULE_SQRT_LOG, 50.0), 200)
    assert mask.node_count == 0


def test_log_rule_level():
    rule = ThresholdRule(kind=RULE_LOG, kappa=0.5)
    n = 400
    assert rule.level(n) == pytest.approx((1 + 0.5 * np.log(n)) / np.sqrt(n), rel=1e-15)


def test_u_dependent_matches_sqrt_log_without_offset():
    # at u = 0, h(u) = 1 and the level is kappa * sqrt(log n / n)
    g = make_grid([2.0], [5])
    n = 1000
    rule = ThresholdRule(kind=RULE_U_DEPENDENT, kappa=0.7)
    levels = rule.level(n, g)
    center = levels[g.center_index]
    assert center == pytest.approx(0.7 * np.sqrt(np.log(n) / n), rel=1e-14)
    sqrt_log = ThresholdRule(kind=RULE_SQRT_LOG, kappa=0.7).level(n)
    assert center == pytest.approx(sqrt_log - 1.0 / np.sqrt(n), rel=1e-12)
    # h grows off-origin, so levels increase with |u|
    assert np.all(np.diff(levels[g.center_index[0]:]) > 0)


def test_mask_monotone_in_kappa():
    f = _random_ecf(seed=5)
    n = 200
    for kind in (RULE_SQRT_LOG, RULE_LOG):
        prev = None
        for kappa in (0.0, 0.3, 0.8, 1.5, 3.0):
            mask = threshold_mask(f, ThresholdRule(kind, kappa), n)
            if prev is not None:
                assert np.all(prev.bits | ~mask.bits)  # mask shrinks
            prev = mask
    g = f.grid
    prev = None
    for kappa in (0.1, 0.5, 1.0):
        mask = threshold_mask(f, ThresholdRule(RULE_U_DEPENDENT, kappa), n)
        if prev is not None:
            assert not np.any(mask.bits & ~prev.bits)
        prev = mask


def test_apply_threshold():
    f = _random_ecf(seed=6)
    g = f.grid
    all_true = BinaryMask(grid=g, bits=np.ones(g.shape, bool))
    assert np.array_equal(apply_threshold(f, all_true).values, f.values)
    all_false = BinaryMask(grid=g, bits=np.zeros(g.shape, bool))
    assert np.all(apply_threshold(f, all_false).values == 0)
    only_zero = np.zeros(g.shape, bool)
    only_zero[g.center_index] = True
    out = apply_threshold(f, BinaryMask(grid=g, bits=only_zero))
    assert out.values[g.center_index] == 1.0 + 0.0j
    assert np.count_nonzero(out.values) == 1


def test_small_n_rejected():
    f = _random_ecf()
    with pytest.raises(ValueError):
        threshold_mask(f, ThresholdRule(RULE_SQRT_LOG, 1.0), 1)


def test_rule_validation():
    with pytest.raises(ValueError):
        ThresholdRule(kind="bogus", kappa=1.0)
    with pytest.raises(ValueError):
        ThresholdRule(kind=RULE_LOG, kappa=-0.1)


def test_pbm_dump(tmp_path):
    g = make_grid([1.0, 2.0], [3, 5])
    bits = np.zeros((3, 5), bool)
    bits[1, 2] = True
    path = tmp_path / "mask.pbm"
    write_mask_pbm(BinaryMask(grid=g, bits=bits), path)
    lines = open(path).read().strip().splitlines()
    assert lines[0] == "P1"
    assert lines[1] == "5 3"
    assert len(lines) == 5
    assert lines[3].split()[2] == "1"
