from textlib import clamp, histogram, mean, normalize, weighted_score


def test_clamp_bounds():
    assert clamp(5, 0, 10) == 5
    assert clamp(-3, 0, 10) == 0
    assert clamp(99, 0, 10) == 10


def test_mean_values():
    assert mean([2, 4, 6]) == 4.0
    assert mean([]) == 0.0


def test_weighted_score():
    assert weighted_score(3, 1) == 5
    assert weighted_score(0, 4) == 0


def test_histogram_buckets():
    assert histogram([1, 2, 11, 12, 25], 10) == {0: 2, 1: 2, 2: 1}
    assert histogram([1], 0) == {}


def test_normalize():
    assert normalize([2, 4]) == [0.5, 1.0]
    assert normalize([0, 0]) == [0, 0]
