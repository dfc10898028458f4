import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fieldipw.propensity import (
    clip_scores,
    estimate_propensities,
    overlap_summary,
    read_overlap_csv,
    tukey_fivenum,
    write_overlap_csv,
)


def test_clip_flags_and_keeps_raw():
    P = np.array([[0.0005, 0.9995], [0.3, 0.7]])
    C = clip_scores(P)
    assert C.values.tolist() == [[0.001, 0.999], [0.3, 0.7]]
    assert C.clipped.tolist() == [[True, True], [False, False]]
    assert C.raw is not None and C.raw[0, 0] == 0.0005
    assert (C.lo, C.hi) == (0.001, 0.999)


@pytest.mark.parametrize("lo, hi", [(0.0, 0.9), (0.5, 0.5), (0.2, 1.0), (0.6, 0.4)])
def test_invalid_clip_bounds(lo, hi):
    with pytest.raises(ValueError, match="clip bounds"):
        clip_scores(np.full((1, 2), 0.5), lo, hi)


def test_fivenum_matches_tukey_hinges():
    assert tukey_fivenum(np.arange(1, 11)) == (1.0, 3.0, 5.5, 8.0, 10.0)
    assert tukey_fivenum([1, 2, 3, 4, 5]) == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert tukey_fivenum([7.0]) == (7.0,) * 5
    with pytest.raises(ValueError):
        tukey_fivenum([])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50))
def test_fivenum_is_ordered_and_permutation_invariant(x):
    f = tukey_fivenum(x)
    assert all(a <= b for a, b in zip(f, f[1:]))
    assert f == tukey_fivenum(x[::-1])


def test_saturated_propensities_are_cell_frequencies():
    z = np.repeat([0, 1, 2], [10, 20, 30])
    labels = np.r_[[0] * 7 + [1] * 3, [0] * 5 + [1] * 15, [0] * 6 + [1] * 24]
    X = np.column_stack([np.ones(60), z == 1, z == 2]).astype(float)
    P = estimate_propensities(X, labels, 2, ridge=0.0, tol=1e-12)
    np.testing.assert_allclose(P.values[[0, 10, 30], 0], [0.7, 0.25, 0.2], atol=1e-12)
    assert P.fit is not None and P.fit.K == 2


def _summary():
    P = np.array([[0.8, 0.2], [0.6, 0.4], [0.3, 0.7], [0.1, 0.9], [0.45, 0.55]])
    return overlap_summary(P, np.array([0, 0, 1, 1, 1]), ("F1", "F2"))


def test_overlap_rows_and_medians():
    s = _summary()
    assert [(r.assigned, r.scored, r.n) for r in s.rows] == [
        ("F1", "F1", 2), ("F1", "F2", 2), ("F2", "F1", 3), ("F2", "F2", 3)]
    np.testing.assert_allclose(s.medians(), [[0.7, 0.3], [0.3, 0.7]])
    assert s.get("F2", "F2").max == 0.9


def test_overlap_csv_round_trip(tmp_path):
    s = _summary()
    path = tmp_path / "o.csv"
    write_overlap_csv(s, path, "hash=abc seed=1")
    back, comments = read_overlap_csv(path)
    assert back == s
    assert comments == ["hash=abc seed=1"]


@pytest.mark.parametrize("body, message", [
    ("a,b\n", "expected header"),
    ("assigned,scored,n,min,q1,median,q3,max\nF1,F1,x,0,0,0,0,0\n", "non-numeric"),
    ("assigned,scored,n,min,q1,median,q3,max\nF1,F1,0,0,0,0,0,0\n", "'F1' is empty"),
    ("assigned,scored,n,min,q1,median,q3,max\nF1,F1,3,0.5,0.1,0.2,0.3,0.4\n", "out of order"),
    ("assigned,scored,n,min,q1,median,q3,max\nF1,F1,2,0,0,0,0,0\nF1,F2,2,0,0,0,0,0\n", "'F2' has no assigned"),
])
def test_malformed_overlap_csv(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError, match=message):
        read_overlap_csv(path)


def test_overlap_needs_every_category():
    with pytest.raises(ValueError, match="'B' has no records"):
        overlap_summary(np.full((2, 2), 0.5), np.array([0, 0]), ("A", "B"))
