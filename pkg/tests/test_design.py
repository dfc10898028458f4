import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fieldipw.dataset import DataError, PaperRecord, impute_missing, resolve_multilabel
from fieldipw.design import (
    INTERCEPT,
    MainEffects,
    Standardization,
    build_design,
    expand_interactions,
    factor_design,
    interaction_pairs,
    standardize,
)


def _corpus(rows):
    recs = [PaperRecord(f"r{i}", 1, ("A",), covariates=c) for i, c in enumerate(rows)]
    return impute_missing(resolve_multilabel(recs, ["A"], 0))


@given(hnp.arrays(float, st.tuples(st.integers(3, 30), st.integers(1, 4)),
                  elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardized_columns_have_zero_mean_unit_sd(values):
    names = [f"c{j}" for j in range(values.shape[1])]
    std = Standardization.fit(values, names)
    out, kept = std.transform(values, names)
    for j, name in enumerate(kept):
        if name in std.names:
            assert abs(out[:, j].mean()) < 1e-9
            assert out[:, j].std(ddof=1) == pytest.approx(1.0, rel=1e-9)


def test_binary_passes_through_and_constant_is_dropped():
    vals = np.array([[1, 0, 7.0], [2, 1, 7.0], [4, 1, 7.0]])
    std = Standardization.fit(vals, ["x", "flag", "k"])
    assert std.binary == ("flag",) and std.constant == ("k",)
    out, kept = std.transform(vals, ["x", "flag", "k"])
    assert kept == ("x", "flag")
    assert out[:, 1].tolist() == [0, 1, 1]


def test_transform_uses_fitted_moments_on_new_rows():
    std = Standardization.fit(np.array([[0.0], [2.0], [4.0]]), ["x"])
    out, _ = std.transform(np.array([[6.0]]), ["x"])
    assert out[0, 0] == pytest.approx(2.0)
    with pytest.raises(DataError, match="y"):
        std.transform(np.array([[1.0]]), ["y"])


def test_single_row_cannot_be_standardized():
    with pytest.raises(DataError):
        Standardization.fit(np.array([[1.0]]), ["x"])


def test_mains_policy_pairs_covariates_but_not_indicators():
    c = _corpus([
        {"number_of_pages": 3, "number_of_coauthors": 1, "number_of_keywords": None},
        {"number_of_pages": 5, "number_of_coauthors": 4, "number_of_keywords": 2},
        {"number_of_pages": 9, "number_of_coauthors": 2, "number_of_keywords": 6},
    ])
    _, mains = standardize(c)
    assert mains.kinds.count("indicator") == 1
    assert interaction_pairs(mains) == [
        ("number_of_pages", "number_of_coauthors"), ("number_of_pages", "number_of_keywords"),
        ("number_of_coauthors", "number_of_keywords"),
    ]
    assert len(interaction_pairs(mains, "all")) == 6
    assert interaction_pairs(mains, "none") == []
    _, D = build_design(c)
    assert D.names[0] == INTERCEPT
    assert D.shape == (3, 1 + 4 + 3)
    np.testing.assert_allclose(
        D.column("number_of_pages:number_of_coauthors"),
        D.column("number_of_pages") * D.column("number_of_coauthors"),
    )


def test_explicit_and_unknown_policies():
    mains = MainEffects(np.eye(3), ("a", "b", "c"), ("main",) * 3)
    D = expand_interactions(mains, [("a", "c")])
    assert D.names == (INTERCEPT, "a", "b", "c", "a:c")
    assert D.origins[-1] == ("interaction", "a", "c")
    with pytest.raises(DataError, match="unknown"):
        interaction_pairs(mains, "cubic")
    with pytest.raises(DataError, match="zz"):
        interaction_pairs(mains, [("a", "zz")])
    with pytest.raises(DataError, match="itself"):
        interaction_pairs(mains, [("a", "a")])


def test_factor_design_is_saturated():
    D = factor_design([2, 1, 3, 1], "z")
    assert D.names == (INTERCEPT, "z[2]", "z[3]")
    assert np.linalg.matrix_rank(D.values) == 3
    assert D.take_rows([0, 1]).values.tolist() == [[1, 1, 0], [1, 0, 0]]
