import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fieldipw.estimator import ace_matrix, ipw_estimates, ipw_weights, phi_coefficient, stratified_ace
from fieldipw.synth import WORKED_EXAMPLE


def _worked_example():
    co = np.array([c for _, c, _, _ in WORKED_EXAMPLE])
    labels = np.array([t for _, _, t, _ in WORKED_EXAMPLE])
    y = np.array([c for *_, c in WORKED_EXAMPLE], dtype=float)
    p1 = np.where(co == 1, 0.8, 0.2)
    return np.column_stack([p1, 1 - p1]), labels, y, co


def test_worked_example_by_hand():
    P, labels, y, co = _worked_example()
    w = ipw_weights(P, labels)
    assert sorted(set(w.weights.round(12))) == [1.25, 5.0]
    np.testing.assert_allclose(w.sums, [10.0, 10.0])
    est = ipw_estimates(y, w, labels, 2, ("F1", "F2"))
    np.testing.assert_allclose(est.mean, [60, 90])
    np.testing.assert_allclose(est.weighted_mean, [75, 75])
    # sum of weights as divisor: field 1 gives 6750 / 10
    assert est.weighted_sd[0] == pytest.approx(np.sqrt(675.0))
    np.testing.assert_allclose(est.ess, [3.2, 3.2])
    assert stratified_ace(y, co, labels) == pytest.approx(0.0, abs=1e-12)
    assert phi_coefficient(labels, co == 5) == pytest.approx(0.6)


def test_weights_reject_nonpositive_scores():
    with pytest.raises(ValueError, match="record 1"):
        ipw_weights(np.array([[0.5, 0.5], [0.0, 1.0]]), [0, 0])


def test_unit_weights_reproduce_ordinary_summaries():
    rng = np.random.default_rng(0)
    y = rng.poisson(5, 90).astype(float)
    labels = np.arange(90) % 3
    est = ipw_estimates(y, np.ones(90), labels, 3)
    for t in range(3):
        assert est.weighted_mean[t] == pytest.approx(y[labels == t].mean())
        assert est.sd[t] == pytest.approx(y[labels == t].std(ddof=1))
        assert est.weighted_sd[t] == pytest.approx(y[labels == t].std(ddof=0))
        assert est.ess[t] == pytest.approx(30.0)


def test_empty_category_is_an_error():
    with pytest.raises(ValueError, match="'c'"):
        ipw_estimates([1.0, 2.0], [1.0, 1.0], [0, 1], 3, ("a", "b", "c"))


def test_ace_matrix_orientation():
    est = ipw_estimates([1.0, 2.0, 10.0, 20.0], [1, 1, 1, 3], [0, 0, 1, 1], 2)
    A = ace_matrix(est)
    assert A[1, 0] == pytest.approx(17.5 - 1.5)
    assert ace_matrix(est, weighted=False)[1, 0] == pytest.approx(15.0 - 1.5)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=4, max_size=60))
def test_phi_equals_pearson_correlation(pairs):
    a, b = map(np.array, zip(*pairs))
    if len(set(a)) < 2 or len(set(b)) < 2:
        with pytest.raises(ValueError, match="constant"):
            phi_coefficient(a, b)
        return
    assert phi_coefficient(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)


def test_stratified_needs_both_treatments_per_stratum():
    with pytest.raises(ValueError, match="stratum"):
        stratified_ace([1.0, 2.0, 3.0], [0, 0, 1], [0, 1, 0])
