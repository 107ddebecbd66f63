import math

import numpy as np
import pytest
from scipy.stats import binom

from bosonval.distributions import ModeConfig, build_distribution, centered_input, support_array
from bosonval.errors import ConfigError
from bosonval.experiments import (
    DEFAULT_SET_SIZES,
    CurvePoint,
    ExperimentConfig,
    haar_ensemble_curve,
    lr_success_curve,
    nmin_for_unitary,
    nmin_search,
    pooled,
    success_curve,
)
from bosonval.interferometer import Interferometer, haar_unitary, permutation_unitary
from bosonval.validators import aa_statistics, aa_threshold, lr_scores


def cfg(**kw):
    base = dict(n=3, m=7, set_sizes=(10, 50), trials_per_point=200, unitary_count=3, master_seed=5, exclusion_cap=200)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize(
    "field,kw",
    [
        ("set_sizes", dict(set_sizes=())),
        ("set_sizes", dict(set_sizes=(10, 5))),
        ("trials_per_point", dict(trials_per_point=0)),
        ("success_threshold", dict(success_threshold=1.0)),
        ("m", dict(m=2)),
        ("input_modes", dict(input_modes=(0, 1))),
        ("k1", dict(k1=1.1)),
    ],
)
def test_config_validation_names_field(field, kw):
    with pytest.raises(ConfigError) as err:
        cfg(**kw)
    assert err.value.field == field


def test_config_from_dict():
    c = ExperimentConfig.from_dict({"n": 3, "m": 9, "set_sizes": [1, 2]})
    assert c.set_sizes == (1, 2) and c.input == centered_input(9, 3)
    assert ExperimentConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 3, "m": 9, "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 3})


def test_default_grid():
    assert DEFAULT_SET_SIZES == (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)


def test_single_trial_single_event():
    c = cfg(set_sizes=(1,), trials_per_point=1)
    curve = success_curve(c.unitary(0), c.input, "indistinguishable", c)
    assert curve.points[0].successes in (0, 1)
    assert curve.points[0].estimate in (0.0, 1.0)


def _exact_majority(u, s, source, size):
    stats = aa_statistics(u, s, support_array(u.modes, s.n))
    labelled = stats > aa_threshold(s.n, u.modes)
    if source == "uniform":
        a = labelled.mean()
    else:
        a = build_distribution(u, s, source).probs[labelled].sum()
    return binom.sf(size // 2, size, a)  # P(strictly more BS votes than uniform)


@pytest.mark.parametrize("source", ["indistinguishable", "uniform", "distinguishable"])
def test_success_curve_matches_binomial_oracle(source):
    c = cfg(m=9, set_sizes=(1, 4, 25, 100, 301), trials_per_point=4000)
    for index in range(3):
        u = c.unitary(index)
        curve = success_curve(u, c.input, source, c, unitary_index=index)
        for point in curve.points:
            exact = _exact_majority(u, c.input, source, point.set_size)
            sigma = math.sqrt(max(exact * (1 - exact), 1e-4) / point.trials)
            assert abs(point.estimate - exact) <= 5 * sigma


def _exact_lr_positive(model_probs, scores, size):
    """P(sum of `size` iid scores > 0), by convolving the score distribution."""
    pmf = np.zeros(5)
    for prob, sc in zip(model_probs, scores):
        pmf[sc + 2] += prob
    dist = np.array([1.0])
    for _ in range(size):
        dist = np.convolve(dist, pmf)
    offset = 2 * size  # index of D = 0
    return dist[offset + 1 :].sum()


def test_lr_curve_matches_convolution_oracle():
    c = cfg(set_sizes=(1, 10, 40), trials_per_point=4000)
    u = c.unitary(1)
    ind, dis = lr_success_curve(u, c.input, c, unitary_index=1)
    p = build_distribution(u, c.input, "indistinguishable")
    q = build_distribution(u, c.input, "distinguishable")
    scores, _ = lr_scores(p, q)
    for curve, model in ((ind, p), (dis, q)):
        for point in curve.points:
            exact = _exact_lr_positive(model.probs, scores, point.set_size)
            sigma = math.sqrt(max(exact * (1 - exact), 1e-4) / point.trials)
            assert abs(point.estimate - exact) <= 5 * sigma


def test_lr_curve_permutation_unitary_never_positive():
    c = cfg(set_sizes=(1, 20), trials_per_point=50)
    u = permutation_unitary([3, 4, 5, 6, 0, 1, 2])
    ind, dis = lr_success_curve(u, c.input, c)
    assert all(p.successes == 0 for p in ind.points + dis.points)


def test_converging_unitaries_succeed_at_500():
    c = ExperimentConfig(n=3, m=9, set_sizes=(500,), trials_per_point=1000, unitary_count=1, master_seed=2)
    rates = []
    for index in range(12):
        curve = success_curve(c.unitary(index), c.input, "indistinguishable", c, unitary_index=index)
        if curve.converging:
            rates.append(curve.at(500).estimate)
    # marginal converging unitaries can sit a little below 0.95 at 500 events; the average does not
    assert len(rates) >= 5
    assert np.mean(rates) >= 0.95
    assert np.median(rates) >= 0.95


def test_converging_flag_consistent_with_cap_point():
    c = cfg(set_sizes=(10, 200), exclusion_cap=200, unitary_count=6)
    result = haar_ensemble_curve(c)
    for curve in result.bs_curves:
        assert curve.cap_point == curve.at(200)
        assert curve.converging == (curve.at(200).estimate >= c.success_threshold)
    assert result.converging_count == result.bs_band[0].count
    assert all(p.count == c.unitary_count for p in result.uniform_band)


def test_ensemble_of_one_is_the_curve():
    c = cfg(unitary_count=1, m=9, exclusion_cap=2000)
    result = haar_ensemble_curve(c)
    if not result.bs_curves[0].converging:
        pytest.skip("first unitary does not converge")
    for band_point, point in zip(result.bs_band, result.bs_curves[0].points):
        assert band_point.mean == point.estimate and band_point.std == 0


def test_ensemble_all_excluded():
    c = cfg(set_sizes=(1,), exclusion_cap=1, trials_per_point=100)
    with pytest.raises(ArithmeticError):
        haar_ensemble_curve(c)


def test_band_is_mean_plus_minus_1_5_std():
    c = cfg(unitary_count=8, m=9, exclusion_cap=1000)
    result = haar_ensemble_curve(c)
    kept = [curve for curve in result.bs_curves if curve.converging]
    for i, band_point in enumerate(result.bs_band):
        est = np.array([curve.points[i].estimate for curve in kept])
        assert band_point.mean == pytest.approx(est.mean())
        assert band_point.upper - band_point.mean == pytest.approx(1.5 * est.std())


def test_reproducible_and_worker_independent():
    c = cfg(unitary_count=5)
    a = haar_ensemble_curve(c, workers=1)
    b = haar_ensemble_curve(c, workers=4)
    assert a.bs_curves == b.bs_curves and a.uniform_curves == b.uniform_curves
    assert nmin_search(c, workers=1).results == nmin_search(c, workers=3).results
    other = haar_ensemble_curve(ExperimentConfig(**{**c.to_dict(), "set_sizes": (10, 50), "master_seed": 6}))
    assert other.bs_curves != a.bs_curves


def test_nmin_identity_on_single_point_grid():
    m = 9
    c = ExperimentConfig(n=3, m=m, set_sizes=(1,), trials_per_point=1000, unitary_count=1, exclusion_cap=10)
    result = nmin_for_unitary(Interferometer(np.eye(m)), c.input, c)
    assert result.n_min in (1, None)
    assert result.n_min == 1  # uniform data hits the BS label with probability 1/84 per event


def test_nmin_criteria_hold_when_reached():
    c = ExperimentConfig(n=3, m=9, trials_per_point=500, unitary_count=6, master_seed=3)
    for r in nmin_search(c).results:
        if r.reached:
            assert r.bs_point.estimate >= 0.95 and r.uniform_point.estimate <= 0.05
            assert r.bs_point.set_size == r.n_min == r.uniform_point.set_size


def test_curve_point_stats_and_pooling():
    p = CurvePoint(10, 3, 12)
    assert p.estimate == 0.25 and p.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 12))
    c = cfg(set_sizes=(5,), trials_per_point=10)
    curves = [success_curve(c.unitary(i), c.input, "uniform", c, i) for i in range(3)]
    total = pooled(curves)[0]
    assert total.trials == 30 and total.successes == sum(cv.points[0].successes for cv in curves)


def test_mismatched_instance_rejected():
    c = cfg()
    with pytest.raises(ConfigError):
        success_curve(haar_unitary(5, 0), centered_input(5, 3), "uniform", c)
