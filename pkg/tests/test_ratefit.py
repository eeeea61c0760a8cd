import numpy as np
import pytest

from npspec.geometry import Ellipse, SmoothTest
from npspec.ratefit import (FitWindowError, compare_with_theory, default_window,
                            fit_exponential, fit_polynomial, model_prediction)


def series(fn, j0=1, j1=12):
    return [(j, fn(j)) for j in range(j0, j1 + 1)]


def test_fit_exponential_exact():
    fit = fit_exponential(series(lambda j: 3.0 * np.exp(-1.1 * j), 1, 10), (1, 10))
    assert fit.C == pytest.approx(3.0, abs=1e-12)
    assert fit.rate == pytest.approx(1.1, abs=1e-12)
    assert fit.residual < 1e-12


def test_fit_exponential_prefactor_exact():
    fit = fit_exponential(series(lambda j: 2.0 * j * np.exp(-0.7 * j)), (1, 12),
                          prefactor=True)
    assert fit.C == pytest.approx(2.0, abs=1e-10)
    assert fit.rate == pytest.approx(0.7, abs=1e-10)


def test_fit_polynomial_exact():
    fit = fit_polynomial(series(lambda j: 5.0 * j**-2.0), (1, 12))
    assert fit.C == pytest.approx(5.0, abs=1e-12)
    assert fit.rate == pytest.approx(-2.0, abs=1e-12)
    fit = fit_polynomial(series(lambda j: j**-3.5), (1, 12))
    assert fit.rate == pytest.approx(-3.5, abs=1e-12)


def test_fit_recovery_random_draws(rng):
    for _ in range(20):
        C = rng.uniform(0.5, 5.0)
        eps = rng.uniform(0.2, 2.5)
        fit = fit_exponential(series(lambda j: C * np.exp(-eps * j)), (1, 12))
        assert fit.C == pytest.approx(C, rel=1e-10)
        assert fit.rate == pytest.approx(eps, abs=1e-10)
        d = rng.uniform(-4.0, -0.5)
        pfit = fit_polynomial(series(lambda j: C * j**d), (1, 12))
        assert pfit.C == pytest.approx(C, rel=1e-10)
        assert pfit.rate == pytest.approx(d, abs=1e-10)


def test_fit_scale_invariance():
    data = series(lambda j: 1.7 * np.exp(-0.9 * j))
    scaled = [(j, 13.0 * d) for j, d in data]
    f1 = fit_exponential(data, (1, 12))
    f2 = fit_exponential(scaled, (1, 12))
    assert f2.rate == pytest.approx(f1.rate, abs=1e-12)
    assert f2.C == pytest.approx(13.0 * f1.C, rel=1e-10)


def test_fit_rejects_nonpositive_distance():
    data = [(1, 0.5), (2, 0.25), (3, 0.0), (4, 0.05), (5, 0.01)]
    with pytest.raises(FitWindowError, match="index 3"):
        fit_exponential(data, (1, 5))


def test_fit_rejects_short_window():
    with pytest.raises(FitWindowError):
        fit_exponential([(1, 0.5), (2, 0.2), (3, 0.1)], (1, 3))


def test_default_window_skips_and_stops():
    levels = [(1, 0.3), (2, 0.1), (3, 0.03), (4, 0.01), (5, 1e-15), (6, 3e-3)]
    assert default_window(levels) == (3, 4)
    with pytest.raises(FitWindowError):
        default_window([(1, 0.3), (2, 0.1)])


def test_model_prediction_shapes():
    fit = fit_exponential(series(lambda j: 2.0 * j * np.exp(-0.7 * j)), (1, 12),
                          prefactor=True)
    pred = model_prediction(fit, [1, 2, 3])
    assert np.allclose(pred, [2 * 1 * np.exp(-0.7), 2 * 2 * np.exp(-1.4), 2 * 3 * np.exp(-2.1)],
                       rtol=1e-9)


# verdicts -----------------------------------------------------------------------


def test_verdict_lower_bound_passes():
    fit = fit_exponential(series(lambda j: np.exp(-1.05 * j)), (1, 12))
    vs = compare_with_theory(fit, eps_q=np.log(3.0))
    bound = [v for v in vs if v["quote_anchor"] == "analytic-rate-lower-bound"][0]
    assert bound["theoretical"] == pytest.approx(np.log(3.0) / 8)
    assert bound["pass"] is True


def test_verdict_minus_cluster_rate():
    fit = fit_exponential(series(lambda j: np.exp(-2.15 * j)), (1, 12))
    fit = type(fit)(**{**fit.__dict__, "cluster": "minus"})
    vs = compare_with_theory(fit, curve=Ellipse(2.0, 1.0))
    rate = [v for v in vs if v["quote_anchor"] == "ellipse-minus-cluster-rate"][0]
    assert rate["theoretical"] == pytest.approx(2 * np.log(3.0))
    assert rate["pass"] is True  # within 15%


def test_verdict_smooth_bound_fails_when_too_shallow():
    fit = fit_polynomial(series(lambda j: j**-1.0), (1, 12))
    vs = compare_with_theory(fit, smoothness=3.5)
    v = vs[0]
    assert v["theoretical"] == pytest.approx(-2.0)
    assert v["pass"] is False
    assert v["fitted"] == pytest.approx(-1.0, abs=1e-10)


def test_verdict_unknown_radius_not_checkable():
    fit = fit_exponential(series(lambda j: np.exp(-1.0 * j)), (1, 12))
    vs = compare_with_theory(fit, eps_q=None)
    assert vs[0]["pass"] is None
    assert "not checkable" in vs[0]["claim"]


def test_verdict_suppressed_on_bad_residual():
    noisy = [(j, np.exp(-j) * (1.0 + (0.9 if j % 2 else -0.6))) for j in range(1, 12)]
    fit = fit_exponential(noisy, (1, 11))
    assert fit.residual > 0.5
    vs = compare_with_theory(fit, eps_q=1.0)
    assert len(vs) == 1 and vs[0]["pass"] is None


def test_verdict_smoothtest_curve_supplies_exponent():
    fit = fit_polynomial(series(lambda j: j**-4.0), (1, 12))
    vs = compare_with_theory(fit, curve=SmoothTest(4.5, 0.05, 64))
    assert vs[0]["theoretical"] == pytest.approx(-2.0)
    assert vs[0]["pass"] is True
