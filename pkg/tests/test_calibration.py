import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from gconv_planner.blueprints import config_network
from gconv_planner.calibration import (
    CalibrationError,
    EnergyProxyRegressor,
    MeasurementRecord,
    calibrate,
)
from gconv_planner.core import CostBreakdown, network_cost
from gconv_planner.formats import bundled_measurements
from gconv_planner.planner import EnergyModelParams, energy_proxy

COSTS = {
    "c1": CostBreakdown(1_000_000, 40_000, 60_000),
    "c2": CostBreakdown(5_000_000, 20_000, 60_000),
    "c3": CostBreakdown(800_000, 300_000, 90_000),
    "c4": CostBreakdown(2_500_000, 7_000, 11_000),
    "c5": CostBreakdown(9_000_000, 900_000, 100_000),
    "c6": CostBreakdown(300_000, 5_000, 400_000),
}


def synth(beta, k, ids=COSTS):
    p = EnergyModelParams(beta=beta, scale_k=k)
    return [MeasurementRecord(cid, 1, "sim", energy_proxy(COSTS[cid], p)) for cid in ids]


def test_recover_half_unit():
    params, report = calibrate(synth(0.5, 1.0, ["c1", "c2", "c3"]), COSTS)
    assert params.beta == pytest.approx(0.5, abs=1e-9)
    assert params.scale_k == pytest.approx(1.0, abs=1e-9)
    assert not report.beta_clamped


def test_recover_six_configs():
    params, report = calibrate(synth(0.3, 2.5), COSTS)
    assert params.beta == pytest.approx(0.3, abs=1e-9)
    assert params.scale_k == pytest.approx(2.5, abs=1e-9)
    assert report.r2_log == pytest.approx(1.0, abs=1e-12)
    assert report.spearman_rho == pytest.approx(1.0)
    assert max(abs(r) for r in report.residuals.values()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.1, 50))
def test_noiseless_round_trip(beta, k):
    params, report = calibrate(synth(beta, k), COSTS)
    assert params.beta == pytest.approx(beta, abs=1e-9)
    assert params.scale_k == pytest.approx(k, rel=1e-9)


def test_base_params_carried_over():
    base = EnergyModelParams(alpha=0.5, gamma=7.0, target_G=8)
    params, _ = calibrate(synth(0.4, 1.0), COSTS, base)
    assert (params.alpha, params.gamma, params.target_G) == (0.5, 7.0, 8)


def test_too_few_records():
    with pytest.raises(CalibrationError):
        calibrate(synth(0.5, 1.0, ["c1", "c2"]), COSTS)


def test_unknown_configs_are_skipped():
    recs = synth(0.5, 1.0, ["c1", "c2"]) + [MeasurementRecord("nope", 1, "sim", 3.0)]
    with pytest.raises(CalibrationError, match="at least 3"):
        calibrate(recs, COSTS)
    recs = synth(0.5, 1.0, ["c1", "c2", "c3"]) + [MeasurementRecord("nope", 1, "sim", 3.0)]
    _, report = calibrate(recs, COSTS)
    assert report.skipped == ["nope@sim/B=1"]
    assert report.n_records == 3


def test_degenerate_design():
    same = {f"d{i}": CostBreakdown(1000 * (i + 1), 10 * (i + 1), 0) for i in range(4)}
    recs = [MeasurementRecord(cid, 1, "sim", 1.0 + i) for i, cid in enumerate(same)]
    with pytest.raises(CalibrationError, match="degenerate"):
        calibrate(recs, same)


def test_out_of_range_beta_is_clamped():
    # EPF grows with footprint faster than any beta in (0, 1) allows
    recs = [
        MeasurementRecord(cid, 1, "sim", float(COSTS[cid].footprint) ** 1.5 / COSTS[cid].mc ** 0.5)
        for cid in COSTS
    ]
    params, report = calibrate(recs, COSTS)
    assert report.beta_clamped
    assert report.beta_unconstrained > 1
    assert 0 < params.beta < 1


def test_measurement_record_validation():
    with pytest.raises(ValueError):
        MeasurementRecord("x", 1, "d", 0.0)
    with pytest.raises(ValueError):
        MeasurementRecord("x", 0, "d", 1.0)


def test_regressor_estimator_api():
    X = np.array([[c.mc, c.footprint] for c in COSTS.values()], dtype=float)
    y = 3.0 * X[:, 0] ** 0.6 * X[:, 1] ** 0.4
    est = EnergyProxyRegressor()
    assert est.get_params() == {"beta": None}
    est.fit(X, y)
    np.testing.assert_allclose(est.predict(X), y, rtol=1e-10)
    assert est.score(X, y) == pytest.approx(1.0)
    fixed = clone(est).set_params(beta=0.4).fit(X, y)
    assert fixed.scale_k_ == pytest.approx(3.0, rel=1e-10)
    assert est.to_params().beta == pytest.approx(0.4, abs=1e-10)


def test_regressor_unfitted_predict_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        EnergyProxyRegressor().predict([[1.0, 1.0]])


def test_bundled_data_fit_completes():
    records = [r for r in bundled_measurements() if r.device == "P100" and r.batch_size == 16
               and "/fggc/" in r.config_id and r.config_id.startswith("mobilenet_v1")]
    assert len(records) == 5
    costs = {r.config_id: network_cost(config_network(r.config_id))[0] for r in records}
    params, report = calibrate(records, costs)
    assert 0 < params.beta < 1
    assert -1 <= report.spearman_rho <= 1
    assert report.note
