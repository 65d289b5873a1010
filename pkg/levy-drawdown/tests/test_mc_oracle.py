"""Tests for the Monte Carlo oracle."""

from __future__ import annotations

import dataclasses

import numpy as np
import pandas as pd
import pytest

from levy_drawdown.config import SimConfig
from levy_drawdown.drawdown import ConstantFloor, DrawdownSpec, Linear, Zero
from levy_drawdown.errors import DomainError, ParameterError
from levy_drawdown.gerber_shiu import (
    dividend_ruin_probability,
    dividend_running_max_profile,
    drawdown_probability,
    drawdown_probability_limit,
    joint_laplace,
    tax_ruin_probability,
)
from levy_drawdown.levy_models import BrownianDrift
from levy_drawdown.mc_oracle import (
    CSV_COLUMNS,
    Estimate,
    SimBatch,
    SimRecord,
    check_dividend_observations,
    check_tax_observations,
    discounted_hit,
    estimate,
    estimate_batch,
    hit_indicator,
    simulate_dividend,
    simulate_drawdown,
    simulate_drawdown_many,
    simulate_tax,
    summarize,
    write_records_csv,
)

CASE_IV = DrawdownSpec(Linear(0.6, 0.5))
CASES = {
    "case_I": DrawdownSpec(),
    "case_II": DrawdownSpec(Linear(0.3, 0.5)),
    "case_III": DrawdownSpec(Linear(0.5, 0.5)),
    "case_IV": CASE_IV,
}


# ======================================================================
# estimators
# ======================================================================

class TestEstimates:
    def test_summarize(self):
        est = summarize([0.0, 1.0, 1.0, 0.0])
        assert est.mean == 0.5
        assert est.n == 4
        assert est.stderr == pytest.approx(np.std([0, 1, 1, 0], ddof=1) / 2.0)

    def test_within(self):
        est = Estimate(mean=0.30, stderr=0.01, n=100)
        assert est.within(0.325)
        assert not est.within(0.35)
        assert est.within(0.35, floor=0.03)

    def test_discounted_hit(self):
        record = SimRecord(True, 3.0, 1.0, 0.5, -0.2, 2.0, False, False)
        assert discounted_hit(0.5, 0.25)(record) == pytest.approx(np.exp(-0.5 - 0.5))
        assert discounted_hit(0.5, 0.25, constrained=True)(record) == 0.0
        assert discounted_hit(0.0, 0.0, omega=lambda y, w_at: y - w_at)(record) == pytest.approx(0.7)
        missed = dataclasses.replace(record, hit=False)
        assert discounted_hit(0.0, 0.0)(missed) == 0.0
        assert hit_indicator(record) == 1.0


# ======================================================================
# simulated drawdown probabilities
# ======================================================================

class TestAgainstClosedForms:
    def test_cramer_lundberg_ruin(self, loaded_cl, small_sim):
        est = estimate(loaded_cl, DrawdownSpec(), 1.0, small_sim, hit_indicator)
        assert est.n == small_sim.n_paths
        assert est.within(0.5 * np.exp(-0.5), n_sigma=4.0, floor=0.005)

    def test_brownian_ruin(self, small_sim):
        model = BrownianDrift(mu=1.1, sigma=1.0)
        est = estimate(model, DrawdownSpec(), 1.0, small_sim, hit_indicator)
        assert est.within(np.exp(-2.2), n_sigma=4.0, floor=0.005)

    def test_linear_drawdown(self, loaded_cl, small_sim):
        est = estimate(loaded_cl, CASE_IV, 1.0, small_sim, hit_indicator)
        assert est.within(drawdown_probability_limit(loaded_cl, CASE_IV, 1.0), n_sigma=4.0, floor=0.01)

    def test_constrained_transform(self, loaded_cl, small_sim):
        spec = DrawdownSpec(Zero(), ConstantFloor(0.5))
        est = estimate(loaded_cl, spec, 2.0, small_sim, discounted_hit(0.1, 0.2, constrained=True))
        expected = joint_laplace(loaded_cl, spec, 0.1, 0.2, 2.0)
        assert expected >= 0.0
        assert est.within(expected, n_sigma=4.0, floor=0.01)

    @pytest.mark.parametrize("case", list(CASES))
    @pytest.mark.parametrize(
        "family",
        [pytest.param("cl_model", marks=pytest.mark.slow), "bm_model", "jd_model"],
    )
    def test_base_models_all_cases(self, request, family, case, small_sim):
        model = request.getfixturevalue(family)
        # the thin loading of cl_model leaves late ruins; run it much longer
        horizon = 3000.0 if family == "cl_model" else 100.0
        cfg = dataclasses.replace(small_sim, horizon=horizon)
        spec = CASES[case]
        est = estimate(model, spec, 1.0, cfg, hit_indicator)
        assert est.within(drawdown_probability(model, spec, 1.0), n_sigma=3.0, floor=0.005)

    @pytest.mark.slow
    def test_full_size_cases(self, cl_model, bm_model, jd_model):
        for model, horizon in ((cl_model, 3000.0), (bm_model, 200.0), (jd_model, 200.0)):
            cfg = SimConfig(n_paths=100_000, horizon=horizon, workers=2)
            batches = simulate_drawdown_many(model, list(CASES.values()), 1.0, cfg)
            for spec, batch in zip(CASES.values(), batches):
                est = estimate_batch(batch, hit_indicator)
                assert est.within(drawdown_probability_limit(model, spec, 1.0), n_sigma=3.0, floor=0.003)


# ======================================================================
# pathwise structure
# ======================================================================

class TestPaths:
    def test_same_seed_same_paths(self, loaded_cl, small_sim):
        first = simulate_drawdown(loaded_cl, CASE_IV, 1.0, small_sim)
        second = simulate_drawdown(loaded_cl, CASE_IV, 1.0, small_sim)
        pd.testing.assert_frame_equal(first.to_frame(), second.to_frame())

    def test_independent_of_workers(self, loaded_cl):
        cfg = SimConfig(n_paths=2000, chunk_size=500, horizon=40.0, seed=99)
        serial = simulate_drawdown(loaded_cl, CASE_IV, 1.0, cfg)
        pooled = simulate_drawdown(loaded_cl, CASE_IV, 1.0, dataclasses.replace(cfg, workers=2))
        pd.testing.assert_frame_equal(serial.to_frame(), pooled.to_frame())

    def test_drawdown_precedes_ruin(self, cl_model, small_sim):
        ruin, drawdown = simulate_drawdown_many(cl_model, [DrawdownSpec(), CASE_IV], 1.0, small_sim)
        assert np.all(drawdown.hit[ruin.hit])
        assert np.all(drawdown.tau[ruin.hit] <= ruin.tau[ruin.hit])

    def test_records_are_consistent(self, bm_model, small_sim):
        batch = simulate_drawdown(bm_model, CASE_IV, 1.0, small_sim)
        hit = batch.hit
        level = 0.6 * batch.s_max[hit] - 0.5
        assert np.all(batch.ell[hit] <= batch.tau[hit])
        assert np.all(batch.s_max[hit] >= 1.0)
        assert np.all(np.isnan(batch.tau[~hit]))
        assert np.all(batch.w_at[hit] <= level + 1e-12)
        np.testing.assert_array_equal(batch.y_before[hit], batch.w_at[hit])
        # grid overshoot beyond three step deviations is rare
        assert batch.creeping[hit].mean() > 0.98

    def test_new_maximum_at_step_end_sets_ell_there(self, bm_model):
        cfg = SimConfig(n_paths=500, horizon=20.0, dt=0.01, max_dt=0.01, adaptive=False, bridge_correction=False, seed=4)
        batch = simulate_drawdown(bm_model, CASE_IV, 1.0, cfg)
        ell = batch.ell[batch.hit]
        np.testing.assert_allclose(ell / cfg.dt, np.round(ell / cfg.dt), atol=1e-6)

    def test_creeping_follows_overshoot(self, jd_model, small_sim):
        batch = simulate_drawdown(jd_model, DrawdownSpec(), 1.0, small_sim)
        hit = batch.hit
        overshoot = -batch.w_at[hit]
        creeping = batch.creeping[hit]
        assert creeping.any() and not creeping.all()
        # a creeping record sits within a few grid deviations of the boundary
        assert np.all(overshoot[creeping] <= 3.0 * jd_model.sigma * np.sqrt(small_sim.max_dt))
        assert np.median(overshoot[~creeping]) > 3.0 * jd_model.sigma * np.sqrt(small_sim.dt)

    def test_claim_drawdowns_overshoot(self, cl_model, small_sim):
        batch = simulate_drawdown(cl_model, DrawdownSpec(), 1.0, small_sim)
        hit = batch.hit
        assert not batch.creeping.any()
        assert np.all(batch.w_at[hit] < 0.0)
        assert np.all(batch.y_before[hit] >= 0.0)

    def test_rejects_bad_input(self, cl_model):
        with pytest.raises(DomainError):
            simulate_drawdown(cl_model, DrawdownSpec(), 0.0, SimConfig(n_paths=10))
        with pytest.raises(ParameterError):
            simulate_drawdown(cl_model, DrawdownSpec(), 1.0, SimConfig(n_paths=0))


# ======================================================================
# taxed and reflected surplus
# ======================================================================

class TestShadows:
    def test_tax_matches_drawdown_of_untaxed_path(self, loaded_cl, small_sim):
        batch = simulate_tax(loaded_cl, 0.3, 1.0, small_sim)
        gaps = check_tax_observations(batch, 0.3, 1.0)
        assert gaps["hit_mismatch"] == 0.0
        for key in ("ruin_time", "running_max", "surplus_before", "surplus_at"):
            assert gaps[key] < 1e-9

    def test_tax_ruin_frequency(self, loaded_cl, small_sim):
        batch = simulate_tax(loaded_cl, 0.3, 1.0, small_sim)
        est = estimate_batch(batch, hit_indicator)
        assert est.within(tax_ruin_probability(loaded_cl, 0.3, 1.0), n_sigma=4.0, floor=0.01)

    def test_dividend_matches_barrier_drawdown(self, loaded_cl, small_sim):
        batch = simulate_dividend(loaded_cl, 3.0, 1.0, small_sim)
        gaps = check_dividend_observations(batch, 3.0)
        assert gaps["hit_mismatch"] == 0.0
        for key in ("ruin_time", "running_max", "surplus_before", "surplus_at"):
            assert gaps[key] < 1e-9
        assert np.all(batch.s_max <= 3.0 + 1e-12)

    def test_dividend_ruin_frequency(self, loaded_cl, small_sim):
        b, x = 1.5, 1.0
        batch = simulate_dividend(loaded_cl, b, x, small_sim)
        assert estimate_batch(batch, hit_indicator).within(dividend_ruin_probability(loaded_cl, b, x), n_sigma=4.0, floor=0.005)
        discounted = estimate_batch(batch, discounted_hit(0.1, 0.1))
        assert discounted.within(dividend_ruin_probability(loaded_cl, b, x, q=0.1), n_sigma=4.0, floor=0.005)
        at_barrier = summarize((batch.hit & (batch.s_max >= b - 1e-9)).astype(float))
        assert at_barrier.within(sum(dividend_running_max_profile(loaded_cl, b, 0.0, 0.0, x, b)), n_sigma=4.0, floor=0.005)

    def test_dividend_needs_start_below_barrier(self, loaded_cl, small_sim):

        with pytest.raises(DomainError):
            simulate_dividend(loaded_cl, 1.0, 2.0, small_sim)


# ======================================================================
# batches and CSV
# ======================================================================

class TestBatches:
    def test_empty_and_concat(self):
        batch = SimBatch.concat([SimBatch.empty(2), SimBatch.empty(3)])
        assert len(batch) == 5
        assert not batch.hit.any()
        assert batch.constraint_ok.all()

    def test_records_round_trip_columns(self, loaded_cl):
        batch = simulate_drawdown(loaded_cl, DrawdownSpec(), 1.0, SimConfig(n_paths=50, horizon=20.0, seed=3))
        records = list(batch.records())
        assert len(records) == 50
        assert [r.hit for r in records] == batch.hit.tolist()
        assert tuple(batch.to_frame().columns) == CSV_COLUMNS

    def test_companion_columns(self, loaded_cl, small_sim):
        frame = simulate_tax(loaded_cl, 0.2, 1.0, small_sim).to_frame()
        assert "drawdown_hit" in frame.columns
        assert "drawdown_s_max" in frame.columns

    def test_write_records_csv(self, loaded_cl, tmp_path):
        batch = simulate_drawdown(loaded_cl, DrawdownSpec(), 1.0, SimConfig(n_paths=20, horizon=20.0, seed=5))
        path = write_records_csv(batch, tmp_path / "out" / "records.csv", {"seed": 5, "model": "cramer_lundberg"})
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# seed=5"
        assert lines[1] == "# model=cramer_lundberg"
        assert lines[2] == ",".join(CSV_COLUMNS)
        assert len(pd.read_csv(path, comment="#")) == 20
