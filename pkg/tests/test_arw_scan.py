from __future__ import annotations

import math

import pytest

from artifact.arw import ScanRow, ScanTable, drift_slope, fixation_scan
from artifact.errors import ParameterError
from artifact.sampling import SeededStream


def test_zero_density_never_reaches_origin():
    tab = fixation_scan([0.0], [1.0], [10], [1], 10, SeededStream(1))
    assert [r.estimate for r in tab.rows] == [0.0]


def test_rows_sorted_by_mu_lambda_M_r():
    tab = fixation_scan([0.3, 0.1], [2.0, 1.0], [6, 3], [4, 1], 3, SeededStream(2))
    keys = [(r.mu, r.lam, r.M, r.r) for r in tab.rows]
    assert keys == sorted(keys) and len(keys) == 16


def test_estimates_non_increasing_in_r():
    tab = fixation_scan([0.4], [1.0], [10], [1, 2, 4, 8], 200, SeededStream(3))
    est = [r.estimate for r in tab.select(0.4, 1.0, 1) + tab.select(0.4, 1.0, 2)
           + tab.select(0.4, 1.0, 4) + tab.select(0.4, 1.0, 8)]
    assert all(a >= b for a, b in zip(est, est[1:]))


def test_capped_runs_are_counted_separately():
    tab = fixation_scan([2.0], [1.0], [5], [1], 20, SeededStream(4), step_cap=3)
    row = tab.rows[0]
    assert row.not_stabilized > 0
    assert row.completed == row.trials - row.not_stabilized
    if row.completed == 0:
        assert math.isnan(row.estimate)


def test_thread_count_does_not_change_results():
    args = ([0.3, 0.6], [1.0], [5, 8], [1, 3], 20, SeededStream(5))
    assert fixation_scan(*args, threads=1).to_dict() == fixation_scan(*args, threads=3).to_dict()


def test_window_variant_dominates_origin_estimate():
    a = fixation_scan([0.5], [1.0], [6], [2], 100, SeededStream(6))
    b = fixation_scan([0.5], [1.0], [6], [2], 100, SeededStream(6), window=2)
    assert b.rows[0].hits >= a.rows[0].hits


def test_scan_rejects_bad_grids():
    with pytest.raises(ParameterError):
        fixation_scan([], [1.0], [5], [1], 5, SeededStream(7))
    with pytest.raises(ParameterError):
        fixation_scan([0.1], [1.0], [5], [0], 5, SeededStream(7))


def test_table_round_trip():
    tab = fixation_scan([0.2], [1.0], [4], [1, 2], 5, SeededStream(8))
    assert ScanTable.from_dict(tab.to_dict()).to_dict() == tab.to_dict()


def rows_with(estimates, Ms=(20, 40, 80), n=1000):
    return [ScanRow(0.2, 1.0, M, 1, n, int(round(e * n)), 0) for M, e in zip(Ms, estimates)]


def test_slope_detects_clear_increase():
    assert drift_slope(rows_with([0.2, 0.5, 0.9])).positive


def test_slope_flat_rows_admit_no_increase():
    fit = drift_slope(rows_with([0.3, 0.3, 0.3]))
    assert fit.admits_no_increase and abs(fit.slope) < 1e-12


def test_slope_needs_two_sizes():
    with pytest.raises(ParameterError):
        drift_slope(rows_with([0.3], Ms=(20,)))
