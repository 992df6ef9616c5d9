from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from floquet_forge import models, verify
from floquet_forge.effective import heff_coefficients
from floquet_forge.magnus import EffectiveSeries, fm_coefficients
from floquet_forge.operator_core import DimensionError
from floquet_forge.trigpoly import FourierOp

seeds = st.integers(min_value=0, max_value=2**32 - 1)
GRID = verify.geometric_grid(0.2, 0.5, 7)
HORIZON_GRID = [0.05, 0.07, 0.1, 0.14, 0.2]


@pytest.fixture(scope="module")
def rabi24():
    return models.build({"variant": "RABI", "fock_dim": 24})


@pytest.fixture(scope="module")
def rabi_cache():
    return {}


@pytest.fixture(scope="module")
def banded8():
    return models.build({"variant": "RANDOM_BANDED"})


@pytest.fixture(scope="module")
def constant():
    return models.build({"variant": "RANDOM_BANDED", "num_modes": 0})


class TestFitSlope:
    @given(seeds, st.floats(0.5, 5.0), st.floats(1e-3, 1e3))
    def test_noisy_power_law(self, seed, p, c):
        rng = np.random.default_rng(seed)
        ts = np.array(GRID)
        errs = c * ts**p * (1 + 0.01 * rng.standard_normal(ts.size))
        slope, intercept, r2 = verify.fit_slope(ts, errs)
        assert abs(slope - p) <= 0.05
        assert r2 > 0.99

    def test_exact_line(self):
        slope, intercept, r2 = verify.fit_slope([1.0, 2.0, 4.0], [3.0, 12.0, 48.0])
        assert slope == pytest.approx(2.0) and np.exp(intercept) == pytest.approx(3.0) and r2 == pytest.approx(1.0)

    def test_too_few(self):
        assert all(np.isnan(verify.fit_slope([0.1], [1.0])))


class TestCompareSeries:
    def test_identical(self, banded8):
        s = heff_coefficients(banded8.h, 2)
        assert verify.compare_series(s, s) == [0.0, 0.0, 0.0]

    @given(seeds)
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = EffectiveSeries(tuple(rng.standard_normal((3, 4, 4))), "FM")
        b = EffectiveSeries(tuple(rng.standard_normal((3, 4, 4))), "EFF")
        assert verify.compare_series(a, b) == verify.compare_series(b, a)

    def test_mismatch(self, banded8):
        s = heff_coefficients(banded8.h, 2)
        with pytest.raises(DimensionError):
            verify.compare_series(s, s.truncated(1))

    def test_random_banded_dual_routes(self, banded8):
        d = verify.compare_series(heff_coefficients(banded8.h, 4), fm_coefficients(banded8.h, 4))
        assert max(d) <= 1e-10

    def test_rabi_interior(self):
        model = models.build({"variant": "RABI"})
        d = verify.compare_series(heff_coefficients(model.h, 2), fm_coefficients(model.h, 2),
                                  verify.model_interior(model))
        assert max(d) <= 1e-9


class TestScalingReport:
    def make(self, errors, floor=1e-10):
        spec = models.ModelSpec("RANDOM_BANDED")
        pts = [(t, 1, e) for t, e in zip(GRID, errors)]
        return verify.ScalingReport(spec, 1, "strobo", pts, floor, 3.0)

    def test_sorted_and_floor(self):
        errs = [3e-3 * t**3 for t in GRID]
        errs[-1] = 1e-12
        rep = self.make(errs)
        assert [p[0] for p in rep.points] == sorted(GRID)
        assert rep.floor_flagged and rep.fitted_points == 6
        assert rep.fitted_slope == pytest.approx(3.0)
        assert rep.within()

    def test_all_floored_passes_window(self):
        rep = self.make([1e-13] * 7)
        assert rep.all_floored and rep.floor_flagged and rep.within()
        assert np.isnan(rep.fitted_slope)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            self.make([-1.0] * 7)

    def test_csv_layout(self):
        rep = self.make([t**3 for t in GRID])
        rows = list(csv.reader(io.StringIO(rep.to_csv())))
        assert rows[0] == ["model", "L", "T", "q", "error", "floor_flag"]
        assert len(rows) == 1 + 7 + 3
        assert [r[0] for r in rows[-3:]] == ["slope", "intercept", "r2"]
        assert float(rows[-3][1]) == pytest.approx(3.0)

    def test_json(self):
        rep = self.make([1e-13] * 7)
        data = json.loads(json.dumps(rep.to_json()))
        assert data["fitted_slope"] is None and data["floor_flagged"] is True
        assert len(data["points"]) == 7 and data["points"][0]["floor_flag"] is True


class TestStroboscopicScan:
    def test_driven_oscillator_order_zero(self):
        model = models.build({"variant": "DRIVEN_HO", "fock_dim": 24})
        rep = verify.stroboscopic_scan(model, 0, GRID, 1, models.default_state(model))
        assert 1.6 <= rep.fitted_slope <= 2.4

    def test_rabi_order_one(self, rabi24, rabi_cache):
        rep = verify.stroboscopic_scan(rabi24, 1, GRID, 1, models.default_state(rabi24), monodromies=rabi_cache)
        assert 2.6 <= rep.fitted_slope <= 3.4
        assert set(rabi_cache) == set(GRID)

    def test_constant_floor(self, constant):
        rep = verify.stroboscopic_scan(constant, 2, GRID)
        assert rep.floor_flagged and rep.all_floored

    @pytest.mark.parametrize("grid", [GRID[:5], [0.2, 0.1, 0.05, 0.02, 0.01, 0.005]])
    def test_grid_checked(self, banded8, grid):
        with pytest.raises(ValueError):
            verify.stroboscopic_scan(banded8, 0, grid)

    def test_threads_do_not_change_results(self, banded8):
        a = verify.stroboscopic_scan(banded8, 1, GRID[:6], workers=1)
        b = verify.stroboscopic_scan(banded8, 1, GRID[:6], workers=3)
        assert a.to_csv() == b.to_csv()


class TestLongHorizon:
    def test_steps(self):
        assert verify.horizon_steps(0.1, 1) == 100
        assert verify.horizon_steps(0.07, 0) == 15
        assert verify.horizon_steps(0.2, 1, c=0.5) == 13

    def test_rabi_order_one(self, rabi24, rabi_cache):
        rep = verify.long_horizon_scan(rabi24, 1, HORIZON_GRID, monodromies=rabi_cache)
        assert [p[1] for p in rep.points] == [400, 205, 100, 52, 25]
        assert 0.5 <= rep.fitted_slope <= 1.5

    def test_rabi_order_zero(self, rabi24, rabi_cache):
        rep = verify.long_horizon_scan(rabi24, 0, HORIZON_GRID, monodromies=rabi_cache)
        assert 0.5 <= rep.fitted_slope <= 1.5

    def test_custom_rule(self, banded8):
        rep = verify.long_horizon_scan(banded8, 1, [0.1, 0.2, 0.3], horizon_rule=lambda t: 3)
        assert [p[1] for p in rep.points] == [3, 3, 3]

    def test_constant_floor(self, constant):
        assert verify.long_horizon_scan(constant, 1, HORIZON_GRID).all_floored


class TestMonodromyOracle:
    @pytest.mark.parametrize("order,lo,hi", [(0, 0.7, 1.3), (2, 2.6, 3.4)])
    def test_random_banded(self, banded8, order, lo, hi):
        rep = verify.monodromy_log_oracle(banded8, order, GRID)
        assert lo <= rep.fitted_slope <= hi

    def test_constant_floor(self, constant):
        for order in range(3):
            assert verify.monodromy_log_oracle(constant, order, GRID).all_floored

    def test_branch_cut_skipped(self):
        h = FourierOp.constant(np.diag([np.pi, 0.5]))
        model = models.Model(h, models.BlockPartition.unit(2), None, models.ModelSpec("RANDOM_BANDED", {"dim": 2}))
        rep = verify.monodromy_log_oracle(model, 0, [1.0, 0.5, 0.25])
        assert len(rep.points) == 2
        assert len(rep.skipped) == 1 and "branch cut" in rep.skipped[0]


class TestPropertySuite:
    def test_rabi(self):
        rep = verify.property_suite(models.build({"variant": "RABI"}), 2)
        assert rep.passed, rep.table()
        names = {c.name for c in rep.checks}
        assert {"conjugation[2]", "bandwidth[2]", "defect_polynomial[2]", "s_coefficients.endpoints"} <= names

    def test_random_banded(self, banded8):
        rep = verify.property_suite(banded8, 3)
        assert rep.passed, rep.table()
        assert not any(c.name.startswith("conjugation") for c in rep.checks)

    def test_sign_flip_caught(self, banded8):
        bad = verify.corrupt_series(heff_coefficients(banded8.h, 3), "sign")
        rep = verify.property_suite(banded8, 3, bad)
        failed = {c.name for c in rep.failures()}
        assert "defect_polynomial[3]" in failed or "defect_polynomial[2]" in failed
        assert "fm_agreement" in failed

    def test_hermiticity_violation_caught(self, banded8):
        bad = verify.corrupt_series(heff_coefficients(banded8.h, 2), "hermiticity")
        failed = {c.name for c in verify.property_suite(banded8, 2, bad).failures()}
        assert "hermiticity[2]" in failed

    def test_report_serializes(self, banded8):
        rep = verify.property_suite(banded8, 1)
        data = rep.to_json()
        assert data["passed"] is True and all(set(c) == {"name", "value", "threshold", "passed"} for c in data["checks"])
        assert "verdict" in rep.table().splitlines()[0]


def test_corrupt_unknown(banded8):
    with pytest.raises(ValueError):
        verify.corrupt_series(heff_coefficients(banded8.h, 1), "bogus")


def test_worker_count(monkeypatch):
    monkeypatch.setenv("FF_THREADS", "3")
    assert verify.worker_count() == 3
    monkeypatch.setenv("FF_THREADS", "zero")
    assert verify.worker_count() == 1
    monkeypatch.delenv("FF_THREADS")
    assert verify.worker_count() == 1
