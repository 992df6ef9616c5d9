"""Verification experiments: dual-route equality, error-scaling scans,
the monodromy-log oracle and the structural property suite."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil
from typing import Any, Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from . import effective
from .magnus import EffectiveSeries, fm_coefficients
from .models import Model, ModelSpec
from .operator_core import (
    DimensionError,
    bandwidth,
    conjugation_defect,
    frobenius,
    hermiticity_defect,
    interior,
)
from .propagate import PropagatorConfig, effective_propagator, reference_propagator, stroboscopic
from .trigpoly import evaluate

FLOOR_FACTOR = 100.0
BRANCH_CUT_GAP = 1e-6
# Fock levels kept away from the truncation edge when comparing coefficients
INTERIOR_MARGIN = 8

MODES = ("strobo", "horizon", "oracle")
_TARGET_OFFSET = {"strobo": 2, "horizon": None, "oracle": 1}


def worker_count() -> int:
    """Worker threads for scan points, capped by ``FF_THREADS`` (default 1)."""
    raw = os.environ.get("FF_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(fn: Callable, items: Sequence, workers: int | None) -> list:
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fit_slope(ts: Iterable[float], errors: Iterable[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(log T, log error)``.

    Returns ``(slope, intercept, r_squared)``; NaNs when fewer than two points.
    """
    x = np.log(np.asarray(list(ts), dtype=float))
    y = np.log(np.asarray(list(errors), dtype=float))
    if x.size < 2:
        return float("nan"), float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / total) if total > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class ScalingReport:
    model: ModelSpec
    order: int
    mode: str
    points: list[tuple[float, int, float]]
    floor: float
    target_slope: float
    fitted_slope: float = float("nan")
    fitted_intercept: float = float("nan")
    r_squared: float = float("nan")
    floor_flagged: bool = False
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.points = sorted((float(t), int(q), float(e)) for t, q, e in self.points)
        if any(e < 0 or not np.isfinite(e) for _, _, e in self.points):
            raise ValueError("scan errors must be finite and non-negative")
        kept = [(t, e) for t, _, e in self.points if e > self.floor]
        self.floor_flagged = len(kept) < len(self.points)
        if len(kept) >= 2:
            ts, es = zip(*kept)
            self.fitted_slope, self.fitted_intercept, self.r_squared = fit_slope(ts, es)

    def floored(self, error: float) -> bool:
        return error <= self.floor

    @property
    def fitted_points(self) -> int:
        return sum(1 for _, _, e in self.points if e > self.floor)

    @property
    def all_floored(self) -> bool:
        return self.fitted_points == 0

    def within(self, window: float = 0.4) -> bool:
        """Slope inside ``target +- window``; an all-floored run counts as a pass."""
        if self.all_floored:
            return True
        return bool(np.isfinite(self.fitted_slope) and abs(self.fitted_slope - self.target_slope) <= window)

    def to_json(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "order": self.order,
            "mode": self.mode,
            "floor": self.floor,
            "target_slope": self.target_slope,
            "points": [
                {"T": t, "q": q, "error": e, "floor_flag": self.floored(e)} for t, q, e in self.points
            ],
            "fitted_slope": _json_float(self.fitted_slope),
            "fitted_intercept": _json_float(self.fitted_intercept),
            "r_squared": _json_float(self.r_squared),
            "floor_flagged": self.floor_flagged,
            "skipped": list(self.skipped),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "L", "T", "q", "error", "floor_flag"])
        name = self.model.variant
        for t, q, e in self.points:
            w.writerow([name, self.order, repr(t), q, repr(e), int(self.floored(e))])
        w.writerow(["slope", repr(self.fitted_slope)])
        w.writerow(["intercept", repr(self.fitted_intercept)])
        w.writerow(["r2", repr(self.r_squared)])
        return buf.getvalue()


def _json_float(x: float) -> float | None:
    return None if not np.isfinite(x) else float(x)


def _restrict(a: np.ndarray, keep: np.ndarray | None) -> np.ndarray:
    return a if keep is None else interior(a, keep)


def compare_series(a: EffectiveSeries, b: EffectiveSeries, keep: Sequence[int] | None = None) -> list[float]:
    """Per-order ``|a_l - b_l|_F / max(1, |a_l|_F)`` on the index set ``keep``.

    The normalisation uses the larger of the two norms so the result is
    symmetric in its arguments.
    """
    if a.order != b.order or a.dim != b.dim:
        raise DimensionError(
            f"series shapes differ: order {a.order} vs {b.order}, dim {a.dim} vs {b.dim}"
        )
    idx = None if keep is None else np.asarray(keep, dtype=int)
    out = []
    for x, y in zip(a, b):
        x, y = _restrict(x, idx), _restrict(y, idx)
        scale = max(1.0, frobenius(x), frobenius(y))
        out.append(frobenius(x - y) / scale)
    return out


def model_interior(model: Model, margin: int = INTERIOR_MARGIN) -> np.ndarray | None:
    """Interior index set for truncated-boson models, ``None`` for finite ones."""
    if model.spec.variant == "RANDOM_BANDED":
        return None
    return model.interior(margin)


def _check_grid(ts: Sequence[float], min_points: int, geometric: bool) -> np.ndarray:
    grid = np.asarray(sorted(float(t) for t in ts))
    if grid.size < min_points:
        raise ValueError(f"T grid needs at least {min_points} points, got {grid.size}")
    if np.any(grid <= 0):
        raise ValueError("T grid values must be positive")
    if geometric:
        ratios = grid[1:] / grid[:-1]
        if not np.allclose(ratios, ratios[0], rtol=1e-6):
            raise ValueError("T grid must be geometric")
    return grid


def geometric_grid(start: float, factor: float, count: int) -> list[float]:
    if count < 2 or not 0 < factor < 1 or start <= 0:
        raise ValueError("grid needs count >= 2, 0 < factor < 1 and start > 0")
    return [start * factor**k for k in range(count)]


def _error(a: np.ndarray, b: np.ndarray, state: np.ndarray | None) -> float:
    diff = a - b
    return float(np.linalg.norm(diff @ state)) if state is not None else frobenius(diff)


def _series_for(model: Model, order: int, series: EffectiveSeries | None) -> EffectiveSeries:
    if series is None:
        return effective.heff_coefficients(model.h, order)
    if series.order < order:
        raise ValueError(f"series has order {series.order}, scan needs {order}")
    return series.truncated(order)


def stroboscopic_scan(model: Model, order: int, t_grid: Sequence[float], q: int = 1,
                      state: np.ndarray | None = None, cfg: PropagatorConfig | None = None,
                      series: EffectiveSeries | None = None,
                      monodromies: dict[float, np.ndarray] | None = None,
                      workers: int | None = None) -> ScalingReport:
    """Effective versus exact propagation at ``t = q T``; target slope ``L + 2``.

    ``monodromies`` maps ``T`` to a precomputed one-period propagator and is
    filled in for the caller, so several orders can share one integration.
    """
    cfg = cfg or PropagatorConfig()
    grid = _check_grid(t_grid, 6, geometric=True)
    ser = _series_for(model, order, series)
    cache = {} if monodromies is None else monodromies
    _fill_monodromies(model, grid, cfg, cache, workers)

    def point(t: float) -> tuple[float, int, float]:
        exact = stroboscopic(model.h, t, q, cfg, monodromy=cache[t])
        approx = effective_propagator(ser, t, q * t)
        return t, q, _error(approx, exact, state)

    pts = _map(point, list(grid), workers)
    return ScalingReport(model.spec, order, "strobo", pts, FLOOR_FACTOR * cfg.tol, order + 2.0)


def _fill_monodromies(model: Model, grid: np.ndarray, cfg: PropagatorConfig,
                      cache: dict[float, np.ndarray], workers: int | None) -> None:
    missing = [t for t in grid if t not in cache]
    for t, u in zip(missing, _map(lambda t: reference_propagator(model.h, t, t, 0.0, cfg), missing, workers)):
        cache[t] = u


def horizon_steps(t: float, order: int, c: float = 1.0) -> int:
    """``q(T) = ceil(c T**(-L-1))`` so that ``q T`` is about ``c T**(-L)``."""
    return max(1, ceil(c * t ** (-order - 1) - 1e-9))


def long_horizon_scan(model: Model, order: int, t_grid: Sequence[float], c: float = 1.0,
                      horizon_rule: Callable[[float], int] | None = None,
                      state: np.ndarray | None = None, cfg: PropagatorConfig | None = None,
                      series: EffectiveSeries | None = None,
                      monodromies: dict[float, np.ndarray] | None = None,
                      workers: int | None = None) -> ScalingReport:
    """Error at ``t = q(T) T`` with ``q(T) ~ c T**(-L-1)``; target slope 1.

    The exact side is a power of the one-period propagator, never a long
    re-integration.
    """
    cfg = cfg or PropagatorConfig()
    grid = _check_grid(t_grid, 3, geometric=False)
    rule = horizon_rule or (lambda t: horizon_steps(t, order, c))
    ser = _series_for(model, order, series)
    cache = {} if monodromies is None else monodromies
    _fill_monodromies(model, grid, cfg, cache, workers)

    def point(t: float) -> tuple[float, int, float]:
        q = int(rule(t))
        exact = stroboscopic(model.h, t, q, cfg, monodromy=cache[t])
        approx = effective_propagator(ser, t, q * t)
        return t, q, _error(approx, exact, state)

    pts = _map(point, list(grid), workers)
    return ScalingReport(model.spec, order, "horizon", pts, FLOOR_FACTOR * cfg.tol, 1.0)


def principal_log_hamiltonian(u: np.ndarray, period: float) -> np.ndarray:
    """``(i / T) Log U`` with the principal branch.

    Raises ``ValueError`` when an eigenvalue of ``U`` lies within
    ``BRANCH_CUT_GAP`` of the negative real axis.
    """
    ev = np.linalg.eigvals(u)
    near_cut = (ev.real < 0) & (np.abs(ev.imag) < BRANCH_CUT_GAP)
    if np.any(near_cut):
        worst = ev[near_cut][np.argmin(np.abs(ev[near_cut].imag))]
        raise ValueError(f"eigenvalue {worst:.6g} within {BRANCH_CUT_GAP:g} of the branch cut")
    return 1j / period * scipy.linalg.logm(u)


def monodromy_log_oracle(model: Model, order: int, t_grid: Sequence[float],
                         cfg: PropagatorConfig | None = None, series: EffectiveSeries | None = None,
                         monodromies: dict[float, np.ndarray] | None = None,
                         workers: int | None = None) -> ScalingReport:
    """``|sum_l T**l H_FM[l] - (i/T) Log U(T)|_F``; target slope ``L + 1``."""
    cfg = cfg or PropagatorConfig()
    grid = _check_grid(t_grid, 3, geometric=False)
    ser = fm_coefficients(model.h, order) if series is None else series.truncated(order)
    cache = {} if monodromies is None else monodromies
    _fill_monodromies(model, grid, cfg, cache, workers)

    def point(t: float):
        try:
            exact = principal_log_hamiltonian(cache[t], t)
        except ValueError as exc:
            return f"T={t!r}: {exc}"
        return t, 1, frobenius(ser.hamiltonian(t) - exact)

    results = _map(point, list(grid), workers)
    pts = [r for r in results if not isinstance(r, str)]
    skipped = [r for r in results if isinstance(r, str)]
    report = ScalingReport(model.spec, order, "oracle", pts, FLOOR_FACTOR * cfg.tol, order + 1.0)
    report.skipped.extend(skipped)
    return report


# ---------------------------------------------------------------------------
# property suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


@dataclass
class PropertyReport:
    model: ModelSpec
    order: int
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, value: float, threshold: float) -> None:
        value = float(value)
        self.checks.append(CheckResult(name, value, float(threshold), bool(value <= threshold)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "order": self.order,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
        }

    def table(self) -> str:
        width = max((len(c.name) for c in self.checks), default=5)
        lines = [f"{'check':<{width}}  {'value':>11}  {'threshold':>11}  verdict"]
        for c in self.checks:
            verdict = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:<{width}}  {c.value:11.3e}  {c.threshold:11.3e}  {verdict}")
        return "\n".join(lines)


def model_bandwidth(model: Model) -> int:
    """Largest block bandwidth over the Fourier modes of ``H``."""
    return max((bandwidth(m, model.partition) for _, m in model.h.items()), default=0)


def property_suite(model: Model, order: int, series: EffectiveSeries | None = None,
                   rtol: float = 1e-11, periodic_atol: float = 1e-13) -> PropertyReport:
    """Run every structural invariant on ``H`` and its effective series.

    ``series`` overrides the computed EFF coefficients, which is how
    corrupted inputs are checked; the defect polynomial is then evaluated for
    the supplied coefficients.
    """
    report = PropertyReport(model.spec, order)
    h = model.h
    report.add("h.hermitian_modes", _mode_hermiticity(model), 1e-14)
    genuine = effective.heff_coefficients(h, order)
    ser = genuine if series is None else series.truncated(order)

    for l, c in enumerate(ser):
        scale = max(1.0, frobenius(c))
        report.add(f"hermiticity[{l}]", hermiticity_defect(c) / scale, rtol)
    if model.conjugation is not None:
        report.add("h.conjugation_modes", _mode_conjugation(model), 1e-14)
        for l, c in enumerate(ser):
            scale = max(1.0, frobenius(c))
            report.add(f"conjugation[{l}]", conjugation_defect(c, model.conjugation) / scale, rtol)

    k = model_bandwidth(model)
    if model.spec.variant == "RABI":
        report.add("h.bandwidth", k, 2)
    for l, c in enumerate(ser):
        report.add(f"bandwidth[{l}]", bandwidth(c, model.partition), (l + 1) * k)

    defect = effective.defect_polynomial(h, order, ser)
    scale = max(1.0, max(frobenius(c) for c in ser))
    for kk, d in defect.items():
        report.add(f"defect_polynomial[{kk}]", frobenius(d) / scale, rtol)

    table = effective.SCoeffTable(h, genuine.coeffs, order).populate()
    worst = 0.0
    for (j, kk), s in table.entries().items():
        if j == 0:
            continue
        size = max(1.0, s.norm())
        worst = max(worst, frobenius(evaluate(s, 0.0)) / size, frobenius(evaluate(s, 1.0)) / size)
    report.add("s_coefficients.endpoints", worst, periodic_atol)

    keep = model_interior(model)
    dist = compare_series(ser, fm_coefficients(h, order), keep)
    report.add("fm_agreement", max(dist), 1e-9)
    return report


def _mode_hermiticity(model: Model) -> float:
    h = model.h
    worst = 0.0
    for n, m in h.items():
        worst = max(worst, frobenius(h.mode(-n) - m.conj().T) / max(1.0, frobenius(m)))
    return worst


def _mode_conjugation(model: Model) -> float:
    # J H(t) J = H(-t) mode by mode: J H_n J = H_n.
    h, j = model.h, model.conjugation
    worst = 0.0
    for _, m in h.items():
        worst = max(worst, frobenius(j.conjugate_operator(m) - m) / max(1.0, frobenius(m)))
    return worst


def corrupt_series(series: EffectiveSeries, how: str = "sign", index: int | None = None) -> EffectiveSeries:
    """Deliberately damaged copy of ``series`` for mutation tests.

    ``"sign"`` flips the sign of one coefficient (the highest nonzero one by
    default); ``"hermiticity"`` adds a small anti-Hermitian term.
    """
    coeffs = [np.array(c) for c in series]
    if index is None:
        nonzero = [l for l, c in enumerate(coeffs) if l > 0 and frobenius(c) > 0]
        index = nonzero[-1] if nonzero else 0
    if how == "sign":
        coeffs[index] = -coeffs[index]
    elif how == "hermiticity":
        coeffs[index] = coeffs[index] + 1e-6j * np.eye(series.dim)
    else:
        raise ValueError(f"unknown corruption {how!r}")
    return EffectiveSeries(tuple(coeffs), series.kind, series.basis_label, {"corrupted": how})


def dumps(obj: Any) -> str:
    """Stable JSON text used for every report file."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
