"""Reference propagators for ``i dU/dt = H(t / T) U`` and for effective
autonomous Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from .magnus import EffectiveSeries
from .operator_core import matexp, unitary_exp
from .trigpoly import FourierOp

# Two-exponential commutator-free scheme on Gauss-Legendre nodes.
_CF4_NODES = (0.5 - sqrt(3) / 6, 0.5 + sqrt(3) / 6)
_CF4_A = (3 - 2 * sqrt(3)) / 12
_CF4_B = (3 + 2 * sqrt(3)) / 12
_ORDER = {"CF4": 4, "MIDPOINT-EXP": 2}
# caps the number of stacked d x d matrices held at once
_CHUNK_ENTRIES = 2 ** 22


class ConvergenceError(RuntimeError):
    """Step halving did not reach the requested tolerance."""


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = "CF4"
    base_steps_per_period: int = 16
    tol: float = 1e-12
    max_halvings: int = 14

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", self.method.upper())
        if self.method not in _ORDER:
            raise ValueError(f"method must be one of {sorted(_ORDER)}, got {self.method!r}")
        if self.base_steps_per_period < 8:
            raise ValueError("base_steps_per_period must be >= 8")
        if self.tol < 1e-13:
            raise ValueError("tol must be >= 1e-13")
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be positive")

    @property
    def order(self) -> int:
        return _ORDER[self.method]


def _ordered_product(stack: np.ndarray) -> np.ndarray:
    """``stack[-1] @ ... @ stack[0]`` by pairwise reduction."""
    while stack.shape[0] > 1:
        odd = stack.shape[0] % 2
        paired = stack[1::2] @ stack[0:stack.shape[0] - odd:2]
        stack = np.concatenate([paired, stack[-1:]]) if odd else paired
    return stack[0]


def _step_unitaries(h: FourierOp, period: float, starts: np.ndarray, dt: float, method: str) -> np.ndarray:
    if method == "MIDPOINT-EXP":
        return unitary_exp(h.values((starts + 0.5 * dt) / period), dt)
    a1 = h.values((starts + _CF4_NODES[0] * dt) / period)
    a2 = h.values((starts + _CF4_NODES[1] * dt) / period)
    first = unitary_exp(_CF4_B * a1 + _CF4_A * a2, dt)
    second = unitary_exp(_CF4_A * a1 + _CF4_B * a2, dt)
    return second @ first


def fixed_step_propagator(h: FourierOp, period: float, t1: float, t0: float, steps: int,
                          method: str = "CF4") -> np.ndarray:
    """Propagator from ``t0`` to ``t1`` with ``steps`` equal steps."""
    dt = (t1 - t0) / steps
    chunk = max(1, _CHUNK_ENTRIES // (h.dim * h.dim))
    u = np.eye(h.dim, dtype=complex)
    for lo in range(0, steps, chunk):
        starts = t0 + dt * np.arange(lo, min(lo + chunk, steps))
        u = _ordered_product(_step_unitaries(h, period, starts, dt, method)) @ u
    return u


def reference_propagator(h: FourierOp, period: float, t1: float, t0: float = 0.0,
                         cfg: PropagatorConfig | None = None) -> np.ndarray:
    """``U^(T)(t1, t0)`` to tolerance ``cfg.tol`` by step halving.

    Successive halvings are combined by Richardson extrapolation; the
    returned matrix is the extrapolant once the estimated error of the
    finer solution, ``|U_n - U_2n|_F / (2**order - 1)``, is below ``tol``.
    """
    cfg = cfg or PropagatorConfig()
    if period <= 0:
        raise ValueError("period must be positive")
    if t1 == t0:
        return np.eye(h.dim, dtype=complex)
    steps = cfg.base_steps_per_period * max(1, ceil(abs(t1 - t0) / period - 1e-12))
    denom = 2 ** cfg.order - 1
    coarse = fixed_step_propagator(h, period, t1, t0, steps, cfg.method)
    estimate = previous = np.inf
    for halving in range(cfg.max_halvings):
        steps *= 2
        fine = fixed_step_propagator(h, period, t1, t0, steps, cfg.method)
        estimate = np.linalg.norm(fine - coarse) / denom
        if estimate <= cfg.tol:
            return fine + (fine - coarse) / denom
        if halving >= 2 and estimate >= previous:
            # rounding now dominates; further halving only adds error
            raise ConvergenceError(
                f"error estimate stalled at {estimate:.3e} (tol {cfg.tol:.1e}) after {steps} steps"
            )
        coarse, previous = fine, estimate
    raise ConvergenceError(
        f"error estimate {estimate:.3e} above tol {cfg.tol:.1e} after {cfg.max_halvings} halvings"
    )


def stroboscopic(h: FourierOp, period: float, q: int, cfg: PropagatorConfig | None = None,
                 monodromy: np.ndarray | None = None) -> np.ndarray:
    """``U^(T)(qT) = U^(T)(T)**q``; a precomputed one-period ``monodromy`` may be passed."""
    if q == 0:
        return np.eye(h.dim, dtype=complex)
    u = reference_propagator(h, period, period, 0.0, cfg) if monodromy is None else monodromy
    if q < 0:
        u, q = u.conj().T, -q
    return np.linalg.matrix_power(u, q)


def effective_propagator(series: EffectiveSeries, period: float, t: float) -> np.ndarray:
    """``exp(-i t H_L(T))`` for the Hermitized assembled series."""
    hm = series.hamiltonian(period)
    hm = 0.5 * (hm + hm.conj().T)
    return matexp(hm, -1j * t)
