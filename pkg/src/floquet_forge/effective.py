"""Effective Hamiltonians from the iterated integration-by-parts recursion.

For a unit-period ``H(t)`` and an ansatz ``H_L(T) = sum_l T**l H[l]`` the
iterated actions ``S_j`` are polynomials in ``T`` whose coefficients
``S[j, k](t)`` are 1-periodic operator functions.  They obey

    S[j+1, k] = int_0^t osc( K0(S[j, k-1]) + sum_{s + s' + 1 = k} H[s'] S[j, s] )

with ``K0(A)(t) = H[0] A - A H(t)`` and ``1 <= s' <= L``.  The averages of
``K(S_j)`` then fix each new ``H[l]``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import trigpoly as tp
from .magnus import EffectiveSeries
from .operator_core import DimensionError
from .trigpoly import FourierOp, TrigPolyOp


def k_action(h1_const, h2: FourierOp | TrigPolyOp, a: TrigPolyOp) -> TrigPolyOp:
    """``t -> h1_const a(t) - a(t) h2(t)``."""
    h1 = np.asarray(h1_const, dtype=complex)
    h2p = tp.from_fourier(h2) if isinstance(h2, FourierOp) else h2
    if h1.shape != (a.dim, a.dim) or h2p.dim != a.dim:
        raise DimensionError("k_action operands must share one dimension")
    return h1 @ a - tp.mul(a, h2p)


class SCoeffTable:
    """Lazily filled table of ``S[j, k](t)`` at one truncation level ``L``.

    ``heff`` must hold ``H[0..L]``.  Entries are memoized; the table never
    changes a stored entry, so it can be shared once built.
    """

    def __init__(self, h: FourierOp, heff: Sequence[np.ndarray], level: int):
        if len(heff) < level + 1:
            raise ValueError(
                f"level {level} needs effective coefficients 0..{level}, only {len(heff)} available"
            )
        self.h = h
        self.level = level
        self.heff = [np.asarray(c, dtype=complex) for c in heff[: level + 1]]
        self._h_poly = tp.from_fourier(h)
        self._entries: dict[tuple[int, int], TrigPolyOp] = {}
        self._zero = TrigPolyOp.zeros(h.dim)

    def in_band(self, j: int, k: int) -> bool:
        return j >= 0 and j <= k <= j * (self.level + 1)

    def _k0(self, a: TrigPolyOp) -> TrigPolyOp:
        return self.heff[0] @ a - tp.mul(a, self._h_poly)

    def _corrections(self, j: int, k: int) -> TrigPolyOp:
        """``sum H[s'] S[j, s]`` over ``s + s' + 1 = k``, ``1 <= s' <= L``."""
        acc = self._zero
        for s_prime in range(1, self.level + 1):
            s = k - 1 - s_prime
            if self.in_band(j, s):
                acc = acc + self.heff[s_prime] @ self.coeff(j, s)
        return acc

    def coeff(self, j: int, k: int) -> TrigPolyOp:
        if not self.in_band(j, k):
            return self._zero
        if j == 0:
            return TrigPolyOp.identity(self.h.dim)
        key = (j, k)
        if key not in self._entries:
            integrand = self._corrections(j - 1, k)
            if self.in_band(j - 1, k - 1):
                integrand = integrand + self._k0(self.coeff(j - 1, k - 1))
            self._entries[key] = tp.integrate_from_zero(tp.osc(integrand))
        return self._entries[key]

    def avg_ks(self, j: int, k: int) -> np.ndarray:
        """``k``-th T-coefficient of the period average of ``K(S_j)``."""
        if j < 0 or not j <= k <= j * (self.level + 1) + self.level:
            return np.zeros((self.h.dim, self.h.dim), dtype=complex)
        integrand = self._corrections(j, k + 1)
        if self.in_band(j, k):
            integrand = integrand + self._k0(self.coeff(j, k))
        return tp.average(integrand)

    def populate(self, k_max: int | None = None) -> "SCoeffTable":
        """Fill every in-band entry with ``j <= L + 1`` (and ``k <= k_max``)."""
        for j in range(1, self.level + 2):
            top = j * (self.level + 1) if k_max is None else min(j * (self.level + 1), k_max)
            for k in range(j, top + 1):
                self.coeff(j, k)
        return self

    def entries(self) -> dict[tuple[int, int], TrigPolyOp]:
        out = {(0, 0): TrigPolyOp.identity(self.h.dim)}
        out.update(self._entries)
        return out


def s_coefficients(h: FourierOp, order: int, heff: Sequence[np.ndarray] | None = None,
                   k_max: int | None = None) -> SCoeffTable:
    """Populated ``S[j, k]`` table at level ``order``."""
    if heff is None:
        heff = heff_coefficients(h, order).coeffs
    return SCoeffTable(h, heff, order).populate(k_max)


def avg_ks_coefficients(table: SCoeffTable, j: int) -> dict[int, np.ndarray]:
    """All nonzero-band T-coefficients of the average of ``K(S_j)``."""
    top = j * (table.level + 1) + table.level
    return {k: table.avg_ks(j, k) for k in range(j, top + 1)}


def heff_coefficients(h: FourierOp, order: int) -> EffectiveSeries:
    """``H[0..order]`` with ``H[0] = <H>`` and

        H[l] = -sum_{j=1}^{l} (-i)**j  coeff_l <K(S_j)>  at level l - j.
    """
    if not 0 <= order <= 6:
        raise ValueError(f"order must be in 0..6, got {order}")
    coeffs = [tp.average(tp.from_fourier(h))]
    tables: dict[int, SCoeffTable] = {}
    for l in range(1, order + 1):
        acc = np.zeros_like(coeffs[0])
        for j in range(1, l + 1):
            level = l - j
            if level not in tables:
                tables[level] = SCoeffTable(h, coeffs, level)
            acc += (-1j) ** j * tables[level].avg_ks(j, l)
        coeffs.append(-acc)
    return EffectiveSeries(tuple(coeffs), "EFF", h.basis_label)


def defect_polynomial(h: FourierOp, order: int, series: EffectiveSeries | None = None,
                      k_max: int | None = None) -> dict[int, np.ndarray]:
    """T-coefficients of ``sum_{j=0}^{L} (-i)**j <K(S_{j,L})>``.

    For the genuine effective series the coefficients ``0..L`` vanish; by
    default only those are returned.
    """
    if series is None:
        series = heff_coefficients(h, order)
    if series.order < order:
        raise ValueError(f"series has order {series.order}, need {order}")
    table = SCoeffTable(h, series.coeffs, order)
    top = order if k_max is None else k_max
    out = {}
    for k in range(top + 1):
        acc = np.zeros((h.dim, h.dim), dtype=complex)
        for j in range(0, min(k, order) + 1):
            acc += (-1j) ** j * table.avg_ks(j, k)
        out[k] = acc
    return out
