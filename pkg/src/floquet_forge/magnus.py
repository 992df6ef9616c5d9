"""Floquet-Magnus coefficients from the Bernoulli-weighted Magnus recursion."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Any, Iterator

import numpy as np

from . import trigpoly as tp
from .operator_core import DimensionError, operator_from_json, operator_to_json
from .trigpoly import FourierOp, TrigPolyOp

MAX_BERNOULLI = 32


@dataclass(frozen=True)
class EffectiveSeries:
    """Coefficients of ``H(T) = sum_l T**l coeffs[l]``.

    ``kind`` is ``"FM"`` for the Magnus route and ``"EFF"`` for the
    integration-by-parts route.
    """

    coeffs: tuple[np.ndarray, ...]
    kind: str
    basis_label: str = "generic"
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("FM", "EFF"):
            raise ValueError(f"kind must be FM or EFF, got {self.kind!r}")
        mats = tuple(np.array(c, dtype=complex) for c in self.coeffs)
        if not mats:
            raise ValueError("a series needs at least the order-0 coefficient")
        dims = {m.shape for m in mats}
        if len(dims) != 1:
            raise DimensionError(f"coefficient shapes differ: {sorted(dims)}")
        for m in mats:
            m.flags.writeable = False
        object.__setattr__(self, "coeffs", mats)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    def __getitem__(self, l: int) -> np.ndarray:
        return self.coeffs[l]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.coeffs)

    def hamiltonian(self, period: float) -> np.ndarray:
        """Assemble ``sum_l period**l coeffs[l]``."""
        out = np.zeros_like(self.coeffs[0])
        for l, c in enumerate(self.coeffs):
            out = out + period**l * c
        return out

    def truncated(self, order: int) -> "EffectiveSeries":
        return EffectiveSeries(self.coeffs[: order + 1], self.kind, self.basis_label, dict(self.metadata))

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "order": self.order,
            "coeffs": [operator_to_json(c, self.basis_label) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "EffectiveSeries":
        coeffs = [operator_from_json(c) for c in data["coeffs"]]
        if len(coeffs) != int(data["order"]) + 1:
            raise ValueError("order does not match the number of coefficients")
        label = data["coeffs"][0].get("basis_label", "generic") if data["coeffs"] else "generic"
        return cls(tuple(coeffs), data["kind"], label)


@lru_cache(maxsize=None)
def bernoulli(j: int) -> Fraction:
    """Bernoulli number ``B_j`` with ``B_1 = -1/2``, as an exact rational."""
    if not 0 <= j <= MAX_BERNOULLI:
        raise ValueError(f"Bernoulli index {j} outside the supported range 0..{MAX_BERNOULLI}")
    if j == 0:
        return Fraction(1)
    # sum_{k=0}^{j} C(j+1, k) B_k = 0
    acc = sum(comb(j + 1, k) * bernoulli(k) for k in range(j))
    return -acc / (j + 1)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def _magnus_weight(j: int) -> float:
    # The recursion integrates i*H rather than -i*H, so the ad-expansion
    # picks up (-1)^j: B_j/j! with B_1 = -1/2 becomes (-1)^j B_j / j!.
    return float((-1) ** j * bernoulli(j) / factorial(j))


def omega_terms(h: FourierOp, count: int) -> list[TrigPolyOp]:
    """``[Omega_1, ..., Omega_count]`` of the unit-period problem.

    ``Omega_1(t) = i int_0^t H``; higher terms are integrals of nested
    commutators ``ad_{Omega_k1} ... ad_{Omega_kj}(i H)`` over compositions
    ``k_1 + ... + k_j = l - 1``.  Everything stays in closed form.
    """
    if not 1 <= count <= 8:
        raise ValueError(f"count must be in 1..8, got {count}")
    ih = 1j * tp.from_fourier(h)
    omegas: list[TrigPolyOp] = [tp.integrate_from_zero(ih)]
    # nested[(k_1..k_j)] caches ad_{Omega_k1}(...ad_{Omega_kj}(iH)); suffixes are shared.
    nested: dict[tuple[int, ...], TrigPolyOp] = {(): ih}

    def ad_chain(ks: tuple[int, ...]) -> TrigPolyOp:
        if ks not in nested:
            inner = ad_chain(ks[1:])
            nested[ks] = tp.commutator(omegas[ks[0] - 1], inner)
        return nested[ks]

    for l in range(2, count + 1):
        integrand = TrigPolyOp.zeros(h.dim)
        for j in range(1, l):
            weight = _magnus_weight(j)
            if weight == 0.0:
                continue
            for ks in compositions(l - 1, j):
                integrand = integrand + weight * ad_chain(ks)
        omegas.append(tp.integrate_from_zero(integrand))
    return omegas


def fm_coefficients(h: FourierOp, order: int) -> EffectiveSeries:
    """Floquet-Magnus coefficients ``H_FM^[l] = -i Omega_{l+1}(1)``, l <= order."""
    if not 0 <= order <= 7:
        raise ValueError(f"order must be in 0..7, got {order}")
    omegas = omega_terms(h, order + 1)
    coeffs = tuple(-1j * tp.evaluate(om, 1.0) for om in omegas)
    return EffectiveSeries(coeffs, "FM", h.basis_label)
