"""Closed-form algebra of operator-valued functions

    f(t) = sum_{p, n} t**p * exp(2j*pi*n*t) * A[p, n].

Products, integrals from zero, averages over [0, 1] and oscillation parts are
all exact, so the recursions built on top never touch quadrature.

Coefficients live in one dense array of shape ``(P + 1, 2N + 1, d, d)`` where
``P`` is the top polynomial degree and mode ``n`` sits at index ``n + N``.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from math import factorial
from typing import Iterator, Mapping

import numpy as np

from .operator_core import DimensionError

PRUNE_RTOL = 1e-15


class TermGrowthError(RuntimeError):
    """A result would exceed the configured mode or degree cap."""


@dataclass(frozen=True)
class Limits:
    max_mode: int = 64
    max_degree: int = 16


_limits: contextvars.ContextVar[Limits] = contextvars.ContextVar("trigpoly_limits", default=Limits())


@contextlib.contextmanager
def limits(max_mode: int | None = None, max_degree: int | None = None) -> Iterator[Limits]:
    """Temporarily change the growth caps for the current context."""
    cur = _limits.get()
    new = Limits(cur.max_mode if max_mode is None else max_mode,
                 cur.max_degree if max_degree is None else max_degree)
    token = _limits.set(new)
    try:
        yield new
    finally:
        _limits.reset(token)


def _check_caps(degree: int, mode: int) -> None:
    lim = _limits.get()
    if mode > lim.max_mode or degree > lim.max_degree:
        raise TermGrowthError(
            f"term growth cap exceeded: degree {degree} (cap {lim.max_degree}), "
            f"mode {mode} (cap {lim.max_mode})"
        )


class FourierOp:
    """1-periodic operator function ``sum_n exp(2j*pi*n*t) H_n``."""

    __array_ufunc__ = None

    def __init__(self, modes: np.ndarray, basis_label: str = "generic"):
        m = np.array(modes, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[0] % 2 != 1:
            raise DimensionError(f"modes must have shape (2M+1, d, d), got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("Fourier modes must be finite")
        m.flags.writeable = False
        self.modes = m
        self.basis_label = basis_label

    @classmethod
    def from_dict(cls, modes: Mapping[int, np.ndarray], basis_label: str = "generic") -> "FourierOp":
        if not modes:
            raise ValueError("at least one mode is needed to fix the dimension")
        mats = {int(n): np.asarray(a, dtype=complex) for n, a in modes.items()}
        d = next(iter(mats.values())).shape[0]
        big_m = max(abs(n) for n in mats)
        arr = np.zeros((2 * big_m + 1, d, d), dtype=complex)
        for n, a in mats.items():
            if a.shape != (d, d):
                raise DimensionError("all Fourier modes must share one dimension")
            arr[n + big_m] = a
        return cls(arr, basis_label)

    @classmethod
    def constant(cls, a, basis_label: str = "generic") -> "FourierOp":
        return cls(np.asarray(a, dtype=complex)[None], basis_label)

    @property
    def max_mode(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        return self.modes.shape[1]

    def mode(self, n: int) -> np.ndarray:
        if abs(n) > self.max_mode:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.modes[n + self.max_mode]

    def items(self) -> Iterator[tuple[int, np.ndarray]]:
        for i, a in enumerate(self.modes):
            yield i - self.max_mode, a

    @property
    def hermitian_flag(self) -> bool:
        scale = max(1.0, float(np.linalg.norm(self.modes)))
        flipped = np.conj(np.swapaxes(self.modes[::-1], 1, 2))
        return float(np.linalg.norm(self.modes - flipped)) <= 1e-14 * scale

    def __call__(self, t: float) -> np.ndarray:
        n = np.arange(-self.max_mode, self.max_mode + 1)
        return np.tensordot(np.exp(2j * np.pi * n * t), self.modes, axes=1)

    def values(self, ts: np.ndarray) -> np.ndarray:
        """``H(t)`` for each entry of ``ts``, stacked along axis 0."""
        n = np.arange(-self.max_mode, self.max_mode + 1)
        w = np.exp(2j * np.pi * np.outer(np.asarray(ts, dtype=float), n))
        return np.tensordot(w, self.modes, axes=1)

    def __repr__(self) -> str:
        return f"FourierOp(dim={self.dim}, max_mode={self.max_mode}, basis={self.basis_label!r})"


class TrigPolyOp:
    """Finite sum of ``t**p exp(2j pi n t) A[p, n]`` terms (immutable)."""

    __array_ufunc__ = None
    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray, prune: bool = True):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 4 or c.shape[2] != c.shape[3] or c.shape[1] % 2 != 1:
            raise DimensionError(f"coefficients must have shape (P+1, 2N+1, d, d), got {c.shape}")
        if prune:
            c = _prune(c)
        _check_caps(c.shape[0] - 1, (c.shape[1] - 1) // 2)
        c.flags.writeable = False
        self.coeffs = c

    @classmethod
    def zeros(cls, dim: int) -> "TrigPolyOp":
        return cls(np.zeros((1, 1, dim, dim), dtype=complex), prune=False)

    @classmethod
    def constant(cls, a) -> "TrigPolyOp":
        a = np.asarray(a, dtype=complex)
        return cls(a[None, None], prune=False)

    @classmethod
    def identity(cls, dim: int) -> "TrigPolyOp":
        return cls.constant(np.eye(dim))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], np.ndarray], dim: int | None = None) -> "TrigPolyOp":
        if not terms:
            if dim is None:
                raise ValueError("dim is required for an empty term map")
            return cls.zeros(dim)
        mats = {(int(p), int(n)): np.asarray(a, dtype=complex) for (p, n), a in terms.items()}
        d = next(iter(mats.values())).shape[0]
        big_p = max(p for p, _ in mats)
        big_n = max(abs(n) for _, n in mats)
        arr = np.zeros((big_p + 1, 2 * big_n + 1, d, d), dtype=complex)
        for (p, n), a in mats.items():
            if p < 0:
                raise ValueError("polynomial degrees must be non-negative")
            arr[p, n + big_n] = a
        return cls(arr)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[2]

    @property
    def max_degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def max_mode(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    def term(self, p: int, n: int) -> np.ndarray:
        if p < 0 or p > self.max_degree or abs(n) > self.max_mode:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.coeffs[p, n + self.max_mode]

    def terms(self) -> dict[tuple[int, int], np.ndarray]:
        """Nonzero terms keyed by ``(p, n)``."""
        out = {}
        for p, i in zip(*np.nonzero(np.any(self.coeffs != 0, axis=(2, 3)))):
            out[(int(p), int(i) - self.max_mode)] = self.coeffs[p, i]
        return out

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, t: float) -> np.ndarray:
        return evaluate(self, t)

    def _aligned(self, other: "TrigPolyOp") -> tuple[np.ndarray, np.ndarray]:
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        big_p = max(self.max_degree, other.max_degree)
        big_n = max(self.max_mode, other.max_mode)
        return _pad(self.coeffs, big_p, big_n), _pad(other.coeffs, big_p, big_n)

    def __add__(self, other):
        if not isinstance(other, TrigPolyOp):
            return NotImplemented
        a, b = self._aligned(other)
        return TrigPolyOp(a + b)

    def __sub__(self, other):
        if not isinstance(other, TrigPolyOp):
            return NotImplemented
        a, b = self._aligned(other)
        return TrigPolyOp(a - b)

    def __neg__(self):
        return TrigPolyOp(-self.coeffs, prune=False)

    def __mul__(self, scalar):
        if isinstance(scalar, (TrigPolyOp, np.ndarray)):
            return NotImplemented
        return TrigPolyOp(complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, TrigPolyOp):
            return mul(self, other)
        b = np.asarray(other, dtype=complex)
        if b.shape != (self.dim, self.dim):
            raise DimensionError(f"dimension mismatch: {self.dim} vs {b.shape}")
        return TrigPolyOp(self.coeffs @ b)

    def __rmatmul__(self, other):
        a = np.asarray(other, dtype=complex)
        if a.shape != (self.dim, self.dim):
            raise DimensionError(f"dimension mismatch: {a.shape} vs {self.dim}")
        return TrigPolyOp(a @ self.coeffs)

    def __repr__(self) -> str:
        return f"TrigPolyOp(dim={self.dim}, max_degree={self.max_degree}, max_mode={self.max_mode})"


def _pad(c: np.ndarray, big_p: int, big_n: int) -> np.ndarray:
    p, m = c.shape[0] - 1, (c.shape[1] - 1) // 2
    if p == big_p and m == big_n:
        return c
    out = np.zeros((big_p + 1, 2 * big_n + 1) + c.shape[2:], dtype=complex)
    out[: p + 1, big_n - m: big_n + m + 1] = c
    return out


def _prune(c: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(c, axis=(2, 3))
    top = norms.max() if norms.size else 0.0
    if top == 0.0:
        return np.zeros((1, 1) + c.shape[2:], dtype=complex)
    small = norms <= PRUNE_RTOL * top
    if np.any(small):
        c = c.copy()
        c[small] = 0.0
    keep = ~small
    big_p = int(np.nonzero(keep.any(axis=1))[0].max())
    m = (c.shape[1] - 1) // 2
    modes = np.nonzero(keep.any(axis=0))[0] - m
    big_n = int(np.abs(modes).max())
    return c[: big_p + 1, m - big_n: m + big_n + 1]


def from_fourier(h: FourierOp) -> TrigPolyOp:
    return TrigPolyOp(h.modes[None])


def mul(f: TrigPolyOp, g: TrigPolyOp) -> TrigPolyOp:
    """Pointwise operator product ``t -> f(t) g(t)``."""
    if f.dim != g.dim:
        raise DimensionError(f"dimension mismatch: {f.dim} vs {g.dim}")
    big_p = f.max_degree + g.max_degree
    big_n = f.max_mode + g.max_mode
    _check_caps(big_p, big_n)
    out = np.zeros((big_p + 1, 2 * big_n + 1, f.dim, f.dim), dtype=complex)
    fa, ga = f.coeffs, g.coeffs
    f_nz = np.any(fa != 0, axis=(2, 3))
    g_nz = np.any(ga != 0, axis=(2, 3))
    # out[p+q, i+j] += F[p, i] @ G[q, j]; loop over whichever side has fewer blocks.
    if f_nz.sum() <= g_nz.sum():
        gp, gw = ga.shape[0], ga.shape[1]
        for p, i in zip(*np.nonzero(f_nz)):
            out[p:p + gp, i:i + gw] += fa[p, i] @ ga
    else:
        fp, fw = fa.shape[0], fa.shape[1]
        for q, j in zip(*np.nonzero(g_nz)):
            out[q:q + fp, j:j + fw] += fa @ ga[q, j]
    return TrigPolyOp(out)


def commutator(f: TrigPolyOp, g: TrigPolyOp) -> TrigPolyOp:
    return mul(f, g) - mul(g, f)


def _ibp_weights(p: int, modes: np.ndarray) -> list[np.ndarray]:
    # Antiderivative of t^p e^{ct}: e^{ct} * sum_m (-1)^m p!/(p-m)! t^(p-m) / c^(m+1).
    c = 2j * np.pi * modes
    return [(-1) ** m * factorial(p) / factorial(p - m) / c ** (m + 1) for m in range(p + 1)]


def integrate_from_zero(f: TrigPolyOp) -> TrigPolyOp:
    """``t -> int_0^t f(s) ds`` in closed form."""
    c = f.coeffs
    big_p, big_n = f.max_degree, f.max_mode
    _check_caps(big_p + 1, big_n)
    out = np.zeros((big_p + 2,) + c.shape[1:], dtype=complex)
    modes = np.arange(-big_n, big_n + 1)
    nz = modes != 0
    for p in range(big_p + 1):
        out[p + 1, big_n] += c[p, big_n] / (p + 1)
        if not nz.any():
            continue
        block = c[p, nz]
        weights = _ibp_weights(p, modes[nz])
        for m, w in enumerate(weights):
            out[p - m, nz] += w[:, None, None] * block
        # subtract the antiderivative at t = 0 (only the t^0 piece survives)
        out[0, big_n] -= np.tensordot(weights[p], block, axes=1)
    return TrigPolyOp(out)


def average(f: TrigPolyOp) -> np.ndarray:
    """``int_0^1 f(t) dt`` in closed form."""
    c = f.coeffs
    big_n = f.max_mode
    modes = np.arange(-big_n, big_n + 1)
    nz = modes != 0
    out = np.zeros((f.dim, f.dim), dtype=complex)
    for p in range(f.max_degree + 1):
        out += c[p, big_n] / (p + 1)
        if p == 0 or not nz.any():
            continue
        # e^{c} = 1 for integer modes, so the m = p term cancels against t = 0.
        weights = _ibp_weights(p, modes[nz])[:p]
        out += np.tensordot(sum(weights), c[p, nz], axes=1)
    return out


def osc(f: TrigPolyOp) -> TrigPolyOp:
    """Oscillation part ``f - average(f)``."""
    return f - TrigPolyOp.constant(average(f))


def evaluate(f: TrigPolyOp, t: float) -> np.ndarray:
    p = np.arange(f.max_degree + 1)
    n = np.arange(-f.max_mode, f.max_mode + 1)
    w = np.power(float(t), p)[:, None] * np.exp(2j * np.pi * n * t)[None, :]
    return np.tensordot(w, f.coeffs, axes=2)
