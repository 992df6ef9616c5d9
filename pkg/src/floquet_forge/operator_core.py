"""Dense complex matrices and the structural predicates used on them.

Matrices are plain ``numpy`` arrays throughout the package.  :class:`Operator`
is a thin immutable wrapper that attaches a basis label and fixes the JSON
layout; every function here accepts either form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.linalg

# Padé-13 threshold on the 1-norm (Higham 2005); decides the squaring count.
_THETA_13 = 5.371920351148152
_MAX_SQUARINGS = 30
BLOCK_RTOL = 1e-13


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


@dataclass(frozen=True)
class Operator:
    """Square complex matrix tagged with the basis it is written in."""

    matrix: np.ndarray
    basis_label: str = "generic"

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def to_json(self) -> dict[str, Any]:
        return operator_to_json(self.matrix, self.basis_label)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Operator":
        return cls(operator_from_json(data), data.get("basis_label", "generic"))


def operator_to_json(a, basis_label: str = "generic") -> dict[str, Any]:
    """Row-major ``{dim, basis_label, re, im}`` record."""
    m = np.asarray(a, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "basis_label": basis_label,
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def operator_from_json(data: dict[str, Any]) -> np.ndarray:
    dim = int(data["dim"])
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data["im"], dtype=float)
    if re.size != dim * dim or im.size != dim * dim:
        raise DimensionError(f"expected {dim * dim} entries, got re={re.size}, im={im.size}")
    return (re + 1j * im).reshape(dim, dim)


@dataclass(frozen=True)
class BlockPartition:
    """Grouping of basis indices into consecutive spectral blocks.

    ``ordering`` lists basis indices block by block; ``None`` means the
    natural order.  It lets blocks that are not contiguous in the tensor
    product layout (e.g. the Rabi energy shells) be expressed without
    reordering the operators themselves.
    """

    block_sizes: tuple[int, ...]
    labels: tuple[tuple[float, float], ...] | None = None
    ordering: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if any(b <= 0 for b in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if self.labels is not None and len(self.labels) != len(self.block_sizes):
            raise ValueError("one (alpha, beta) label per block is required")
        if self.ordering is not None:
            order = tuple(int(i) for i in self.ordering)
            if sorted(order) != list(range(self.dim)):
                raise ValueError("ordering must be a permutation of range(dim)")
            object.__setattr__(self, "ordering", order)

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    @classmethod
    def unit(cls, dim: int) -> "BlockPartition":
        return cls((1,) * dim)

    def index_blocks(self) -> list[np.ndarray]:
        order = np.arange(self.dim) if self.ordering is None else np.asarray(self.ordering)
        bounds = np.cumsum((0,) + self.block_sizes)
        return [order[bounds[i]:bounds[i + 1]] for i in range(len(self.block_sizes))]


@dataclass(frozen=True)
class Conjugation:
    """Antiunitary involution ``(J v)_i = phases[i] * conj(v[permutation[i]])``."""

    permutation: np.ndarray
    phases: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        perm = np.asarray(self.permutation, dtype=int)
        phases = np.ones(perm.size, dtype=complex) if self.phases is None else np.asarray(self.phases, dtype=complex)
        if phases.shape != perm.shape or sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("permutation must be a permutation of range(dim) with one phase per index")
        if not np.allclose(np.abs(phases), 1.0, atol=1e-14):
            raise ValueError("phases must be unit complex numbers")
        if not np.array_equal(perm[perm], np.arange(perm.size)):
            raise ValueError("J^2 = 1 requires an involutive permutation")
        if not np.allclose(phases * np.conj(phases[perm]), 1.0, atol=1e-14):
            raise ValueError("J^2 = 1 violated by the phases")
        perm.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def plain(cls, dim: int) -> "Conjugation":
        """Entrywise complex conjugation in the working basis."""
        return cls(np.arange(dim))

    @property
    def dim(self) -> int:
        return self.permutation.size

    def unitary_part(self) -> np.ndarray:
        """``M`` with ``J v = M conj(v)``."""
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[np.arange(self.dim), self.permutation] = self.phases
        return m

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return self.phases * np.conj(v[self.permutation])

    def conjugate_operator(self, a) -> np.ndarray:
        """``J a J`` as a matrix, i.e. ``M conj(a) conj(M)``."""
        m = self.unitary_part()
        return m @ np.conj(np.asarray(a, dtype=complex)) @ np.conj(m)


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def adjoint(a) -> np.ndarray:
    return _as_matrix(a).conj().T


def commutator(a, b) -> np.ndarray:
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"commutator of {a.shape} and {b.shape}")
    return a @ b - b @ a


def hermiticity_defect(a) -> float:
    m = _as_matrix(a)
    return frobenius(m - m.conj().T)


def is_hermitian(a, rtol: float = 1e-12) -> bool:
    m = _as_matrix(a)
    return hermiticity_defect(m) <= rtol * max(1.0, frobenius(m))


def matexp(a, scalar: complex = 1.0) -> np.ndarray:
    """``exp(scalar * a)`` by Padé-13 scaling and squaring.

    When the squaring count would exceed 30 and ``scalar * a`` is
    anti-Hermitian the exponential is taken through ``eigh`` instead;
    otherwise :class:`OverflowError` is raised.
    """
    m = _as_matrix(a)
    x = scalar * m
    if not np.all(np.isfinite(x)):
        raise OverflowError("non-finite entries in matexp argument")
    norm1 = np.linalg.norm(x, 1)
    squarings = 0 if norm1 <= _THETA_13 else int(np.ceil(np.log2(norm1 / _THETA_13)))
    if squarings > _MAX_SQUARINGS:
        if is_hermitian(m) and complex(scalar).real == 0.0:
            return unitary_exp(m, -complex(scalar).imag)
        raise OverflowError(f"matexp needs {squarings} squarings (> {_MAX_SQUARINGS})")
    return scipy.linalg.expm(x)


def unitary_exp(h, t: float | np.ndarray = 1.0) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h`` via the spectral decomposition.

    ``h`` may be a stack ``(..., d, d)``; ``t`` broadcasts over the stack.
    """
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(h)
    t = np.asarray(t, dtype=float)[..., None]
    phase = np.exp(-1j * t * w)
    return (v * phase[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def unitarity_defect(u) -> float:
    m = _as_matrix(u)
    return frobenius(m.conj().T @ m - np.eye(m.shape[0]))


def bandwidth(a, part: BlockPartition, rtol: float = BLOCK_RTOL) -> int:
    """Smallest K with every block (i, j), |i - j| > K, negligible."""
    m = _as_matrix(a)
    if part.dim != m.shape[0]:
        raise DimensionError(f"partition covers {part.dim} indices, operator has dim {m.shape[0]}")
    threshold = rtol * frobenius(m)
    block_of = np.empty(m.shape[0], dtype=int)
    for b, idx in enumerate(part.index_blocks()):
        block_of[idx] = b
    nb = len(part.block_sizes)
    norms2 = np.zeros((nb, nb))
    np.add.at(norms2, (block_of[:, None], block_of[None, :]), np.abs(m) ** 2)
    rows, cols = np.nonzero(np.sqrt(norms2) > threshold)
    return int(np.max(np.abs(rows - cols))) if rows.size else 0


def conjugation_defect(a, j: Conjugation) -> float:
    m = _as_matrix(a)
    if j.dim != m.shape[0]:
        raise DimensionError(f"conjugation acts on dim {j.dim}, operator has dim {m.shape[0]}")
    return frobenius(j.conjugate_operator(m) - m)


def interior(a, keep: Sequence[int] | np.ndarray) -> np.ndarray:
    """Sub-matrix on the index set ``keep``."""
    idx = np.asarray(keep, dtype=int)
    return _as_matrix(a)[np.ix_(idx, idx)]
