"""Concrete periodic Hamiltonians: interaction-picture Rabi, driven oscillator,
and seeded random banded matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple

import numpy as np

from .operator_core import BlockPartition, Conjugation
from .trigpoly import FourierOp

VARIANTS = ("RABI", "DRIVEN_HO", "RANDOM_BANDED")

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()

_DEFAULTS: dict[str, dict[str, Any]] = {
    "RABI": {"g": 1.0, "delta": 0.0, "omega": 1.0, "fock_dim": 40},
    "DRIVEN_HO": {"omega": 1.0, "sine_coeffs": [1.0], "fock_dim": 40},
    "RANDOM_BANDED": {"dim": 8, "bandwidth": 1, "num_modes": 2, "seed": 42, "scale": 1.0, "real": False},
}


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim)).astype(complex)


@dataclass(frozen=True)
class ModelSpec:
    variant: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        variant = self.variant.upper()
        if variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}; expected one of {VARIANTS}")
        unknown = set(self.params) - set(_DEFAULTS[variant])
        if unknown:
            raise ValueError(f"unknown {variant} parameters: {sorted(unknown)}")
        merged = {**_DEFAULTS[variant], **self.params}
        if variant in ("RABI", "DRIVEN_HO") and int(merged["fock_dim"]) < 8:
            raise ValueError("fock_dim must be at least 8")
        if variant == "RANDOM_BANDED" and not 1 <= int(merged["dim"]) <= 64:
            raise ValueError("random banded dim must be in 1..64")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "params", merged)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelSpec":
        data = dict(data)
        variant = data.pop("variant", None)
        if variant is None:
            raise ValueError("model spec needs a 'variant'")
        params = data.pop("params", {})
        params = {**params, **data}
        return cls(variant, params)

    def to_dict(self) -> dict[str, Any]:
        return {"variant": self.variant, **self.params}

    def __getitem__(self, key: str) -> Any:
        return self.params[key]


class Model(NamedTuple):
    h: FourierOp
    partition: BlockPartition
    conjugation: Conjugation | None
    spec: ModelSpec

    def interior(self, margin: int) -> np.ndarray:
        """Basis indices whose Fock level stays ``margin`` away from the cutoff."""
        return interior_indices(self.spec, margin)


def interior_indices(spec: ModelSpec, margin: int) -> np.ndarray:
    if spec.variant == "RANDOM_BANDED":
        return np.arange(int(spec["dim"]))
    fock = int(spec["fock_dim"])
    levels = np.arange(max(fock - margin, 0))
    if spec.variant == "RABI":
        return np.concatenate([levels, fock + levels])
    return levels


def _rabi_partition(fock: int) -> BlockPartition:
    # spin-up index n <-> v+ (x) phi_n; spin-down index fock + n <-> v- (x) phi_n.
    # Energy shells: {v- phi_0}, {v- phi_{i+1}, v+ phi_i}, ..., {v+ phi_{fock-1}}.
    order = [fock]
    sizes = [1]
    for i in range(fock - 1):
        order += [fock + i + 1, i]
        sizes.append(2)
    order.append(fock - 1)
    sizes.append(1)
    labels = tuple((np.pi * (i + 1 / 3), np.pi * (i + 2 / 3)) for i in range(-1, fock))
    return BlockPartition(tuple(sizes), labels, tuple(order))


def build_rabi(spec: ModelSpec) -> Model:
    """Interaction-picture Rabi model with unit period (T = pi / omega)."""
    fock = int(spec["fock_dim"])
    g, delta = float(spec["g"]), float(spec["delta"])
    a = annihilation(fock)
    ad = a.conj().T
    eye_b = np.eye(fock)
    static = g * (np.kron(SIGMA_MINUS, ad) + np.kron(SIGMA_PLUS, a)) + 0.5 * delta * np.kron(SIGMA_Z, eye_b)
    h = FourierOp.from_dict(
        {0: static, 1: g * np.kron(SIGMA_PLUS, ad), -1: g * np.kron(SIGMA_MINUS, a)},
        basis_label="spin(x)fock",
    )
    return Model(h, _rabi_partition(fock), Conjugation.plain(2 * fock), spec)


def build_driven_ho(spec: ModelSpec) -> Model:
    """``omega (N + 1/2) + f(t) (a + a^dag)`` with ``f = sum_m b_m sin(2 pi m t)``."""
    fock = int(spec["fock_dim"])
    omega = float(spec["omega"])
    amps = [float(b) for b in spec["sine_coeffs"]]
    a = annihilation(fock)
    x = a + a.conj().T
    modes = {0: omega * (number(fock) + 0.5 * np.eye(fock))}
    for m, b in enumerate(amps, start=1):
        if b != 0.0:
            modes[m] = -0.5j * b * x
            modes[-m] = 0.5j * b * x
    h = FourierOp.from_dict(modes, basis_label="fock")
    # (J psi)(s) = conj(psi(-s)) is conj composed with parity (-1)^n in the Fock basis.
    parity = (-1.0) ** np.arange(fock)
    return Model(h, BlockPartition.unit(fock), Conjugation(np.arange(fock), parity), spec)


def build_random_banded(spec: ModelSpec) -> Model:
    """Seeded Hermitian-pair modes, each banded with the given bandwidth."""
    dim, width = int(spec["dim"]), int(spec["bandwidth"])
    num_modes, scale = int(spec["num_modes"]), float(spec["scale"])
    real = bool(spec["real"])
    rng = np.random.default_rng(int(spec["seed"]))
    i, j = np.indices((dim, dim))
    mask = np.abs(i - j) <= width

    def draw() -> np.ndarray:
        m = rng.uniform(-scale, scale, (dim, dim)).astype(complex)
        if not real:
            m = m + 1j * rng.uniform(-scale, scale, (dim, dim))
        return np.where(mask, m, 0.0)

    base = draw()
    modes = {0: 0.5 * (base + base.conj().T)}
    for n in range(1, num_modes + 1):
        b = draw()
        modes[n] = b
        modes[-n] = b.conj().T
    h = FourierOp.from_dict(modes, basis_label="random")
    conj = Conjugation.plain(dim) if real else None
    return Model(h, BlockPartition.unit(dim), conj, spec)


_BUILDERS = {"RABI": build_rabi, "DRIVEN_HO": build_driven_ho, "RANDOM_BANDED": build_random_banded}


def build(spec: ModelSpec | Mapping[str, Any]) -> Model:
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec.from_dict(spec)
    return _BUILDERS[spec.variant](spec)


def default_state(model: Model) -> np.ndarray:
    """Low-energy test vector: spin-down (x) vacuum for Rabi, vacuum otherwise."""
    psi = np.zeros(model.h.dim, dtype=complex)
    if model.spec.variant == "RABI":
        psi[int(model.spec["fock_dim"])] = 1.0
    else:
        psi[0] = 1.0
    return psi
