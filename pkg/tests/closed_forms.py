"""Closed-form effective coefficients of the two worked examples."""

from __future__ import annotations

import numpy as np

from floquet_forge.models import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, annihilation, number


def ho_coefficients(omega: float, fock: int) -> list[np.ndarray]:
    """Effective coefficients 0..3 of the oscillator driven by sin(2 pi t)."""
    a = annihilation(fock)
    p = 1j * (a - a.conj().T)
    return [
        omega * (number(fock) + 0.5 * np.eye(fock)),
        omega / (2 * np.pi) * p,
        3 * omega / (8 * np.pi**2) * np.eye(fock),
        omega**3 / (8 * np.pi**3) * p,
    ]


def rabi_jc(g: float, fock: int) -> np.ndarray:
    a = annihilation(fock)
    return g * (np.kron(SIGMA_MINUS, a.conj().T) + np.kron(SIGMA_PLUS, a))


def rabi_bloch_siegert(g: float, fock: int) -> np.ndarray:
    """First-order coefficient; with T = pi/omega it equals T * g**2/(2 omega) X."""
    a = annihilation(fock)
    ad = a.conj().T
    eye = np.eye(fock)
    x = (np.kron(SIGMA_Z, number(fock)) - np.kron(SIGMA_MINUS @ SIGMA_PLUS, eye)
         - np.kron(SIGMA_Z, a @ a + ad @ ad))
    return g**2 / (2 * np.pi) * x
