"""Dense complex matrix helpers: validation, exponential, spectral norm, JSON.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; every
public function in the package funnels its inputs through :func:`as_matrix`.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

EPS = np.finfo(float).eps


def as_matrix(a, *, copy: bool = False) -> np.ndarray:
    """Return ``a`` as a finite, square, complex128 2-D array.

    Raises ``ValueError`` for non-square, empty or non-finite input.
    """
    m = np.array(a, dtype=np.complex128) if copy else np.asarray(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValueError("matrix dimension must be at least 1")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def mat_exp(a) -> np.ndarray:
    """Matrix exponential ``e^A`` (scaling and squaring with a Pade kernel)."""
    return linalg.expm(as_matrix(a))


def spectral_norm(a) -> float:
    """Largest singular value of ``a``."""
    m = as_matrix(a)
    if m.shape[0] == 1:
        return float(abs(m[0, 0]))
    return float(np.linalg.norm(m, 2))


def matrix_to_json(a) -> dict:
    m = as_matrix(a)
    return {
        "dim": int(m.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    entries = obj["entries"]
    if dim < 1 or len(entries) != dim * dim:
        raise ValueError(f"expected {dim * dim} entries for dim={dim}, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return as_matrix(flat.reshape(dim, dim))


def random_hermitian(rng: np.random.Generator, dim: int, norm: float = 1.0) -> np.ndarray:
    """GUE-style Hermitian matrix rescaled to the given spectral norm."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (x + x.conj().T) / 2
    return h * (norm / spectral_norm(h))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return mat_exp(1j * random_hermitian(rng, dim, norm=np.pi))


# Pauli matrices, used by the built-in systems and the demos.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
