"""2x2 unitary algebra for lossless two-path optics.

Matrices are plain ``numpy`` complex arrays of shape (2, 2).  Row/column 0 is
the upper path ``u``, row/column 1 the lower path ``l``.  A matrix acts on a
column vector of path amplitudes, so an element train ``E1, E2, ...`` (in
propagation order) compiles to ``... @ E2 @ E1``.

Port convention
---------------
The beam splitter uses the symmetric ``i`` convention ``(1/sqrt2)[[1, i], [i, 1]]``.
With it, ``BS @ P(phi, zeta) @ BS`` equals the rotation form of the single-MZI
unitary (``exp(i phi' sigma_y / 2)`` up to global phase) composed with an
input path swap::

    mzi_unitary(p) = i * exp(i (phi + zeta) / 2) * mzi_rotation(p') @ SIGMA_X

so for light entering on the upper path the ``cos^2(M phi / 2)`` output
(detector A) is row 1 and the ``sin^2`` output (detector B) is row 0.  At
``phi = zeta = 0`` all the light exits on row 1, i.e. ``I_A = I_0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

UNITARY_TOL = 1e-12

IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# Port A / port B rows for input on the upper path (see module docstring).
PORT_A = 1
PORT_B = 0


@dataclass(frozen=True)
class MziParams:
    """Longitudinal phase ``phi`` and transverse phase ``zeta`` in radians."""

    phi: float
    zeta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.phi) and np.isfinite(self.zeta)):
            raise ValueError(f"phases must be finite, got phi={self.phi}, zeta={self.zeta}")

    @property
    def phi_prime(self) -> float:
        return self.phi - self.zeta


class PhaseMatch(NamedTuple):
    equal: bool
    phase: float
    residual: float


def _checked(u: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(u)):
        raise ArithmeticError("non-finite matrix entry")
    return u


def beam_splitter() -> np.ndarray:
    """Lossless 50:50 beam splitter ``(1/sqrt2) [[1, i], [i, 1]]``."""
    return np.array([[1, 1j], [1j, 1]], dtype=np.complex128) / np.sqrt(2.0)


def phase_plate(params: MziParams) -> np.ndarray:
    return np.diag([np.exp(1j * params.phi), np.exp(1j * params.zeta)]).astype(np.complex128)


def mzi_unitary(params: MziParams) -> np.ndarray:
    """Single MZI: beam splitter, arm phases, beam splitter."""
    bs = beam_splitter()
    return _checked(bs @ phase_plate(params) @ bs)


def mzi_rotation(phi_prime: float) -> np.ndarray:
    """Rotation form ``cos(phi'/2) I + i sin(phi'/2) sigma_y`` of the single MZI.

    Global phase ``exp(i phi'/2)`` is dropped.
    """
    return cbw_closed_form(phi_prime, 1)


def cbw_closed_form(phi_prime: float, M: int) -> np.ndarray:
    """``exp(i M phi' sigma_y / 2)``, the ideal M-th power of the MZI rotation.

    The global prefactor ``exp(i M phi' / 2)`` is not included; compare
    against compiled networks with :func:`equal_up_to_global_phase`.
    """
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    if not np.isfinite(phi_prime):
        raise ValueError("phi_prime must be finite")
    half = M * phi_prime / 2.0
    c, s = np.cos(half), np.sin(half)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def rotation_frame(u: np.ndarray) -> np.ndarray:
    """Undo the input path swap that the ``i``-convention MZI carries."""
    return u @ SIGMA_X


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return unitarity_error(u) < tol and abs(abs(np.linalg.det(u)) - 1.0) < tol


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - IDENTITY)))


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> PhaseMatch:
    """Test ``a ~= exp(i alpha) b`` in the max norm.

    ``alpha`` is read off the largest-modulus entry of ``b``.  Returns
    ``(equal, alpha, residual)`` with ``alpha`` wrapped to ``(-pi, pi]``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) == 0:
        raise ValueError("reference matrix is identically zero")
    alpha = float(np.angle(a[idx] / b[idx]))
    residual = float(np.max(np.abs(a - np.exp(1j * alpha) * b)))
    return PhaseMatch(residual < tol, alpha, residual)


def apply(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Propagate a path-amplitude vector ``[a_u, a_l]`` through ``u``."""
    return u @ np.asarray(state, dtype=np.complex128)


def output_intensities(u: np.ndarray, state=(1.0, 0.0)) -> np.ndarray:
    """``|E_k|^2`` on each output path for the given input amplitudes."""
    out = apply(u, state)
    return (out * out.conj()).real
