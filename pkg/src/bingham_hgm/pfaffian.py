"""
Pfaffian matrices for the Bingham normalising constant.

For distinct values ``phi`` with multiplicities ``d`` the block derivative
vector ``G = (dC/dphi_1, ..., dC/dphi_q)`` satisfies ``dG/dphi_i = P_i G`` with

    (P_i G)_j = (d_j G_i - d_i G_j) / (2 (phi_i - phi_j)),               j != i
    (P_i G)_i = G_i - sum_{k != i} (d_k G_i - d_i G_k) / (2 (phi_i - phi_k))

The reduced system acts on ``(C, G_1, ..., G_{q-1})`` with the last block
held at zero; it follows from the full one by substituting
``G_q = C - sum_{l<q} G_l``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InputError, SingularPointError
from .model import MultiplicityTheta

__all__ = [
    "MIN_GAP",
    "pfaffian_matrix",
    "pfaffian_matrices",
    "reduced_pfaffian_matrix",
    "directional_field",
    "reduced_directional_field",
    "log_vector_field",
    "log_directional_field",
]

MIN_GAP = 1e-10


def _unpack(theta, d):
    if isinstance(theta, MultiplicityTheta):
        return np.asarray(theta.phi, dtype=float), np.asarray(theta.d, dtype=float)
    phi = np.asarray(theta, dtype=float)
    d = np.ones_like(phi) if d is None else np.asarray(d, dtype=float)
    return phi, d


def _half_inverse_gaps(phi):
    """``1 / (2 (phi_i - phi_j))`` with zeros on the diagonal."""
    diff = phi[:, None] - phi[None, :]
    np.fill_diagonal(diff, np.inf)
    gap = np.abs(diff).min() if phi.size > 1 else np.inf
    if gap < MIN_GAP:
        raise SingularPointError(
            f"parameter values {gap:.3g} apart; merge them with a tie tolerance "
            "so the degenerate system is used"
        )
    return 0.5 / diff


def pfaffian_matrix(i: int, theta, d=None) -> np.ndarray:
    """The q x q matrix ``P_i`` of the full block system (0-based ``i``).

    ``theta`` is a :class:`MultiplicityTheta` or a vector of distinct values
    (then ``d`` gives the multiplicities, default all ones).
    """
    phi, d = _unpack(theta, d)
    q = phi.size
    if not 0 <= i < q:
        raise InputError(f"index {i} out of range for q={q}")
    w = _half_inverse_gaps(phi)[i]  # w[k] = 1/(2(phi_i - phi_k)), w[i] = 0
    P = np.zeros((q, q))
    others = np.arange(q) != i
    # rows j != i
    P[others, i] = d[others] * w[others]
    P[others, others] = -d[i] * w[others]
    # row i
    P[i, i] = 1.0 - np.sum(d * w)
    P[i, others] = d[i] * w[others]
    return P


def pfaffian_matrices(theta, d=None) -> np.ndarray:
    """All matrices stacked, shape ``(q, q, q)``."""
    phi, d = _unpack(theta, d)
    return np.stack([pfaffian_matrix(i, phi, d) for i in range(phi.size)])


def reduced_pfaffian_matrix(i: int, theta, d=None) -> np.ndarray:
    """The q x q matrix acting on ``(C, G_1, ..., G_{q-1})``; needs ``phi[-1] == 0``.

    ``i`` ranges over the free blocks ``0 .. q-2``.  A :class:`MultiplicityTheta`
    is re-gauged so that its smallest value is the one held at zero.
    """
    phi, d = _unpack(theta, d)
    if isinstance(theta, MultiplicityTheta):
        phi = phi - phi[-1]
    q = phi.size
    if q < 2:
        raise InputError("no reduced system for a single distinct value")
    if phi[-1] != 0.0:
        raise InputError("reduced system needs the last value held at 0")
    if not 0 <= i < q - 1:
        raise InputError(f"index {i} out of range for the free blocks 0..{q - 2}")
    P = pfaffian_matrix(i, phi, d)
    # substitute G_{q-1} = C - sum_{l<q-1} G_l in rows 0..q-2 of P
    R = np.zeros((q, q))
    R[0, i + 1] = 1.0
    R[1:, 0] = P[:-1, -1]
    R[1:, 1:] = P[:-1, :-1] - P[:-1, -1][:, None]
    return R


def directional_field(phi, d, velocity, G) -> np.ndarray:
    """``sum_i velocity_i P_i(phi) G`` without forming the matrices.

    Component j equals ``v_j G_j + sum_{i != j} (v_i - v_j)(d_j G_i - d_i G_j) / (2(phi_i - phi_j))``.
    """
    phi = np.asarray(phi, dtype=float)
    d = np.asarray(d, dtype=float)
    v = np.asarray(velocity, dtype=float)
    G = np.asarray(G, dtype=float)
    w = _half_inverse_gaps(phi)  # w[i, j]
    dv = v[:, None] - v[None, :]  # v_i - v_j
    A = G[:, None] * d[None, :] - d[:, None] * G[None, :]  # A[i, j] = d_j G_i - d_i G_j
    return v * G + np.sum(dv * w * A, axis=0)


def reduced_directional_field(phi, d, velocity, Gt) -> np.ndarray:
    """``sum_i velocity_i R_i(phi) Gt`` for the reduced layout (``phi[-1] == 0``, ``velocity[-1] == 0``)."""
    Gt = np.asarray(Gt, dtype=float)
    full = np.append(Gt[1:], Gt[0] - Gt[1:].sum())
    dG = directional_field(phi, d, velocity, full)
    return np.concatenate([[np.dot(velocity[:-1], Gt[1:])], dG[:-1]])


def log_vector_field(i: int, theta, GL, d=None) -> np.ndarray:
    """``d G^L / d phi_i`` for ``G^L = G / C``: ``(P_i G^L)_j - G^L_i G^L_j``."""
    GL = np.asarray(getattr(GL, "values", GL), dtype=float)
    P = pfaffian_matrix(i, theta, d)
    return P @ GL - GL[i] * GL


def log_directional_field(phi, d, velocity, GL) -> np.ndarray:
    """``sum_i velocity_i dG^L/dphi_i``; the companion ``d log C`` rate is ``velocity . GL``."""
    GL = np.asarray(GL, dtype=float)
    return directional_field(phi, d, velocity, GL) - np.dot(velocity, GL) * GL
