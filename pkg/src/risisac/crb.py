"""Fisher information and CRB for the target DoA pair (theta_1, theta_2).

The unknowns are ``xi = [theta_1, theta_2, Re(alpha_t), Im(alpha_t)]``; the
noise-free echo is ``eta = alpha_t vec(H_t(phi) W S)`` with ``S S^H = L I``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, steering_derivative
from .metrics import ris_cascade, target_vector

RCOND_MIN = 1e-12


class SingularFisherError(np.linalg.LinAlgError):
    """The beamformer puts (numerically) no information on the target."""


@dataclass
class FimBlocks:
    F_tt: np.ndarray
    F_ta: np.ndarray
    F_aa: np.ndarray

    def full(self) -> np.ndarray:
        return np.block([[self.F_tt, self.F_ta], [self.F_ta.T, self.F_aa]])


def target_derivative_vectors(ch: ChannelSet, phi):
    """``v``, ``dv/dtheta_1`` and ``dv/dtheta_2`` for ``H_t = v v^T``."""
    v = target_vector(ch, phi)
    dv1 = ch.alpha_dt * steering_derivative(ch.M, ch.theta_1)
    dv2 = ch.G.T @ (phi * (ch.alpha_rt * steering_derivative(ch.N, ch.theta_2)))
    return v, dv1, dv2


def ht_derivatives(ch: ChannelSet, phi):
    """Partial derivatives of ``H_t(phi)`` w.r.t. theta_1 and theta_2."""
    v, dv1, dv2 = target_derivative_vectors(ch, phi)
    Hdot = np.outer(dv1, v) + np.outer(v, dv1)
    Hddot = np.outer(dv2, v) + np.outer(v, dv2)
    return Hdot, Hddot


def fim_kernels(ch: ChannelSet, phi):
    """The six ``M x M`` kernels ``A_i`` with ``F_i(W) = Tr{A_i W W^H}``.

    Order: (Hd,Hd), (Hd,Hdd), (Hd,H), (Hdd,Hdd), (Hdd,H), (H,H), where the
    pair ``(X, Y)`` stands for ``X^H Y``.
    """
    v = target_vector(ch, phi)
    Ht = np.outer(v, v)
    Hd, Hdd = ht_derivatives(ch, phi)
    pairs = ((Hd, Hd), (Hd, Hdd), (Hd, Ht), (Hdd, Hdd), (Hdd, Ht), (Ht, Ht))
    return [X.conj().T @ Y for X, Y in pairs]


def fim_traces(W, phi, ch: ChannelSet) -> np.ndarray:
    """``F_1..F_6`` (complex), the W- and phi-dependent traces of the FIM."""
    R = W @ W.conj().T
    return np.array([np.trace(A @ R) for A in fim_kernels(ch, phi)])


def assemble_fim(F, L, alpha_t, sigma_r2) -> FimBlocks:
    """Build the 2x2 blocks from the six traces."""
    F = np.asarray(F)
    c1 = 2.0 * L * abs(alpha_t) ** 2 / sigma_r2
    c2 = 2.0 * L / sigma_r2
    F_tt = c1 * np.array([[F[0].real, F[1].real], [F[1].real, F[3].real]])
    row = np.array([1.0, 1.0j])
    F_ta = c2 * np.real(np.conj(alpha_t) * np.outer([F[2], F[4]], row))
    F_aa = c2 * F[5].real * np.eye(2)
    return FimBlocks(F_tt=F_tt, F_ta=F_ta, F_aa=F_aa)


def fim(W, phi, ch: ChannelSet, L, alpha_t, sigma_r2) -> FimBlocks:
    return assemble_fim(fim_traces(W, phi, ch), L, alpha_t, sigma_r2)


def _inv2(A):
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    scale = np.abs(A).max()
    if scale == 0 or abs(det) < RCOND_MIN * scale**2:
        raise SingularFisherError("2x2 block is singular")
    return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det


def schur_theta(blocks: FimBlocks) -> np.ndarray:
    """``F_tt - F_ta F_aa^{-1} F_ta^T``."""
    return blocks.F_tt - blocks.F_ta @ _inv2(blocks.F_aa) @ blocks.F_ta.T


def crb_theta(blocks: FimBlocks) -> float:
    """``CRB_theta1 + CRB_theta2``."""
    return float(np.trace(_inv2(schur_theta(blocks))))


def crb_value(W, phi, ch, L, alpha_t, sigma_r2) -> float:
    """CRB sum, or ``inf`` when the FIM is singular."""
    try:
        return crb_theta(fim(W, phi, ch, L, alpha_t, sigma_r2))
    except SingularFisherError:
        return float("inf")


def crb_from_traces(F, L, alpha_t, sigma_r2) -> float:
    try:
        return crb_theta(assemble_fim(F, L, alpha_t, sigma_r2))
    except SingularFisherError:
        return float("inf")
