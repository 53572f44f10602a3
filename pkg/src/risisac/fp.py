"""Fractional-programming surrogate of the sum rate.

With auxiliaries ``r`` (per-user SINR guess) and ``c`` (per-user receive
scalar) the sum rate is the maximum over ``(r, c)`` of::

    F = sum log2(1 + r_k) + (1/ln 2) * sum_k [ -r_k - |c_k|^2 sigma_k^2
        + 2 sqrt(1 + r_k) Re{c_k^* h_k^T w_k} - |c_k|^2 sum_j |h_k^T w_j|^2 ]

The ``1/ln 2`` weight keeps everything in bits so that ``r = SINR`` is the
exact maximiser. ``F`` is a concave quadratic in ``w = vec(W)`` for fixed
``phi`` and in ``phi`` for fixed ``W``; both compact forms are built here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .metrics import composite_user_channels, sinr, vec

LN2 = np.log(2.0)


@dataclass
class FpState:
    r: np.ndarray
    c: np.ndarray
    a: np.ndarray | None = None
    B_gram: np.ndarray | None = None
    eps1: float | None = None
    g: np.ndarray | None = None
    D: np.ndarray | None = None
    eps2: float | None = None


def update_r(W, phi, ch: ChannelSet, noise) -> np.ndarray:
    return sinr(W, phi, ch, noise)


def update_c(W, phi, ch: ChannelSet, noise, r) -> np.ndarray:
    Hc = composite_user_channels(ch, phi)
    P = Hc @ W
    K = ch.K
    desired = P[np.arange(K), np.arange(K)]
    return np.sqrt(1.0 + r) * desired / (np.sum(np.abs(P) ** 2, axis=1) + noise)


def fp_objective(W, phi, ch: ChannelSet, noise, r, c) -> float:
    """Direct evaluation of ``F`` from its defining sum."""
    P = composite_user_channels(ch, phi) @ W
    K = ch.K
    desired = P[np.arange(K), np.arange(K)]
    inner = (
        -r
        - np.abs(c) ** 2 * noise
        + 2 * np.sqrt(1 + r) * np.real(np.conj(c) * desired)
        - np.abs(c) ** 2 * np.sum(np.abs(P) ** 2, axis=1)
    )
    return float(np.sum(np.log2(1 + r)) + np.sum(inner) / LN2)


def assemble_w_form(phi, ch: ChannelSet, r, c, noise, n_cols=None):
    """``(a, B_gram, eps1)`` with ``F = Re{a^H w} - w^H B_gram w + eps1``."""
    K, M = ch.K, ch.M
    n_cols = K + M if n_cols is None else n_cols
    Hc = composite_user_channels(ch, phi)
    A = np.zeros((M, n_cols), dtype=complex)
    A[:, :K] = (2 * np.sqrt(1 + r) * c)[None, :] * Hc.conj().T
    Q0 = (Hc.conj().T * np.abs(c) ** 2) @ Hc / LN2
    B_gram = np.kron(np.eye(n_cols), Q0)
    eps1 = float(np.sum(np.log2(1 + r)) - (np.sum(r) + np.sum(np.abs(c) ** 2 * noise)) / LN2)
    return vec(A) / LN2, B_gram, eps1


def w_form_value(w, a, B_gram, eps1) -> float:
    return float(np.vdot(a, w).real - np.vdot(w, B_gram @ w).real + eps1)


def cascade_terms(W, ch: ChannelSet):
    """``beta[k, j] = h_dk^T w_j`` and ``b[k, :, j] = diag(h_rk) G w_j``."""
    beta = ch.h_dk @ W
    b = ch.h_rk[:, :, None] * (ch.G @ W)[None, :, :]
    return beta, b


def assemble_phi_form(W, ch: ChannelSet, r, c, noise):
    """``(g, D, eps2)`` with ``F = Re{g^H phi} - phi^H D phi + eps2``.

    Uses ``h_k^T(phi) w_j = beta_kj + b_kj^T phi``.
    """
    K = ch.K
    beta, b = cascade_terms(W, ch)
    c2 = np.abs(c) ** 2
    kk = np.arange(K)
    b_own = b[kk, :, kk]  # (K, N)
    D = np.einsum("k,knj,kmj->nm", c2, b.conj(), b) / LN2
    g = (
        np.einsum("k,kn->n", 2 * np.sqrt(1 + r) * c, b_own.conj())
        - 2 * np.einsum("k,kj,knj->n", c2, beta, b.conj())
    ) / LN2
    inner = (
        -r
        - c2 * noise
        + 2 * np.sqrt(1 + r) * np.real(np.conj(c) * beta[kk, kk])
        - c2 * np.sum(np.abs(beta) ** 2, axis=1)
    )
    eps2 = float(np.sum(np.log2(1 + r)) + np.sum(inner) / LN2)
    return g, D, eps2


def phi_form_value(phi, g, D, eps2) -> float:
    return float(np.vdot(g, phi).real - np.vdot(phi, D @ phi).real + eps2)


def fp_state(W, phi, ch: ChannelSet, noise) -> FpState:
    """Optimal ``(r, c)`` at ``(W, phi)`` together with both compact forms."""
    r = update_r(W, phi, ch, noise)
    c = update_c(W, phi, ch, noise, r)
    a, B_gram, eps1 = assemble_w_form(phi, ch, r, c, noise, W.shape[1])
    g, D, eps2 = assemble_phi_form(W, ch, r, c, noise)
    return FpState(r=r, c=c, a=a, B_gram=B_gram, eps1=eps1, g=g, D=D, eps2=eps2)
