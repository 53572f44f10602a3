"""Starting points shared by both design algorithms and the baselines."""

from __future__ import annotations

import numpy as np

from .channels import ChannelSet
from .metrics import composite_user_channels, ris_cascade, target_vector
from .solvers import rcg_unit_modulus


def channel_gain_reflection(ch: ChannelSet, tol=1e-6, max_iter=500) -> np.ndarray:
    """Unit-modulus ``phi`` maximising ``sum_k ||h_k(phi)||^2 + ||v(phi)||^2``.

    ``v(phi) = h_dt + G^T diag(phi) h_rt`` is the one-way target channel.
    """
    direct = np.vstack([ch.h_dk, ch.h_dt[None, :]])
    cascades = [ris_cascade(ch, h) for h in np.vstack([ch.h_rk, ch.h_rt[None, :]])]
    R = sum(T.conj().T @ T for T in cascades)
    s = sum(T.conj().T @ h for T, h in zip(cascades, direct))
    scale = max(np.abs(R).max(), np.abs(s).max(), 1e-300)
    R, s = R / scale, s / scale

    def fun(phi):
        return -float(np.vdot(phi, R @ phi).real + 2 * np.vdot(s, phi).real)

    def egrad(phi):
        return -2 * (R @ phi + s)

    phi0 = np.exp(1j * np.angle(s)) if np.any(s) else np.ones(ch.N, dtype=complex)
    return rcg_unit_modulus(fun, egrad, phi0, tol=tol, max_iter=max_iter)


def initial_beamformer(ch: ChannelSet, phi, Pt, noise, n_cols=None) -> np.ndarray:
    """Full-power regularised zero-forcing user beams with equal power; radar columns empty.

    Starting every column on a common direction traps the rate updates in
    poor local optima when the users' effective channels are correlated.
    """
    n_cols = ch.K + ch.M if n_cols is None else n_cols
    Hc = composite_user_channels(ch, phi)
    K = ch.K
    reg = K * float(np.mean(noise)) / Pt
    V = Hc.conj().T @ np.linalg.inv(Hc @ Hc.conj().T + reg * np.eye(K))
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    W = np.zeros((ch.M, n_cols), dtype=complex)
    W[:, :K] = np.sqrt(Pt / K) * V
    return W


def target_beamformer(ch: ChannelSet, phi, Pt, n_cols=None) -> np.ndarray:
    """All power in one column matched to the target, the SNR-optimal beam."""
    n_cols = ch.K + ch.M if n_cols is None else n_cols
    v = target_vector(ch, phi)
    W = np.zeros((ch.M, n_cols), dtype=complex)
    W[:, ch.K] = np.sqrt(Pt) * v.conj() / np.linalg.norm(v)
    return W
