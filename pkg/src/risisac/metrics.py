"""Communication and sensing performance metrics.

Conventions: ``W`` is ``M x (K+M)`` with columns ``w_1..w_{K+M}`` (the first
K carry user symbols, the rest radar waveforms) and ``w = vec(W)`` stacks
columns. Channels enter through plain transposes, ``y_k = h_k^T x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet, steering_vector


def vec(W):
    return np.asarray(W).reshape(-1, order="F")


def unvec(w, M):
    return np.asarray(w).reshape(M, -1, order="F")


@dataclass
class DesignVariables:
    W: np.ndarray
    phi: np.ndarray
    u: np.ndarray | None = None

    @property
    def w(self):
        return vec(self.W)


@dataclass
class RunTrace:
    """Per-iteration record of an optimizer run."""

    sum_rate: list = field(default_factory=list)
    constraint: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    penalty: list = field(default_factory=list)
    converged: bool = False
    flagged: bool = False
    final: DesignVariables | None = None

    def record(self, sum_rate, constraint=np.nan, residual=0.0, penalty=np.nan):
        self.sum_rate.append(float(sum_rate))
        self.constraint.append(float(constraint))
        self.residual.append(float(residual))
        self.penalty.append(float(penalty))

    @property
    def iterations(self):
        return len(self.sum_rate)


def ris_cascade(ch: ChannelSet, h_r) -> np.ndarray:
    """``G^T diag(h_r)``: maps reflection coefficients to the BS-side channel."""
    return ch.G.T * np.asarray(h_r)[None, :]


def composite_user_channel(ch: ChannelSet, phi, k: int) -> np.ndarray:
    if not 0 <= k < ch.K:
        raise IndexError(f"user index {k} out of range for K={ch.K}")
    return ch.h_dk[k] + ch.G.T @ (phi * ch.h_rk[k])


def composite_user_channels(ch: ChannelSet, phi) -> np.ndarray:
    """All ``h_k(phi)`` stacked as rows, shape (K, M)."""
    return ch.h_dk + (ch.h_rk * phi[None, :]) @ ch.G


def target_vector(ch: ChannelSet, phi) -> np.ndarray:
    """``h_dt + G^T diag(phi) h_rt`` (one leg of the round-trip channel)."""
    return ch.h_dt + ch.G.T @ (phi * ch.h_rt)


def target_channel_matrix(ch: ChannelSet, phi) -> np.ndarray:
    v = target_vector(ch, phi)
    return np.outer(v, v)


def user_gains(W, phi, ch: ChannelSet) -> np.ndarray:
    """``|h_k^T w_j|^2`` as a (K, K+M) array."""
    return np.abs(composite_user_channels(ch, phi) @ W) ** 2


def sinr(W, phi, ch: ChannelSet, noise) -> np.ndarray:
    P = user_gains(W, phi, ch)
    K = ch.K
    signal = P[np.arange(K), np.arange(K)]
    return signal / (P.sum(axis=1) - signal + np.asarray(noise))


def sum_rate(W, phi, ch: ChannelSet, noise) -> float:
    return float(np.sum(np.log2(1.0 + sinr(W, phi, ch, noise))))


def radar_snr_lower_bound(W, u, phi, ch: ChannelSet, L, sigma_t2, sigma_r2) -> float:
    """Jensen (worst-case) bound ``L st2 |u^H (I kron H_t) w|^2 / (sr2 u^H u)``."""
    u = np.asarray(u)
    uu = np.vdot(u, u).real
    if uu <= 0:
        raise ValueError("receive filter u must be nonzero")
    Ht = target_channel_matrix(ch, phi)
    y = vec(Ht @ W)
    return float(L * sigma_t2 * abs(np.vdot(u, y)) ** 2 / (sigma_r2 * uu))


def max_radar_snr(W, phi, ch: ChannelSet, L, sigma_t2, sigma_r2) -> float:
    """The bound evaluated at the best receive filter (Cauchy-Schwarz)."""
    y = vec(target_channel_matrix(ch, phi) @ W)
    return float(L * sigma_t2 * np.vdot(y, y).real / sigma_r2)


def radar_snr_monte_carlo(W, u, phi, ch, L, sigma_t2, sigma_r2, trials, rng) -> float:
    """Sample mean of the matched-filter SNR over random unit-power QPSK blocks."""
    Ht = target_channel_matrix(ch, phi)
    HW = Ht @ W
    n = W.shape[1]
    uu = np.vdot(u, u).real
    acc = 0.0
    for _ in range(trials):
        S = (rng.choice([-1.0, 1.0], (n, L)) + 1j * rng.choice([-1.0, 1.0], (n, L))) / np.sqrt(2.0)
        SS = S @ S.conj().T
        # (SS^H kron H_t) w = vec(H_t W (SS^H)^T)
        acc += abs(np.vdot(u, vec(HW @ SS.T))) ** 2
    return float(sigma_t2 * (acc / trials) / (L * sigma_r2 * uu))


def chi2_2_cdf(x):
    return 1.0 - np.exp(-np.asarray(x, dtype=float) / 2.0)


def chi2_2_ppf(p):
    return -2.0 * np.log1p(-np.asarray(p, dtype=float))


def detection_probability(eta0: float, eta1: float, pfa: float) -> float:
    if not (eta0 > 0 and eta1 > 0):
        raise ValueError("eta0 and eta1 must be positive")
    if not 0 < pfa < 1:
        raise ValueError("pfa must lie in (0, 1)")
    return float(1.0 - chi2_2_cdf(eta0 / eta1 * chi2_2_ppf(1.0 - pfa)))


def transmit_beampattern(W, grid) -> np.ndarray:
    """Radiated power ``||a_M(theta)^T W||^2`` on each grid angle.

    The transpose matches the channel convention, so a column proportional
    to ``conj(a_M(theta0))`` peaks at ``theta0``.
    """
    W = np.asarray(W)
    A = np.stack([steering_vector(W.shape[0], t) for t in np.atleast_1d(grid)])
    return np.sum(np.abs(A @ W) ** 2, axis=1)


def beampattern_db(gain) -> np.ndarray:
    gain = np.asarray(gain, dtype=float)
    return 10.0 * np.log10(np.maximum(gain, 1e-300) / gain.max())
