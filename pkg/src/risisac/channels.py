"""Geometry, ULA steering vectors, path loss and Rician channel sampling.

Planar layout: the BS sits at the origin and measures angles from the x-axis,
direction ``(cos t, sin t)``. The RIS array measures angles so that direction
``t`` points along ``(sin t, -cos t)``; with this convention the RIS-to-BS
bearing is ``theta_BR - pi/2`` and the target bearing formula below holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


def steering_vector(n: int, theta: float) -> np.ndarray:
    """Half-wavelength ULA response ``exp(-j*pi*i*sin(theta))``, i = 0..n-1."""
    return np.exp(-1j * np.pi * np.arange(n) * np.sin(theta))


def steering_derivative(n: int, theta: float) -> np.ndarray:
    """d/dtheta of :func:`steering_vector`."""
    i = np.arange(n)
    return (-1j * np.pi * i * np.cos(theta)) * np.exp(-1j * np.pi * i * np.sin(theta))


def pathloss(d, exponent: float, ref_db: float = -30.0):
    """Amplitude gain ``sqrt(C0 * d**-exponent)`` with C0 given in dB at 1 m."""
    return np.sqrt(10.0 ** (ref_db / 10.0) * np.asarray(d, dtype=float) ** (-exponent))


def bs_direction(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def ris_direction(theta):
    return np.array([np.sin(theta), -np.cos(theta)])


@dataclass
class SystemGeometry:
    theta_1: float
    d_BT: float
    d_BU: np.ndarray
    theta_BU: np.ndarray  # user bearings seen from the BS
    theta_RU: np.ndarray  # user bearings seen from the RIS
    ris_pos: np.ndarray
    target_pos: np.ndarray
    user_pos: np.ndarray


def default_user_angles(K: int) -> np.ndarray:
    if K == 1:
        return np.zeros(1)
    return np.linspace(-np.pi / 3, np.pi / 3, K)


def derive_geometry(cfg: SystemConfig) -> SystemGeometry:
    num = cfg.d_BR * np.sin(cfg.theta_BR) - cfg.d_RT * np.cos(cfg.theta_2)
    den = cfg.d_BR * np.cos(cfg.theta_BR) + cfg.d_RT * np.sin(cfg.theta_2)
    if abs(den) < 1e-12:
        raise ValueError("degenerate geometry: target lies on the BS array axis")
    theta_1 = float(np.arctan(num / den))
    ris = cfg.d_BR * bs_direction(cfg.theta_BR)
    target = ris + cfg.d_RT * ris_direction(cfg.theta_2)
    angles = np.asarray(cfg.user_angles if cfg.user_angles is not None else default_user_angles(cfg.K), dtype=float)
    users = ris[None, :] + cfg.d_RU * np.stack([ris_direction(a) for a in angles])
    d_BU = np.linalg.norm(users, axis=1)
    if np.any(d_BU < 1e-9):
        raise ValueError("degenerate geometry: a user coincides with the BS")
    theta_BU = np.arctan2(users[:, 1], users[:, 0])
    return SystemGeometry(
        theta_1=theta_1,
        d_BT=float(np.linalg.norm(target)),
        d_BU=d_BU,
        theta_BU=theta_BU,
        theta_RU=angles,
        ris_pos=ris,
        target_pos=target,
        user_pos=users,
    )


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries (real and imaginary parts N(0, 1/2)).

    Real and imaginary parts are drawn interleaved in row-major order, so a
    larger shape extends a smaller one drawn from the same generator state.
    """
    x = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (x[..., 0] + 1j * x[..., 1]) / np.sqrt(2.0)


def sample_rician(rows, cols, pathloss, kappa, los, rng, pure_los=False):
    """Rician matrix ``pl*(sqrt(k/(k+1)) los + sqrt(1/(k+1)) nlos)``.

    ``kappa = inf`` or ``pure_los=True`` returns ``pathloss * los`` without
    touching the generator.
    """
    los = np.asarray(los, dtype=complex)
    if los.shape != (rows, cols):
        raise ValueError(f"los has shape {los.shape}, expected {(rows, cols)}")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if pure_los or np.isinf(kappa):
        return pathloss * los
    nlos = complex_gaussian((rows, cols), rng)
    return pathloss * (np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos)


@dataclass
class ChannelSet:
    h_dk: np.ndarray  # (K, M)
    h_rk: np.ndarray  # (K, N)
    G: np.ndarray  # (N, M)
    h_dt: np.ndarray  # (M,)
    h_rt: np.ndarray  # (N,)
    theta_1: float
    theta_2: float
    alpha_dt: complex
    alpha_rt: complex

    @property
    def M(self):
        return self.G.shape[1]

    @property
    def N(self):
        return self.G.shape[0]

    @property
    def K(self):
        return self.h_dk.shape[0]

    def with_angles(self, theta_1=None, theta_2=None) -> "ChannelSet":
        """Same realization with the target links rebuilt at new DoAs."""
        t1 = self.theta_1 if theta_1 is None else theta_1
        t2 = self.theta_2 if theta_2 is None else theta_2
        return ChannelSet(
            h_dk=self.h_dk,
            h_rk=self.h_rk,
            G=self.G,
            h_dt=self.alpha_dt * steering_vector(self.M, t1),
            h_rt=self.alpha_rt * steering_vector(self.N, t2),
            theta_1=t1,
            theta_2=t2,
            alpha_dt=self.alpha_dt,
            alpha_rt=self.alpha_rt,
        )


def build_channel_set(cfg: SystemConfig, geometry: SystemGeometry, rng) -> ChannelSet:
    """One Rician draw of every link.

    Each link gets its own child stream of ``rng`` and fills its entries
    RIS-element first, so changing ``N`` keeps the direct links and the
    shared RIS elements of a seed unchanged (common random numbers).
    """
    M, N, K = cfg.M, cfg.N, cfg.K
    e_br, e_rt, e_ru, e_bt, e_bu = cfg.pathloss_exponents
    ref = cfg.pathloss_ref_db
    g_rng, *user_rngs = rng.spawn(1 + 2 * K)
    g_los = np.outer(steering_vector(N, cfg.theta_RB), steering_vector(M, cfg.theta_BR))
    G = sample_rician(N, M, pathloss(cfg.d_BR, e_br, ref), cfg.kappa, g_los, g_rng, cfg.pure_los)
    h_dk = np.empty((K, M), dtype=complex)
    h_rk = np.empty((K, N), dtype=complex)
    for k in range(K):
        d_rng, r_rng = user_rngs[2 * k], user_rngs[2 * k + 1]
        los_d = steering_vector(M, geometry.theta_BU[k])[None, :]
        h_dk[k] = sample_rician(1, M, pathloss(geometry.d_BU[k], e_bu, ref), cfg.kappa, los_d, d_rng, cfg.pure_los)[0]
        los_r = steering_vector(N, geometry.theta_RU[k])[None, :]
        h_rk[k] = sample_rician(1, N, pathloss(cfg.d_RU, e_ru, ref), cfg.kappa, los_r, r_rng, cfg.pure_los)[0]
    alpha_dt = complex(pathloss(geometry.d_BT, e_bt, ref))
    alpha_rt = complex(pathloss(max(cfg.d_RT, 1.0), e_rt, ref))
    return ChannelSet(
        h_dk=h_dk,
        h_rk=h_rk,
        G=G,
        h_dt=alpha_dt * steering_vector(M, geometry.theta_1),
        h_rt=alpha_rt * steering_vector(N, cfg.theta_2),
        theta_1=geometry.theta_1,
        theta_2=cfg.theta_2,
        alpha_dt=alpha_dt,
        alpha_rt=alpha_rt,
    )


def realize(cfg: SystemConfig, seed=None) -> ChannelSet:
    """Geometry plus one seeded channel draw."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    return build_channel_set(cfg, derive_geometry(cfg), rng)
