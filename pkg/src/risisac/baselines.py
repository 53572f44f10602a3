"""Reference schemes the joint designs are compared against."""

from __future__ import annotations

import numpy as np

from .alg_crb import _factor, run_algorithm2, sensing_covariance
from .alg_snr import run_algorithm1, update_u
from .channels import ChannelSet
from .config import SystemConfig
from .crb import crb_value
from .fp import assemble_w_form, update_c, update_r
from .initialization import channel_gain_reflection, initial_beamformer
from .metrics import (
    DesignVariables,
    RunTrace,
    radar_snr_lower_bound,
    sum_rate,
    target_vector,
    unvec,
)
from .solvers import BallQpProblem, InfeasibleError, solve_ball_qp

MODES = ("snr", "crb")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def run_proposed(cfg: SystemConfig, ch: ChannelSet, mode: str):
    _check_mode(mode)
    return run_algorithm1(cfg, ch) if mode == "snr" else run_algorithm2(cfg, ch)


def baseline_comm_only(cfg: SystemConfig, ch: ChannelSet):
    """Sum-rate design with the radar requirement dropped."""
    return run_algorithm1(cfg.with_(Gamma_t=0.0), ch)


def baseline_bf_only(cfg: SystemConfig, ch: ChannelSet, mode: str):
    """Joint beamformer design with ``phi`` frozen at the channel-gain reflection."""
    _check_mode(mode)
    phi = channel_gain_reflection(ch)
    if mode == "snr":
        return run_algorithm1(cfg, ch, phi_init=phi, optimize_phi=False)
    return run_algorithm2(cfg, ch, phi_init=phi, optimize_phi=False)


def minimal_radar_beam(ch: ChannelSet, phi, cfg: SystemConfig, mode: str) -> np.ndarray:
    """Least-power ``W_r`` (``M x M``) meeting the sensing requirement on its own.

    SNR mode: one column matched to the target, scaled to reach ``Gamma_t``.
    CRB mode: the CRB-optimal covariance scaled until the CRB equals ``eps_crb``
    (the CRB is inversely proportional to the transmit power).
    """
    _check_mode(mode)
    M = ch.M
    Wr = np.zeros((M, M), dtype=complex)
    if mode == "snr":
        if cfg.Gamma_t <= 0:
            return Wr
        v = target_vector(ch, phi)
        nv = np.linalg.norm(v)
        p = cfg.Gamma_t * cfg.sigma_r2 / (cfg.L * cfg.sigma_t2 * nv**4)
        Wr[:, 0] = np.sqrt(p) * v.conj() / nv
    else:
        R_s, best = sensing_covariance(ch, phi, cfg.Pt, cfg.L, cfg.alpha_t, cfg.sigma_r2)
        p = cfg.Pt * best / cfg.eps_crb
        Wr = _factor(R_s * (p / cfg.Pt))
    power = np.linalg.norm(Wr) ** 2
    if power > cfg.Pt:
        raise InfeasibleError(
            f"infeasible threshold: the sensing beam alone needs {power:.4g} W of the {cfg.Pt:.4g} W budget",
            cfg.Pt / power,
        )
    return Wr


def _comm_columns(W, phi, ch: ChannelSet, cfg: SystemConfig, budget, trace: RunTrace):
    """Rate-surrogate ascent over the user columns with the radar columns held fixed."""
    K, M = ch.K, ch.M
    noise = cfg.sigma_k2
    for _ in range(cfg.max_iters):
        r = update_r(W, phi, ch, noise)
        c = update_c(W, phi, ch, noise, r)
        a, B_gram, _ = assemble_w_form(phi, ch, r, c, noise, n_cols=K)
        W = W.copy()
        W[:, :K] = unvec(solve_ball_qp(BallQpProblem(B_gram, a, budget)), M)
        trace.record(sum_rate(W, phi, ch, noise))
        rates = trace.sum_rate
        if len(rates) > 3 and all(
            abs(rates[-i] - rates[-i - 1]) < cfg.tol * max(abs(rates[-i]), 1e-12) for i in (1, 2, 3)
        ):
            trace.converged = True
            break
    return W


def baseline_separate(cfg: SystemConfig, ch: ChannelSet, mode: str):
    """Reflection, sensing beam and user beams designed one after another.

    ``phi`` maximises the channel gains, ``W_r`` is the least-power sensing
    beam and the user beams share the leftover power.
    """
    _check_mode(mode)
    K, M = ch.K, ch.M
    phi = channel_gain_reflection(ch)
    Wr = minimal_radar_beam(ch, phi, cfg, mode)
    budget = cfg.Pt - np.linalg.norm(Wr) ** 2
    W = np.zeros((M, K + M), dtype=complex)
    W[:, K:] = Wr
    if budget > 0:
        W[:, :K] = initial_beamformer(ch, phi, budget, cfg.sigma_k2, n_cols=K)
    trace = RunTrace()
    if budget > 0:
        W = _comm_columns(W, phi, ch, cfg, budget, trace)
    else:
        trace.record(sum_rate(W, phi, ch, cfg.sigma_k2))
        trace.converged = True
    u = None
    if mode == "snr" and cfg.Gamma_t > 0:
        u = update_u(W, phi, ch)
        value = radar_snr_lower_bound(W, u, phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
    elif mode == "crb":
        value = crb_value(W, phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2)
    else:
        value = np.nan
    trace.constraint = [value] * trace.iterations
    trace.flagged = not trace.converged
    trace.final = DesignVariables(W=W, phi=phi, u=u)
    return trace.final, trace


SCHEMES = {
    "proposed": run_proposed,
    "comm_only": lambda cfg, ch, mode: baseline_comm_only(cfg, ch),
    "bf_only": baseline_bf_only,
    "separate": baseline_separate,
}
