"""Joint beamforming and reflection design under a radar SNR constraint.

Block ascent on the fractional-programming surrogate: closed-form ``r, c``
and receive filter ``u``, a ball QP for ``w`` with the SNR constraint as a
linear cut, and an ADMM step for ``phi`` in which the quadratic dependence of
the radar response on ``phi`` is majorised by a second-order Taylor bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .fp import assemble_phi_form, assemble_w_form, update_c, update_r
from .initialization import channel_gain_reflection, initial_beamformer
from .metrics import (
    DesignVariables,
    RunTrace,
    max_radar_snr,
    radar_snr_lower_bound,
    ris_cascade,
    sum_rate,
    target_channel_matrix,
    target_vector,
    unvec,
    vec,
)
from .solvers import BallQpProblem, InfeasibleError, max_eigenvalue, solve_ball_qp, solve_polydisc_qp


@dataclass
class SnrAdmmState:
    phi: np.ndarray
    varphi: np.ndarray
    mu: np.ndarray
    rho: float


@dataclass
class PhiConstraint:
    """Linearised radar cut ``Re{u_tilde^H phi} <= eps4`` plus its ingredients."""

    u_tilde: np.ndarray
    eps4: float
    F: np.ndarray
    L_tilde: np.ndarray
    L_bar: np.ndarray
    lam: float
    phi_hat: np.ndarray


def update_u(W, phi, ch: ChannelSet) -> np.ndarray:
    """Receive filter maximising the SNR bound, scaled so ``u^H (I kron H_t) w = 1``."""
    y = vec(target_channel_matrix(ch, phi) @ W)
    energy = np.vdot(y, y).real
    if energy <= 0:
        raise ValueError("zero target response: the receive filter is undefined")
    return y / energy


def snr_threshold(u, Gamma_t, L, sigma_t2, sigma_r2) -> float:
    """``eps3``: the SNR bound reaches ``Gamma_t`` iff ``|u^H (I kron H_t) w| >= eps3``."""
    return float(np.sqrt(Gamma_t * sigma_r2 * np.vdot(u, u).real / (L * sigma_t2)))


def radar_cut_vector(u, ch: ChannelSet, phi) -> np.ndarray:
    """``(I kron H_t^H) u`` so that the radar response is ``Re{c^H w}``."""
    Ht = target_channel_matrix(ch, phi)
    M = ch.M
    return vec(Ht.conj().T @ unvec(u, M))


def lifted_terms(W, u, ch: ChannelSet):
    """``F`` and symmetric ``L_tilde`` of ``(I kron H_t(phi)) w = (I kron h h^T) w + F phi + ...``.

    The quadratic part satisfies ``u^H vec(T phi phi^T T^T W) = phi^T L_tilde phi``
    with ``T = G^T diag(h_rt)``.
    """
    T = ris_cascade(ch, ch.h_rt)
    h = ch.h_dt
    F = np.kron(W.T @ T, h[:, None]) + np.kron((W.T @ h)[:, None], T)
    U = unvec(u, ch.M)
    Lt = T.T @ W @ U.conj().T @ T
    return F, 0.5 * (Lt + Lt.T)


def real_lift(L_tilde) -> np.ndarray:
    """``L_bar`` with ``Re{phi^T L_tilde phi} = -z^T L_bar z``, ``z = [Re phi; Im phi]``."""
    P, Q = L_tilde.real, L_tilde.imag
    return np.block([[-P, Q], [Q, P]])


def build_phi_constraint(W, u, ch: ChannelSet, phi_hat, Gamma_t, L, sigma_t2, sigma_r2) -> PhiConstraint:
    """Linearise ``Re{u^H (I kron H_t(phi)) w} >= eps3`` around unit-modulus ``phi_hat``.

    ``z^T L_bar z`` is bounded by its Taylor expansion with curvature
    ``lam = lambda_max(L_bar + L_bar^T) >= 0``; on the polydisc
    ``||z - z_hat||^2 <= 2N - 2 z_hat^T z`` so the bound is affine in ``z``
    and valid wherever ``|phi_n| <= 1``.
    """
    N = ch.N
    eps3 = snr_threshold(u, Gamma_t, L, sigma_t2, sigma_r2)
    F, Lt = lifted_terms(W, u, ch)
    Lb = real_lift(Lt)
    Ls = Lb + Lb.T
    lam = max(max_eigenvalue(Ls), 0.0)
    z = np.concatenate([phi_hat.real, phi_hat.imag])
    row = (Ls - lam * np.eye(2 * N)) @ z
    k = row[:N] + 1j * row[N:]
    u_tilde = -F.conj().T @ u + k
    h = ch.h_dt
    const = np.vdot(u, vec(np.outer(h, h) @ W)).real
    eps4 = float(-eps3 + z @ Lb @ z + const - lam * N)
    return PhiConstraint(u_tilde=u_tilde, eps4=eps4, F=F, L_tilde=Lt, L_bar=Lb, lam=lam, phi_hat=phi_hat)


def taylor_bound(cons: PhiConstraint, phi) -> float:
    """Affine upper bound on ``z^T L_bar z`` used by the linearised cut."""
    N = phi.size
    z = np.concatenate([phi.real, phi.imag])
    zh = np.concatenate([cons.phi_hat.real, cons.phi_hat.imag])
    Lb = cons.L_bar
    return float(-zh @ Lb @ zh + cons.lam * N + zh @ (Lb + Lb.T - cons.lam * np.eye(2 * N)) @ z)


def admm_phi_step(state: SnrAdmmState, g, D, cons: PhiConstraint | None, shrink=0.8, floor=1e-6):
    """One ADMM round: polydisc QP for ``phi``, phase alignment, dual ascent.

    Returns the new state and whether the linearised cut was satisfiable.
    """
    rho = state.rho
    Dp = D + np.eye(D.shape[0]) / (2 * rho)
    gp = g + (state.varphi - rho * state.mu) / rho
    if cons is None:
        phi, ok = solve_polydisc_qp(Dp, gp)
    else:
        phi, ok = solve_polydisc_qp(Dp, gp, cons.u_tilde, cons.eps4)
    varphi = np.exp(1j * np.angle(phi + rho * state.mu))
    mu = state.mu + (phi - varphi) / rho
    return SnrAdmmState(phi=phi, varphi=varphi, mu=mu, rho=max(shrink * rho, floor)), ok


def snr_w_step(fp_a, B_gram, W, phi, ch: ChannelSet, cfg: SystemConfig, max_tries=50):
    """Ball-QP ``w`` update with the SNR cut for the filter matched to ``W``.

    When the cut is out of reach for the current filter, ``w`` is moved to
    the largest achievable radar response and the filter refreshed; this
    power iteration raises the SNR bound monotonically.
    """
    M = ch.M
    for _ in range(max_tries):
        u = update_u(W, phi, ch)
        c = radar_cut_vector(u, ch, phi)
        eps3 = snr_threshold(u, cfg.Gamma_t, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
        try:
            w = solve_ball_qp(BallQpProblem(B_gram, fp_a, cfg.Pt, c, eps3))
            return unvec(w, M), True
        except InfeasibleError:
            W = unvec(np.sqrt(cfg.Pt) * c / np.linalg.norm(c), M)
    return W, False


def check_snr_feasible(ch: ChannelSet, phi, cfg: SystemConfig):
    v = target_vector(ch, phi)
    n_cols = ch.K + ch.M
    W = np.zeros((ch.M, n_cols), dtype=complex)
    W[:, ch.K] = np.sqrt(cfg.Pt) * v.conj() / np.linalg.norm(v)
    best = max_radar_snr(W, phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
    if best < cfg.Gamma_t:
        raise InfeasibleError(
            f"infeasible threshold: Gamma_t = {cfg.Gamma_t:.4g} exceeds the best SNR {best:.4g} at the initial phi",
            best,
        )


def _converged(trace: RunTrace, tol, window=3, residual_tol=1e-3):
    if trace.iterations <= window:
        return False
    rates = np.asarray(trace.sum_rate[-window - 1 :])
    rel = np.abs(np.diff(rates)) / np.maximum(np.abs(rates[1:]), 1e-12)
    return bool(np.all(rel < tol) and trace.residual[-1] < residual_tol)


def run_algorithm1(cfg: SystemConfig, ch: ChannelSet, phi_init=None, optimize_phi=True):
    """Sum-rate maximisation under ``SNR >= Gamma_t``; ``Gamma_t <= 0`` drops the radar cut.

    ``optimize_phi=False`` keeps the reflection at its initial value and only
    iterates the beamformer (the fixed-reflection baseline).
    Returns ``(DesignVariables, RunTrace)``.
    """
    radar = cfg.Gamma_t > 0
    noise = cfg.sigma_k2
    phi = channel_gain_reflection(ch) if phi_init is None else np.asarray(phi_init, dtype=complex)
    if radar:
        check_snr_feasible(ch, phi, cfg)
    W = initial_beamformer(ch, phi, cfg.Pt, noise)
    state = SnrAdmmState(phi=phi.copy(), varphi=phi.copy(), mu=np.zeros_like(phi), rho=cfg.penalty_init[0])
    trace = RunTrace()
    for _ in range(cfg.max_iters):
        r = update_r(W, state.phi, ch, noise)
        c = update_c(W, state.phi, ch, noise, r)
        a, B_gram, _ = assemble_w_form(state.phi, ch, r, c, noise)
        if radar:
            W, _ = snr_w_step(a, B_gram, W, state.phi, ch, cfg)
        else:
            W = unvec(solve_ball_qp(BallQpProblem(B_gram, a, cfg.Pt)), ch.M)
        if optimize_phi:
            g, D, _ = assemble_phi_form(W, ch, r, c, noise)
            cons = None
            if radar:
                u = update_u(W, state.phi, ch)
                cons = build_phi_constraint(
                    W, u, ch, state.varphi, cfg.Gamma_t, cfg.L, cfg.sigma_t2, cfg.sigma_r2
                )
            state, _ = admm_phi_step(state, g, D, cons, cfg.shrink, cfg.penalty_floor)
        residual = float(np.linalg.norm(state.phi - state.varphi))
        constraint = (
            radar_snr_lower_bound(W, update_u(W, state.phi, ch), state.phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
            if radar
            else np.nan
        )
        trace.record(sum_rate(W, state.phi, ch, noise), constraint, residual, state.rho)
        if _converged(trace, cfg.tol):
            trace.converged = True
            break

    # return a feasible point: unit-modulus phi, beamformer refit for it
    phi = state.varphi
    r = update_r(W, phi, ch, noise)
    c = update_c(W, phi, ch, noise, r)
    a, B_gram, _ = assemble_w_form(phi, ch, r, c, noise)
    if radar:
        W, ok = snr_w_step(a, B_gram, W, phi, ch, cfg)
        trace.flagged = not ok
        u = update_u(W, phi, ch)
    else:
        W = unvec(solve_ball_qp(BallQpProblem(B_gram, a, cfg.Pt)), ch.M)
        u = None
    trace.flagged = trace.flagged or not trace.converged
    trace.final = DesignVariables(W=W, phi=phi, u=u)
    return trace.final, trace
