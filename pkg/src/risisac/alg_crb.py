"""Joint beamforming and reflection design under a CRB constraint.

The constraint ``CRB(W, phi) <= eps`` is rewritten with an auxiliary 2x2
``J`` and six trace values ``f`` tied to ``F_i(W, phi)`` by a penalty. The
reflection enters through four unit-modulus copies ``phi, varphi`` (length N)
and ``v, nu`` (length N^2, tracking ``phi kron varphi``), chosen so that every
trace value is affine in each copy separately; each copy is then updated in
closed form by a single majorise-and-align step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .channels import ChannelSet, steering_derivative
from .config import SystemConfig
from .crb import crb_from_traces, crb_value, fim_kernels, target_derivative_vectors
from .fp import assemble_phi_form, assemble_w_form, update_c, update_r
from .initialization import channel_gain_reflection, initial_beamformer
from .metrics import DesignVariables, RunTrace, ris_cascade, sum_rate, unvec, vec
from .solvers import (
    BallQpProblem,
    InfeasibleError,
    SdpProblem,
    logdet_barrier,
    max_eigenvalue,
    path_following,
    sdp_lmi_data,
    solve_ball_qp,
    solve_small_sdp,
)

# (left, right) factor of each trace F_i = sum_k (X w_k)^H (Y w_k)
PAIRS = (("d1", "d1"), ("d1", "d2"), ("d1", "h"), ("d2", "d2"), ("d2", "h"), ("h", "h"))


@dataclass
class ColumnPolynomial:
    """Stacked ``X w_k = P0_k + P1_k phi + P2_k (phi kron phi)`` over all columns k."""

    P0: np.ndarray  # (J*M,)
    P1: np.ndarray  # (J*M, N)
    P2: np.ndarray  # (J*M, N*N)

    def evaluate(self, x, xx):
        return self.P0 + self.P1 @ x + self.P2 @ xx


@dataclass
class AppendixBForms:
    """Polynomial forms of the six FIM traces in the reflection vector.

    ``polys`` holds the column polynomials of ``H_t``, ``dH_t/dtheta_1`` and
    ``dH_t/dtheta_2`` keyed ``h``, ``d1``, ``d2``. The left factor of every
    trace is evaluated at ``(phi, v)`` and the right factor at
    ``(varphi, nu)``; when ``varphi = phi`` and ``v = nu = phi kron phi`` the
    values equal ``scale * Tr{A_i(phi) W W^H}``.
    """

    polys: dict
    kernels: list
    scale: float = 1.0

    def left(self, phi, v):
        return {k: p.evaluate(phi, v) for k, p in self.polys.items()}

    def right(self, varphi, nu):
        return {k: p.evaluate(varphi, nu) for k, p in self.polys.items()}

    def values(self, phi, varphi, v, nu):
        lv, rv = self.left(phi, v), self.right(varphi, nu)
        return self.scale * np.array([np.vdot(lv[x], rv[y]) for x, y in PAIRS])

    def coefficients(self, which, phi, varphi, v, nu):
        """``(a, B)`` with ``F_i = a_i + x^H B[:, i]`` for ``which`` in
        (``phi``, ``v``) and ``F_i = a_i + B[:, i]^H x`` for (``varphi``, ``nu``).
        """
        lv, rv = self.left(phi, v), self.right(varphi, nu)
        a, cols = [], []
        for x, y in PAIRS:
            X, Y = self.polys[x], self.polys[y]
            if which == "phi":
                b = X.P1.conj().T @ rv[y]
                rest = np.vdot(X.P0 + X.P2 @ v, rv[y])
            elif which == "v":
                b = X.P2.conj().T @ rv[y]
                rest = np.vdot(X.P0 + X.P1 @ phi, rv[y])
            elif which == "varphi":
                b = Y.P1.conj().T @ lv[x]
                rest = np.vdot(lv[x], Y.P0 + Y.P2 @ nu)
            elif which == "nu":
                b = Y.P2.conj().T @ lv[x]
                rest = np.vdot(lv[x], Y.P0 + Y.P1 @ varphi)
            else:
                raise ValueError(f"unknown variable {which!r}")
            a.append(rest)
            cols.append(b)
        return self.scale * np.array(a), self.scale * np.stack(cols, axis=1)


def build_appendix_b(W, ch: ChannelSet, phi, scale=1.0) -> AppendixBForms:
    W = np.asarray(W)
    M, J = W.shape
    N = ch.N
    h = ch.h_dt
    hd = ch.alpha_dt * steering_derivative(M, ch.theta_1)
    T = ris_cascade(ch, ch.h_rt)
    T2 = ris_cascade(ch, ch.alpha_rt * steering_derivative(N, ch.theta_2))
    beta = W.T @ h
    gamma = W.T @ hd
    t = W.T @ T  # (J, N): rows t_k = T^T w_k
    s = W.T @ T2

    def outer_rows(m_vec, rows):
        return np.einsum("m,kn->kmn", m_vec, rows)

    def kron_rows(rows, mat):
        return np.einsum("ki,mj->kmij", rows, mat).reshape(J, M, N * N)

    zeros0 = np.zeros((J, M), dtype=complex)
    zeros2 = np.zeros((J, M, N * N), dtype=complex)
    raw = {
        "h": (beta[:, None] * h[None, :], outer_rows(h, t) + beta[:, None, None] * T[None], kron_rows(t, T)),
        "d1": (
            beta[:, None] * hd[None, :] + gamma[:, None] * h[None, :],
            outer_rows(hd, t) + gamma[:, None, None] * T[None],
            zeros2,
        ),
        "d2": (
            zeros0,
            beta[:, None, None] * T2[None] + outer_rows(h, s),
            kron_rows(t, T2) + kron_rows(s, T),
        ),
    }
    polys = {
        k: ColumnPolynomial(P0.reshape(J * M), P1.reshape(J * M, N), P2.reshape(J * M, N * N))
        for k, (P0, P1, P2) in raw.items()
    }
    return AppendixBForms(polys=polys, kernels=fim_kernels(ch, phi), scale=scale)


@dataclass
class CrbAdmmState:
    phi: np.ndarray
    varphi: np.ndarray
    v: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    zeta: np.ndarray
    rho: np.ndarray  # rho1..rho4
    J: np.ndarray = field(default_factory=lambda: np.eye(2))
    f: np.ndarray = field(default_factory=lambda: np.zeros(6, dtype=complex))

    @classmethod
    def start(cls, phi, rho):
        v = np.kron(phi, phi)
        return cls(
            phi=phi.copy(),
            varphi=phi.copy(),
            v=v,
            nu=v.copy(),
            mu=np.zeros_like(phi),
            lam=np.zeros_like(v),
            omega=np.zeros_like(v),
            zeta=np.zeros(6, dtype=complex),
            rho=np.array(rho, dtype=float),
        )

    def residuals(self, F_hat):
        return {
            "phi": float(np.abs(self.phi - self.varphi).max()),
            "v": float(np.abs(self.v - np.kron(self.phi, self.varphi)).max()),
            "nu": float(np.abs(self.nu - self.v).max()),
            "f": float(np.abs(F_hat - self.f).max()),
        }


def crb_scale(ch: ChannelSet, phi, Pt) -> float:
    """Factor ``s`` for the traces: ``s * F_i <= 1`` for any full-power beamformer.

    The penalty weight is ``s^2 / rho1``, so this fixes the effective initial
    penalty independently of path loss and noise level.
    """
    return 1.0 / (Pt * max(np.linalg.norm(A, 2) for A in fim_kernels(ch, phi)))


def sdp_problem(target, cfg: SystemConfig, scale) -> SdpProblem:
    """SDP in scaled traces ``F_hat = scale*F`` and ``J_hat = scale*J/c1``:
    ``c1 = 1``, ``c2 = 1/|alpha|^2`` and ``Tr{J_hat^-1} <= eps*c1/scale``."""
    c1 = 2.0 * cfg.L * abs(cfg.alpha_t) ** 2 / cfg.sigma_r2
    return SdpProblem(
        target=target, eps=cfg.eps_crb * c1 / scale, c1=1.0, c2=1.0 / abs(cfg.alpha_t) ** 2, alpha=cfg.alpha_t
    )


def update_J_f(state: CrbAdmmState, F_hat, cfg: SystemConfig, scale):
    target = F_hat + state.rho[0] * state.zeta
    return solve_small_sdp(sdp_problem(target, cfg, scale))


# ---------------------------------------------------------------- W step


def quartic_weight(A) -> float:
    """``lambda_b``: largest eigenvalue of the Hermitian part of ``A kron conj(A)``.

    ``|w^H A w|^2 = y^H (A kron conj(A)) y`` with ``y = w kron conj(w)``.
    """
    return max(max_eigenvalue(np.kron(A, A.conj())), 0.0)


def w_surrogate(w_t, kernels, d, scale, rho1, n_cols):
    """Convex majoriser of ``(1/2 rho1) sum_i |w^H A_hat_i w + d_i|^2`` tight at ``w_t``.

    With ``A_hat = I kron (scale A_i)`` the pieces are::

        2Re{d^* w^H A_hat w} <= lam_t ||w||^2 + 2Re{w_t^H (A_tilde - lam_t I) w} + c
        |w^H A_hat w|^2 <= lam_b ||w||^4 + |w_t^H A_hat w|^2 + |w^H A_hat w_t|^2
                           - 4 lam_b ||w_t||^2 Re{w_t^H w} + c

    Returns ``(Q, a, quartic, const)`` for ``w^H Q w - Re{a^H w} + quartic ||w||^4 + const``.
    """
    dim = w_t.size
    Q = np.zeros((dim, dim), dtype=complex)
    a = np.zeros(dim, dtype=complex)
    quartic = 0.0
    const = 0.0
    nw2 = np.vdot(w_t, w_t).real
    eye_cols = np.eye(n_cols)
    for A, di in zip(kernels, d):
        As = scale * A
        At = np.conj(di) * As + di * As.conj().T
        lam_t = max(max_eigenvalue(At), 0.0)
        lam_b = quartic_weight(As)
        Ah = np.kron(eye_cols, As)
        Atil = np.kron(eye_cols, At)
        p = Ah @ w_t
        q = Ah.conj().T @ w_t
        tau = np.vdot(w_t, p)
        Q += lam_t * np.eye(dim) + np.outer(q, q.conj()) + np.outer(p, p.conj())
        a += -2.0 * (Atil @ w_t - lam_t * w_t) + 4.0 * lam_b * nw2 * w_t
        quartic += lam_b
        const += (
            np.vdot(w_t, (lam_t * np.eye(dim) - Atil) @ w_t).real
            + 3.0 * lam_b * nw2**2
            - abs(tau) ** 2
            + abs(di) ** 2
        )
    k = 1.0 / (2.0 * rho1)
    return k * Q, k * a, k * quartic, k * const


def penalty_value(w, kernels, d, scale, rho1, n_cols) -> float:
    """``(1/2 rho1) sum_i |w^H A_hat_i w + d_i|^2``."""
    W = unvec(w, w.size // n_cols)
    R = W @ W.conj().T
    vals = np.array([scale * np.trace(A @ R) for A in kernels])
    return float(np.sum(np.abs(vals + d) ** 2) / (2.0 * rho1))


def w_surrogate_step(w_t, fp_a, B_gram, kernels, d, scale, rho1, Pt, n_cols):
    """Minimise ``w^H B w - Re{a^H w}`` plus the penalty majoriser on ``||w||^2 <= Pt``."""
    Q, a, quartic, _ = w_surrogate(w_t, kernels, d, scale, rho1, n_cols)
    Q = B_gram + Q
    Q = 0.5 * (Q + Q.conj().T)
    return solve_ball_qp(BallQpProblem(Q, fp_a + a, Pt, quartic=quartic))


# ---------------------------------------------------------------- phi family


def align_phase(g_tilde):
    """Unit-modulus minimiser of ``Re{g^H x}``; zero entries take phase pi."""
    return np.exp(1j * (np.pi + np.angle(g_tilde)))


def mm_unit_modulus_step(x_t, q, B, rho1, D_extra=None):
    """One majorise-and-align step for ``x^H D x + Re{q^H x}`` with
    ``D = D_extra + (1/2 rho1) B B^H`` over unit-modulus ``x``.

    Minimises the bound ``x^H D x <= lam N + 2 Re{x^H (D - lam I) x_t} + const``,
    so the objective never increases.
    """
    k = 1.0 / (2.0 * rho1)
    if D_extra is None:
        lam = k * max(max_eigenvalue(B.conj().T @ B), 0.0)
        Dx = k * (B @ (B.conj().T @ x_t))
    else:
        D = D_extra + k * (B @ B.conj().T)
        lam = max_eigenvalue(D)
        Dx = D @ x_t
    return align_phase(q + 2.0 * (Dx - lam * x_t))


def phi_family_step(state: CrbAdmmState, forms: AppendixBForms, g_fp, D_fp):
    """Sequential closed-form updates of ``phi``, ``varphi``, ``v`` and ``nu``."""
    rho1, rho2, rho3, rho4 = state.rho
    d = -state.f + rho1 * state.zeta
    N = state.phi.size
    eye = np.eye(N)

    # phi: F conj-linear, FP quadratic, coupling to varphi and v = phi kron varphi
    a, B = forms.coefficients("phi", state.phi, state.varphi, state.v, state.nu)
    q = (
        -g_fp
        + (B @ np.conj(a + d)) / rho1
        + state.mu
        - state.varphi / rho2
        - np.kron(eye, state.varphi[None, :].conj()) @ (state.lam + state.v / rho3)
    )
    state.phi = mm_unit_modulus_step(state.phi, q, B, rho1, D_fp)

    a, B = forms.coefficients("varphi", state.phi, state.varphi, state.v, state.nu)
    q = (
        (B @ (a + d)) / rho1
        - (state.phi + rho2 * state.mu) / rho2
        - np.kron(state.phi[:, None], eye).conj().T @ (state.lam + state.v / rho3)
    )
    state.varphi = mm_unit_modulus_step(state.varphi, q, B, rho1)

    a, B = forms.coefficients("v", state.phi, state.varphi, state.v, state.nu)
    q = (B @ np.conj(a + d)) / rho1 + state.lam - np.kron(state.phi, state.varphi) / rho3 - state.omega - state.nu / rho4
    state.v = mm_unit_modulus_step(state.v, q, B, rho1)

    a, B = forms.coefficients("nu", state.phi, state.varphi, state.v, state.nu)
    q = (B @ (a + d)) / rho1 + state.omega - state.v / rho4
    state.nu = mm_unit_modulus_step(state.nu, q, B, rho1)
    return state


def dual_update(state: CrbAdmmState, F_hat, shrink=0.8, floor=1e-6):
    rho1, rho2, rho3, rho4 = state.rho
    state.zeta = state.zeta + (F_hat - state.f) / rho1
    state.mu = state.mu + (state.phi - state.varphi) / rho2
    state.lam = state.lam + (state.v - np.kron(state.phi, state.varphi)) / rho3
    state.omega = state.omega + (state.nu - state.v) / rho4
    state.rho = np.maximum(shrink * state.rho, floor)
    return state


# ---------------------------------------------------------------- sensing covariance and restoration


def sensing_subspace(ch: ChannelSet, phi) -> np.ndarray:
    """Orthonormal basis of the only directions the FIM can see."""
    v, dv1, dv2 = target_derivative_vectors(ch, phi)
    return scipy.linalg.orth(np.stack([v.conj(), dv1.conj(), dv2.conj()], axis=1))


def sensing_covariance(ch: ChannelSet, phi, Pt, L, alpha_t, sigma_r2):
    """CRB-minimising transmit covariance with trace ``Pt``; returns ``(R, crb)``.

    The CRB is convex in the covariance and only depends on its compression
    to :func:`sensing_subspace`, so a small factored search suffices.
    """
    U = sensing_subspace(ch, phi)
    r = U.shape[1]
    kernels = [U.conj().T @ A @ U for A in fim_kernels(ch, phi)]

    def covariance(x):
        Lf = (x[: r * r] + 1j * x[r * r :]).reshape(r, r)
        X = Lf @ Lf.conj().T
        return Pt * X / np.trace(X).real

    def crb_of(X):
        F = np.array([np.trace(A @ X) for A in kernels])
        return crb_from_traces(F, L, alpha_t, sigma_r2)

    ref = crb_of(Pt * np.eye(r) / r)

    def objective(x):
        val = crb_of(covariance(x))
        return val / ref if np.isfinite(val) else 1e6

    x0 = np.concatenate([np.eye(r).ravel(), np.zeros(r * r)])
    res = scipy.optimize.minimize(objective, x0, method="BFGS", options={"gtol": 1e-10, "maxiter": 2000})
    X = covariance(res.x) if res.fun <= 1.0 else Pt * np.eye(r) / r
    R = U @ X @ U.conj().T
    R = 0.5 * (R + R.conj().T)
    return R, crb_value(_factor(R), phi, ch, L, alpha_t, sigma_r2)


def _factor(R):
    """``X`` with ``X X^H = R`` for PSD ``R`` (eigen square root)."""
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    return V * np.sqrt(np.maximum(w, 0.0))[None, :]


def blend_with_sensing(W, R_s, tau, K):
    """Covariance ``(1 - tau) W W^H + tau R_s`` keeping the user columns' shape."""
    Wr = W[:, K:]
    X = _factor((1.0 - tau) * Wr @ Wr.conj().T + tau * R_s)
    return np.hstack([np.sqrt(1.0 - tau) * W[:, :K], X])


def restore_crb(W, phi, ch: ChannelSet, cfg: SystemConfig, R_s, margin=1e-3, iters=60):
    """Smallest blend towards ``R_s`` with ``CRB <= (1 - margin) eps``; ``W`` if already met."""
    goal = (1.0 - margin) * cfg.eps_crb

    def crb_at(tau):
        return crb_value(blend_with_sensing(W, R_s, tau, ch.K), phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2)

    if crb_at(0.0) <= goal:
        return W, 0.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if crb_at(mid) <= goal:
            hi = mid
        else:
            lo = mid
    return blend_with_sensing(W, R_s, hi, ch.K), hi


def linearized_trace_map(W_t, kernels):
    """Affine real map ``z = [Re w; Im w] -> (Re f1, Re f2, Re f4, Re f6, Re f3, Im f3, Re f5, Im f5)``
    of the traces of ``W_t W^H + W W_t^H - W_t W_t^H``, a PSD-order minorant of ``W W^H``.
    """
    M, n_cols = W_t.shape
    eye_cols = np.eye(n_cols)
    w_t = vec(W_t)
    rows, consts = [], []
    for A in kernels:
        Ah = np.kron(eye_cols, A)
        p = Ah @ w_t
        q = Ah.conj().T @ w_t
        cx = p + q.conj()
        cy = -1j * p + 1j * q.conj()
        rows.append(np.concatenate([cx, cy]))
        consts.append(-np.vdot(w_t, p))
    rows, consts = np.array(rows), np.array(consts)
    order = [(0, "re"), (1, "re"), (3, "re"), (5, "re"), (2, "re"), (2, "im"), (4, "re"), (4, "im")]
    part = {"re": np.real, "im": np.imag}
    G = np.array([part[k](rows[i]) for i, k in order])
    g0 = np.array([part[k](consts[i]) for i, k in order])
    return G, g0


def crb_refit_step(W_t, phi, ch: ChannelSet, cfg: SystemConfig, fp_a, B_gram, tol=1e-9):
    """Maximise the rate surrogate over ``W`` with a convex inner approximation of the CRB set.

    ``W W^H >= W_t W^H + W W_t^H - W_t W_t^H`` and the FIM is monotone in the
    transmit covariance, so meeting the CRB bound with the right-hand side
    implies it for ``W``. ``W_t`` must satisfy the bound strictly.
    """
    kernels = fim_kernels(ch, phi)
    n = W_t.size
    c1 = 2.0 * cfg.L * abs(cfg.alpha_t) ** 2 / cfg.sigma_r2
    c2 = 2.0 * cfg.L / cfg.sigma_r2
    sp = SdpProblem(target=np.zeros(6), eps=cfg.eps_crb, c1=c1, c2=c2, alpha=cfg.alpha_t)
    A0, A, B0, B = sdp_lmi_data(sp)
    G, g0 = linearized_trace_map(W_t, kernels)
    # basis over z = [Re w, Im w, J11, J12, J22, Y11, Y12, Y22]
    dim = 2 * n + 6
    C_crb = np.zeros((dim, 4, 4))
    C_crb[: 2 * n] = np.tensordot(G.T, A[6:14], axes=1)
    C_crb[2 * n : 2 * n + 3] = A[0:3]
    S_crb = A0 + np.tensordot(g0, A[6:14], axes=1)
    C_inv = np.zeros((dim, 4, 4))
    C_inv[2 * n :] = B[0:6]
    e_tr = np.zeros(dim)
    e_tr[[2 * n + 3, 2 * n + 5]] = 1.0

    Br = np.block([[B_gram.real, -B_gram.imag], [B_gram.imag, B_gram.real]])
    ar = np.concatenate([fp_a.real, fp_a.imag])
    H_obj = np.zeros((dim, dim))
    H_obj[: 2 * n, : 2 * n] = 2 * Br

    def objective(z):
        zw = z[: 2 * n]
        Bz = Br @ zw
        g = np.zeros(dim)
        g[: 2 * n] = 2 * Bz - ar
        return float(zw @ Bz - ar @ zw), g, H_obj

    def barrier(z, value_only=False):
        zw = z[: 2 * n]
        p_slack = cfg.Pt - zw @ zw
        t_slack = cfg.eps_crb - z[2 * n + 3] - z[2 * n + 5]
        if p_slack <= 0 or t_slack <= 0:
            return None
        b1 = logdet_barrier(S_crb, C_crb, z, value_only)
        if b1 is None:
            return None
        b2 = logdet_barrier(B0, C_inv, z, value_only)
        if b2 is None:
            return None
        if value_only:
            return b1 + b2 - np.log(p_slack) - np.log(t_slack)
        g_p = np.zeros(dim)
        g_p[: 2 * n] = 2 * zw / p_slack
        H_p = np.zeros((dim, dim))
        H_p[: 2 * n, : 2 * n] = 2 * np.eye(2 * n) / p_slack + 4 * np.outer(zw, zw) / p_slack**2
        val = b1[0] + b2[0] - np.log(p_slack) - np.log(t_slack)
        grad = b1[1] + b2[1] + g_p + e_tr / t_slack
        H = b1[2] + b2[2] + H_p + np.outer(e_tr, e_tr) / t_slack**2
        return val, grad, H

    # strictly feasible start: w_t, J a shrunk Schur complement, Y a stretched inverse
    w_t = vec(W_t)
    F = np.array([np.trace(Ak @ W_t @ W_t.conj().T) for Ak in kernels])
    S = sp.schur(F)
    crb_t = float(np.trace(np.linalg.inv(S)))
    kappa = 0.5 * (1.0 + crb_t / cfg.eps_crb)
    Jm = kappa * S
    Ym = np.linalg.inv(Jm) * 0.5 * (1.0 + cfg.eps_crb * kappa / crb_t)
    w0 = w_t * min(1.0, np.sqrt((1 - 1e-9) * cfg.Pt / max(np.vdot(w_t, w_t).real, 1e-300)))
    z0 = np.concatenate([w0.real, w0.imag, [Jm[0, 0], Jm[0, 1], Jm[1, 1], Ym[0, 0], Ym[0, 1], Ym[1, 1]]])
    scale = 1.0 + abs(objective(z0)[0])
    z = path_following(z0, objective, barrier, m=12, tol=tol * scale)
    return unvec(z[:n] + 1j * z[n : 2 * n], ch.M)


def crb_refit(W, phi, ch: ChannelSet, cfg: SystemConfig, max_iters=30, tol=1e-5):
    """Alternate rate-surrogate updates and :func:`crb_refit_step` from a strictly feasible ``W``.

    The sum rate is nondecreasing and every iterate meets the CRB bound.
    """
    noise = cfg.sigma_k2
    rate = sum_rate(W, phi, ch, noise)
    for _ in range(max_iters):
        r = update_r(W, phi, ch, noise)
        c = update_c(W, phi, ch, noise, r)
        fa, B_gram, _ = assemble_w_form(phi, ch, r, c, noise, W.shape[1])
        W_new = crb_refit_step(W, phi, ch, cfg, fa, B_gram)
        new_rate = sum_rate(W_new, phi, ch, noise)
        if new_rate < rate:
            break
        W, gain, rate = W_new, new_rate - rate, new_rate
        if gain <= tol * max(abs(rate), 1.0):
            break
    return W


def check_crb_feasible(ch: ChannelSet, phi, cfg: SystemConfig):
    R_s, best = sensing_covariance(ch, phi, cfg.Pt, cfg.L, cfg.alpha_t, cfg.sigma_r2)
    if best > cfg.eps_crb:
        raise InfeasibleError(
            f"infeasible threshold: eps = {cfg.eps_crb:.4g} is below the best CRB {best:.4g} at the initial phi",
            best,
        )
    return R_s


# ---------------------------------------------------------------- driver


def _converged(trace: RunTrace, tol, window=3, residual_tol=1e-3):
    if trace.iterations <= window:
        return False
    rates = np.asarray(trace.sum_rate[-window - 1 :])
    rel = np.abs(np.diff(rates)) / np.maximum(np.abs(rates[1:]), 1e-12)
    return bool(np.all(rel < tol) and trace.residual[-1] < residual_tol)


def run_algorithm2(cfg: SystemConfig, ch: ChannelSet, phi_init=None, optimize_phi=True):
    """Sum-rate maximisation under ``CRB <= eps_crb``.

    ``optimize_phi=False`` freezes the reflection (fixed-reflection baseline).
    Returns ``(DesignVariables, RunTrace)``; the returned design is checked
    against the CRB and, if the penalty left a residual violation, blended
    towards the CRB-optimal covariance just enough to meet it.
    """
    noise = cfg.sigma_k2
    n_cols = ch.K + ch.M
    phi = channel_gain_reflection(ch) if phi_init is None else np.asarray(phi_init, dtype=complex)
    check_crb_feasible(ch, phi, cfg)
    W = initial_beamformer(ch, phi, cfg.Pt, noise)
    scale = crb_scale(ch, phi, cfg.Pt)
    state = CrbAdmmState.start(phi, cfg.penalty_init)
    forms = build_appendix_b(W, ch, state.phi, scale)
    F_hat = forms.values(state.phi, state.varphi, state.v, state.nu)
    trace = RunTrace()
    for _ in range(cfg.max_iters):
        r = update_r(W, state.phi, ch, noise)
        c = update_c(W, state.phi, ch, noise, r)
        state.J, state.f = update_J_f(state, F_hat, cfg, scale)
        rho1 = state.rho[0]
        d = -state.f + rho1 * state.zeta
        fa, B_gram, _ = assemble_w_form(state.phi, ch, r, c, noise)
        kernels = fim_kernels(ch, state.phi)
        w = w_surrogate_step(vec(W), fa, B_gram, kernels, d, scale, rho1, cfg.Pt, n_cols)
        W = unvec(w, ch.M)
        forms = build_appendix_b(W, ch, state.phi, scale)
        if optimize_phi:
            g, D, _ = assemble_phi_form(W, ch, r, c, noise)
            state = phi_family_step(state, forms, g, D)
        F_hat = forms.values(state.phi, state.varphi, state.v, state.nu)
        res = state.residuals(F_hat)
        state = dual_update(state, F_hat, cfg.shrink, cfg.penalty_floor)
        trace.record(
            sum_rate(W, state.phi, ch, noise),
            crb_value(W, state.phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2),
            max(res.values()) if optimize_phi else res["f"],
            rho1,
        )
        if _converged(trace, cfg.tol):
            trace.converged = True
            break

    phi = state.phi
    R_s, _ = sensing_covariance(ch, phi, cfg.Pt, cfg.L, cfg.alpha_t, cfg.sigma_r2)
    W, _ = restore_crb(W, phi, ch, cfg, R_s)
    W = crb_refit(W, phi, ch, cfg)
    trace.flagged = not trace.converged
    trace.final = DesignVariables(W=W, phi=phi)
    return trace.final, trace
