"""Small dense convex solvers and a unit-modulus manifold optimizer.

Everything here is specialised to the tiny problem shapes produced by the
beamforming algorithms: a norm-ball QP with one linear cut, a 14-variable
SDP, a polydisc-constrained QP and Riemannian CG on the complex circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class InfeasibleError(ValueError):
    """A constraint set is empty; ``max_achievable`` reports the best value."""

    def __init__(self, message, max_achievable=None):
        super().__init__(message)
        self.max_achievable = max_achievable


class SolverError(RuntimeError):
    """Barrier iterations broke down; ``diagnostics`` holds the last iterate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def hermitian_part(H):
    H = np.asarray(H)
    return 0.5 * (H + H.conj().T)


def max_eigenvalue(H) -> float:
    """Largest eigenvalue of the Hermitian part of ``H``."""
    H = hermitian_part(H)
    n = H.shape[0]
    return float(scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])


# --------------------------------------------------------------------------
# norm-ball QP with one halfspace


@dataclass
class BallQpProblem:
    """``min x^H Q x - Re{a^H x} + quartic*||x||^4``
    subject to ``Re{c^H x} >= b`` (if ``c`` given) and ``||x||^2 <= radius2``.
    """

    Q: np.ndarray
    a: np.ndarray
    radius2: float
    c: np.ndarray | None = None
    b: float = 0.0
    quartic: float = 0.0

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=complex)
        self.a = np.asarray(self.a, dtype=complex)
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=complex)
        scale = max(np.abs(self.Q).max(initial=0.0), 1e-300)
        if np.abs(self.Q - self.Q.conj().T).max(initial=0.0) > 1e-9 * scale:
            raise ValueError("Q must be Hermitian")
        if not self.radius2 > 0:
            raise ValueError("radius2 must be positive")
        if self.quartic < 0:
            raise ValueError("quartic weight must be nonnegative")

    def objective(self, x) -> float:
        x = np.asarray(x)
        s = np.vdot(x, x).real
        return float(np.vdot(x, self.Q @ x).real - np.vdot(self.a, x).real + self.quartic * s**2)


def solve_ball_qp(p: BallQpProblem) -> np.ndarray:
    """Exact KKT solution by bisection on the ball multiplier.

    With the spectral split ``Q = V diag(q) V^H`` the stationary point for a
    shift ``tau`` (ball multiplier plus ``2*quartic*||x||^2``) and halfspace
    multiplier ``nu`` is ``x = V diag(1/(q+tau)) V^H (a + nu c)/2``; ``nu`` has
    a closed form for each ``tau`` and ``||x||`` decreases in ``tau``.
    """
    R2 = float(p.radius2)
    R = np.sqrt(R2)
    c = p.c
    has_cut = c is not None and np.linalg.norm(c) > 0
    if c is not None and not has_cut and p.b > 0:
        raise InfeasibleError("linear constraint 0 >= b > 0 cannot hold", 0.0)
    if has_cut:
        reach = np.linalg.norm(c) * R
        if p.b > reach * (1 + 1e-12):
            raise InfeasibleError(f"Re{{c^H x}} can reach at most {reach:.6g} < b = {p.b:.6g}", reach)
        if p.b >= reach * (1 - 1e-12):
            return R * c / np.linalg.norm(c)

    q, V = np.linalg.eigh(hermitian_part(p.Q))
    q = np.maximum(q, 0.0)
    a_t = V.conj().T @ p.a
    c_t = V.conj().T @ c if has_cut else None
    scale = q[-1] if q[-1] > 0 else max(np.linalg.norm(p.a) / (2 * R), 1.0)
    tau_min = 0.0 if q[0] > 1e-10 * scale else 1e-12 * scale

    def point(tau):
        inv = 1.0 / (q + tau)
        z = 0.5 * inv * a_t
        if has_cut:
            slack = p.b - np.vdot(c_t, z).real
            if slack > 0:
                z = z + slack / np.sum(inv * np.abs(c_t) ** 2) * inv * c_t
        return z, np.vdot(z, z).real

    def bracket(g):
        # smallest tau >= tau_min with g(tau) <= 0, g decreasing
        if g(tau_min) <= 0:
            return tau_min, tau_min
        hi = max(scale, tau_min, 1e-300)
        while g(hi) > 0:
            hi *= 2.0
        lo = tau_min
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        return lo, hi

    # ball: ||x(tau)||^2 <= R2
    _, tau_ball = bracket(lambda t: point(t)[1] - R2)
    tau = tau_ball
    if p.quartic > 0:
        _, tau_q = bracket(lambda t: 2.0 * p.quartic * point(t)[1] - t)
        tau = max(tau, tau_q)
    z, _ = point(tau)
    return V @ z


def project_ball_halfspace(y, c, b, R):
    """Euclidean projection onto ``{||x|| <= R, Re{c^H x} >= b}`` (nonempty)."""
    y = np.asarray(y, dtype=complex)

    def ball(x):
        n = np.linalg.norm(x)
        return x if n <= R else x * (R / n)

    if c is None or np.linalg.norm(c) == 0:
        return ball(y)
    x = ball(y)
    if np.vdot(c, x).real >= b - 1e-15 * abs(b):
        return x
    cn = np.linalg.norm(c)
    e = c / cn
    h = b / cn
    # project onto the plane first, then onto the disc it cuts from the ball
    yp = y + (h - np.vdot(e, y).real) * e
    r2 = R**2 - h**2
    if r2 <= 0:
        return h * e
    perp = yp - h * e
    n = np.linalg.norm(perp)
    if n**2 <= r2:
        return yp
    return h * e + perp * (np.sqrt(r2) / n)


# --------------------------------------------------------------------------
# generic log-barrier path following


def path_following(x, objective, barrier, m, tol, t0=None, mu=10.0, max_newton=200):
    """Minimise ``objective`` over the domain of ``barrier``.

    ``objective(x)`` and ``barrier(x)`` return ``(value, grad, hess)``;
    ``barrier(x, value_only=True)`` returns just the value, and ``None``
    outside its domain. ``m`` is the barrier
    parameter so ``m / t`` bounds the suboptimality on exit.
    """
    if barrier(x) is None:
        raise SolverError("starting point is not strictly feasible", {"x": x})
    if t0 is None:
        f0 = objective(x)[0]
        t0 = m / max(abs(f0), tol)
    t = t0
    outer = 0
    while True:
        outer += 1
        prev = np.inf
        for _ in range(max_newton):
            f, gf, Hf = objective(x)
            bv, gb, Hb = barrier(x)
            val = t * f + bv
            g = t * gf + gb
            H = t * Hf + Hb
            # Jacobi scaling tames the spread between active and inactive barriers
            d = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
            Hs = H * np.outer(d, d)
            try:
                dx = -d * scipy.linalg.cho_solve(scipy.linalg.cho_factor(Hs), g * d)
            except np.linalg.LinAlgError:
                # rounding can cost definiteness near the boundary
                dx = -d * np.linalg.lstsq(Hs, g * d, rcond=1e-14)[0]
            dec = -g @ dx
            if not np.isfinite(dec):
                raise SolverError("non-finite Newton decrement", {"x": x, "t": t})
            # stop at convergence, or when rounding stalls the decrement
            if dec < 1e-9 or (dec < 1e-6 and dec > 0.5 * prev):
                break
            prev = dec
            s = 1.0
            while s > 1e-12:
                xn = x + s * dx
                bn = barrier(xn, value_only=True)
                if bn is not None and t * objective(xn)[0] + bn <= val - 0.25 * s * dec:
                    break
                s *= 0.5
            else:
                break
            x = xn
        if m / t < tol or outer > 60:
            return x
        t *= mu


# --------------------------------------------------------------------------
# polydisc QP with one halfspace


def solve_polydisc_qp(D, g, u=None, eps=0.0, tol=1e-11):
    """``min phi^H D phi - Re{g^H phi}`` s.t. ``|phi_n| <= 1`` and ``Re{u^H phi} <= eps``.

    Returns ``(phi, feasible)``. When the cut misses the polydisc entirely the
    least-violating point ``-exp(j*angle(u))`` is returned with ``feasible=False``.
    """
    D = hermitian_part(np.asarray(D, dtype=complex))
    g = np.asarray(g, dtype=complex)
    N = g.size
    use_cut = u is not None and np.linalg.norm(u) > 0
    if use_cut:
        u = np.asarray(u, dtype=complex)
        reach = np.abs(u).sum()
        if eps <= -reach * (1 - 1e-9):
            return -np.exp(1j * np.angle(u)), eps >= -reach
    Dr = np.block([[D.real, -D.imag], [D.imag, D.real]])
    gr = np.concatenate([g.real, g.imag])
    ur = np.concatenate([u.real, u.imag]) if use_cut else None

    def objective(z):
        Dz = Dr @ z
        return z @ Dz - gr @ z, 2 * Dz - gr, 2 * Dr

    def barrier(z, value_only=False):
        x, y = z[:N], z[N:]
        s = 1.0 - x**2 - y**2
        if np.any(s <= 0):
            return None
        val = -np.sum(np.log(s))
        if use_cut:
            slack = eps - ur @ z
            if slack <= 0:
                return None
            val -= np.log(slack)
        if value_only:
            return val
        grad = 2 * z / np.concatenate([s, s])
        H = np.zeros((2 * N, 2 * N))
        idx = np.arange(N)
        H[idx, idx] = 2 / s + 4 * x**2 / s**2
        H[idx + N, idx + N] = 2 / s + 4 * y**2 / s**2
        H[idx, idx + N] = H[idx + N, idx] = 4 * x * y / s**2
        if use_cut:
            grad = grad + ur / slack
            H = H + np.outer(ur, ur) / slack**2
        return val, grad, H

    if use_cut and eps <= 0:
        shrink = 0.5 * (1 - eps / reach)  # strictly between -eps/reach and 1
        phi0 = -shrink * np.exp(1j * np.angle(u))
    else:
        phi0 = np.zeros(N, dtype=complex)
    z0 = np.concatenate([phi0.real, phi0.imag])
    scale = 1.0 + np.abs(Dr).sum() + np.abs(gr).sum()
    z = path_following(z0, objective, barrier, m=N + int(use_cut), tol=tol * scale)
    return z[:N] + 1j * z[N:], True


# --------------------------------------------------------------------------
# small SDP for the (J, f) block


@dataclass
class SdpProblem:
    """Least-squares fit of six trace values under the CRB LMI.

    Minimise ``sum_i |f_i - target_i|^2`` over symmetric ``J`` (2x2) and
    ``f`` subject to ``Tr{J^-1} <= eps``, ``J >= 0`` and::

        [[c1*[[Re f1, Re f2], [Re f2, Re f4]] - J,  B(f3, f5)],
         [B^T,                                      c2*Re f6*I]]  >= 0

    with ``B`` rows ``c2*Re(conj(alpha)*f*[1, j])`` for ``f = f3, f5``.
    The imaginary parts of ``f1, f2, f4, f6`` do not enter the LMI and are
    returned equal to the target.
    """

    target: np.ndarray
    eps: float
    c1: float = 1.0
    c2: float = 1.0
    alpha: complex = 1.0

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=complex).reshape(6)
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def blocks(self, f):
        """``(F_tt, F_ta, F_aa)`` of the LMI for trace values ``f``."""
        f = np.asarray(f)
        F_tt = self.c1 * np.array([[f[0].real, f[1].real], [f[1].real, f[3].real]])
        F_ta = self.c2 * np.real(np.conj(self.alpha) * np.outer([f[2], f[4]], [1.0, 1.0j]))
        F_aa = self.c2 * f[5].real * np.eye(2)
        return F_tt, F_ta, F_aa

    def schur(self, f):
        F_tt, F_ta, F_aa = self.blocks(f)
        if F_aa[0, 0] <= 0:
            return None
        return F_tt - F_ta @ F_ta.T / F_aa[0, 0]

    def lmi(self, J, f):
        F_tt, F_ta, F_aa = self.blocks(f)
        return np.block([[F_tt - J, F_ta], [F_ta.T, F_aa]])

    def objective(self, f) -> float:
        return float(np.sum(np.abs(np.asarray(f) - self.target) ** 2))


def _sym_basis():
    E = np.zeros((3, 2, 2))
    E[0, 0, 0] = 1
    E[1, 0, 1] = E[1, 1, 0] = 1
    E[2, 1, 1] = 1
    return E


def sdp_lmi_data(p: SdpProblem):
    """Constant terms and per-variable coefficient matrices of both LMIs.

    Variables: J11, J12, J22, Y11, Y12, Y22, Re f1, Re f2, Re f4, Re f6,
    Re f3, Im f3, Re f5, Im f5.
    """
    E = _sym_basis()
    ar, ai = p.alpha.real, p.alpha.imag
    A = np.zeros((14, 4, 4))  # CRB LMI
    B = np.zeros((14, 4, 4))  # [[J, I], [I, Y]]
    for k in range(3):
        A[k, :2, :2] = -E[k]
        B[k, :2, :2] = E[k]
        B[3 + k, 2:, 2:] = E[k]
    A[6, :2, :2] = p.c1 * E[0]
    A[7, :2, :2] = p.c1 * E[1]
    A[8, :2, :2] = p.c1 * E[2]
    A[9, 2:, 2:] = p.c2 * np.eye(2)
    for row, (ir, ii) in enumerate(((10, 11), (12, 13))):
        # Re(conj(a) f) and Re(j conj(a) f) as linear maps of (Re f, Im f)
        for col, (kr, ki) in enumerate(((ar, ai), (ai, -ar))):
            A[ir, row, 2 + col] = A[ir, 2 + col, row] = p.c2 * kr
            A[ii, row, 2 + col] = A[ii, 2 + col, row] = p.c2 * ki
    A0 = np.zeros((4, 4))
    B0 = np.zeros((4, 4))
    B0[:2, 2:] = B0[2:, :2] = np.eye(2)
    return A0, A, B0, B


def _sdp_unpack(p: SdpProblem, x):
    J = np.array([[x[0], x[1]], [x[1], x[2]]])
    t = p.target
    f = np.array(
        [
            x[6] + 1j * t[0].imag,
            x[7] + 1j * t[1].imag,
            x[10] + 1j * x[11],
            x[8] + 1j * t[3].imag,
            x[12] + 1j * x[13],
            x[9] + 1j * t[5].imag,
        ]
    )
    return J, f


def logdet_barrier(S0, C, x, value_only=False):
    """``-log det(S0 + sum_i x_i C_i)`` with gradient and Hessian, ``None`` if not PD."""
    Sx = S0 + np.tensordot(x, C, axes=1)
    try:
        Lc = np.linalg.cholesky(Sx)
    except np.linalg.LinAlgError:
        return None
    if value_only:
        return -2 * np.sum(np.log(np.diag(Lc)))
    Si = scipy.linalg.cho_solve((Lc, True), np.eye(Sx.shape[0]))
    SC = np.einsum("jk,ikl->ijl", Si, C)
    grad = -np.einsum("ijj->i", SC)
    H = np.einsum("ijk,lkj->il", SC, SC)
    return -2 * np.sum(np.log(np.diag(Lc))), grad, H


def solve_small_sdp(p: SdpProblem, tol=1e-9):
    """Interior-point solution of :class:`SdpProblem`; returns ``(J, f)``.

    ``Tr{J^-1} <= eps`` is handled through ``[[J, I], [I, Y]] >= 0`` and
    ``Tr{Y} <= eps``. If the target itself is feasible it is returned as is.
    """
    S = p.schur(p.target)
    if S is not None:
        w = np.linalg.eigvalsh(S)
        if w[0] > 0 and np.sum(1.0 / w) <= p.eps:
            return S, p.target.copy()

    A0, A, B0, B = sdp_lmi_data(p)
    t = p.target
    tgt = np.array([t[0].real, t[1].real, t[3].real, t[5].real, t[2].real, t[2].imag, t[4].real, t[4].imag])
    sel = np.arange(6, 14)
    Hobj = np.zeros((14, 14))
    Hobj[sel, sel] = 2.0
    e_trace = np.zeros(14)
    e_trace[[3, 5]] = 1.0

    def objective(x):
        r = x[sel] - tgt
        g = np.zeros(14)
        g[sel] = 2 * r
        return float(r @ r), g, Hobj

    def barrier(x, value_only=False):
        slack = p.eps - x[3] - x[5]
        if slack <= 0:
            return None
        b1 = logdet_barrier(A0, A, x, value_only)
        if b1 is None:
            return None
        b2 = logdet_barrier(B0, B, x, value_only)
        if b2 is None:
            return None
        if value_only:
            return b1 + b2 - np.log(slack)
        val = b1[0] + b2[0] - np.log(slack)
        grad = b1[1] + b2[1] + e_trace / slack
        H = b1[2] + b2[2] + np.outer(e_trace, e_trace) / slack**2
        return val, grad, H

    x0 = np.zeros(14)
    j0 = 4.0 / p.eps
    x0[[0, 2]] = j0
    x0[[3, 5]] = 3.0 * p.eps / 8.0
    diag0 = max(abs(t[0].real), abs(t[3].real), 2.0 * j0 / p.c1)
    x0[6] = x0[8] = diag0
    x0[9] = max(t[5].real, 1.0 / p.c2)
    scale = 1.0 + float(np.sum(np.abs(tgt) ** 2))
    x = path_following(x0, objective, barrier, m=9, tol=tol * scale)
    J, f = _sdp_unpack(p, x)
    return J, f


# --------------------------------------------------------------------------
# Riemannian conjugate gradient on the complex circle manifold


def tangent_project(phi, z):
    """Project ``z`` onto the tangent space of the torus at ``phi``."""
    return z - np.real(z * np.conj(phi)) * phi


def rcg_unit_modulus(fun, egrad, phi0, tol=1e-6, max_iter=500, c_armijo=1e-4):
    """Minimise ``fun`` over unit-modulus vectors.

    ``egrad(phi)`` returns the Euclidean gradient in complex form,
    ``df/dRe + j df/dIm``. Polak-Ribiere+ directions, restart on
    non-descent, Armijo backtracking by halving. Returns the best iterate.
    """
    phi = np.asarray(phi0, dtype=complex)
    phi = phi / np.abs(phi)
    f = fun(phi)
    g = tangent_project(phi, egrad(phi))
    gnorm0 = np.linalg.norm(g)
    if gnorm0 == 0:
        return phi
    d = -g
    step = 1.0 / gnorm0
    for _ in range(max_iter):
        slope = np.vdot(g, d).real
        if slope >= 0:
            d = -g
            slope = -np.vdot(g, g).real
        t = step
        while True:
            cand = phi + t * d
            cand = cand / np.abs(cand)
            fc = fun(cand)
            if fc <= f + c_armijo * t * slope or t < 1e-20:
                break
            t *= 0.5
        if fc > f:
            break
        step = 2.0 * t
        g_new = tangent_project(cand, egrad(cand))
        g_old = tangent_project(cand, g)
        d_old = tangent_project(cand, d)
        beta = max(0.0, np.vdot(g_new, g_new - g_old).real / np.vdot(g, g).real)
        phi, f, g, d = cand, fc, g_new, -g_new + beta * d_old
        if np.linalg.norm(g) <= tol * gnorm0:
            break
    return phi
