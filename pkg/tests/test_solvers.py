import numpy as np
import pytest
from conftest import random_complex
from oracles import projected_gradient_ball_qp, random_ball_qp, sdp_grid_f1

from risisac.solvers import (
    BallQpProblem,
    InfeasibleError,
    SdpProblem,
    max_eigenvalue,
    project_ball_halfspace,
    rcg_unit_modulus,
    solve_ball_qp,
    solve_polydisc_qp,
    solve_small_sdp,
    tangent_project,
)

cp = pytest.importorskip("cvxpy")


def test_max_eigenvalue_matches_dense(rng):
    for n in (1, 3, 10):
        A = random_complex(rng, n, n)
        H = A + A.conj().T
        assert max_eigenvalue(H) == pytest.approx(np.linalg.eigvalsh(H).max(), abs=1e-10)
        # non-Hermitian input uses its Hermitian part
        assert max_eigenvalue(A) == pytest.approx(np.linalg.eigvalsh(0.5 * H).max(), abs=1e-10)


def test_projection_matches_cvxpy(rng):
    for _ in range(5):
        n = 4
        y = 3 * random_complex(rng, n)
        c = random_complex(rng, n)
        b = 0.5 * np.linalg.norm(c)
        x = cp.Variable(n, complex=True)
        cp.Problem(cp.Minimize(cp.sum_squares(x - y)), [cp.norm(x) <= 1, cp.real(c.conj() @ x) >= b]).solve(
            solver=cp.CLARABEL
        )
        got = project_ball_halfspace(y, c, b, 1.0)
        assert np.linalg.norm(got) <= 1 + 1e-12 and np.vdot(c, got).real >= b - 1e-12
        assert np.linalg.norm(got - y) <= np.linalg.norm(x.value - y) + 1e-9
        np.testing.assert_allclose(got, x.value, atol=1e-4)


@pytest.mark.parametrize("with_cut", [False, True])
def test_ball_qp_matches_projected_gradient(rng, with_cut):
    for _ in range(4):
        p = random_ball_qp(rng, 6, with_cut)
        x = solve_ball_qp(p)
        ref = projected_gradient_ball_qp(p, iters=5000)
        assert np.linalg.norm(x) ** 2 <= p.radius2 * (1 + 1e-9)
        if with_cut:
            assert np.vdot(p.c, x).real >= p.b - 1e-9
        assert p.objective(x) <= p.objective(ref) + 1e-7


def test_ball_qp_matches_cvxpy(rng):
    p = random_ball_qp(rng, 5, with_cut=True)
    x = cp.Variable(5, complex=True)
    obj = cp.real(cp.quad_form(x, p.Q)) - cp.real(p.a.conj() @ x)
    cons = [cp.sum_squares(x) <= p.radius2, cp.real(p.c.conj() @ x) >= p.b]
    cp.Problem(cp.Minimize(obj), cons).solve()
    assert p.objective(solve_ball_qp(p)) == pytest.approx(p.objective(x.value), abs=1e-5)


def test_ball_qp_with_quartic_term(rng):
    p = random_ball_qp(rng, 5, quartic=2.0)
    ref = projected_gradient_ball_qp(p, iters=5000)
    assert p.objective(solve_ball_qp(p)) <= p.objective(ref) + 1e-7


def test_ball_qp_interior_and_boundary_cases():
    Q = np.diag([2.0, 4.0])
    a = np.array([0.4, 0.8], dtype=complex)
    # unconstrained minimiser Q^-1 a / 2 = (0.1, 0.1) lies inside the ball
    np.testing.assert_allclose(solve_ball_qp(BallQpProblem(Q, a, 1.0)), [0.1, 0.1], atol=1e-10)
    # zero quadratic term: the optimum is the scaled linear direction
    a = np.array([3.0, 4.0j])
    np.testing.assert_allclose(solve_ball_qp(BallQpProblem(np.zeros((2, 2)), a, 4.0)), 2 * a / 5, atol=1e-8)


def test_ball_qp_cut_at_reach_and_infeasible():
    c = np.array([1.0, 1.0j])
    R2 = 2.0
    reach = np.linalg.norm(c) * np.sqrt(R2)
    x = solve_ball_qp(BallQpProblem(np.eye(2), np.zeros(2), R2, c, reach))
    np.testing.assert_allclose(x, np.sqrt(R2) * c / np.linalg.norm(c))
    with pytest.raises(InfeasibleError) as err:
        solve_ball_qp(BallQpProblem(np.eye(2), np.zeros(2), R2, c, 1.1 * reach))
    assert err.value.max_achievable == pytest.approx(reach)


def test_ball_qp_rejects_bad_input():
    with pytest.raises(ValueError):
        BallQpProblem(np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        BallQpProblem(np.eye(2), np.zeros(2), 0.0)


def test_polydisc_qp_matches_cvxpy(rng):
    n = 5
    A = random_complex(rng, n, n)
    D = A @ A.conj().T
    g = 6 * random_complex(rng, n)
    u = random_complex(rng, n)
    eps = -0.5
    phi, ok = solve_polydisc_qp(D, g, u, eps)
    x = cp.Variable(n, complex=True)
    obj = cp.real(cp.quad_form(x, D)) - cp.real(g.conj() @ x)
    cp.Problem(cp.Minimize(obj), [cp.abs(x) <= 1, cp.real(u.conj() @ x) <= eps]).solve()

    def f(z):
        return np.vdot(z, D @ z).real - np.vdot(g, z).real

    assert ok
    assert np.abs(phi).max() <= 1 + 1e-9
    assert np.vdot(u, phi).real <= eps + 1e-9
    assert f(phi) == pytest.approx(f(x.value), abs=1e-5)


def test_polydisc_qp_unreachable_cut():
    u = np.array([1.0, 1.0j])
    phi, ok = solve_polydisc_qp(np.eye(2), np.zeros(2), u, -3.0)
    assert not ok
    np.testing.assert_allclose(phi, -np.exp(1j * np.angle(u)))


@pytest.mark.parametrize("t1,eps", [(1.0, 0.5), (0.2, 1.0), (3.0, 0.1)])
def test_sdp_matches_grid_on_one_variable_toy(t1, eps):
    # no coupling and a large second diagonal leave Re f1 as the only useful move
    target = np.array([t1, 0.0, 0.0, 100.0, 0.0, 1.0], dtype=complex)
    p = SdpProblem(target, eps)
    J, f = solve_small_sdp(p)
    best = sdp_grid_f1(p, span=20.0 / eps)
    assert p.objective(f) == pytest.approx(best, rel=1e-3)
    assert np.trace(np.linalg.inv(J)) <= eps * (1 + 1e-6)
    assert np.linalg.eigvalsh(p.lmi(J, f)).min() >= -1e-6 * np.abs(f).max()


def test_sdp_returns_feasible_target_unchanged():
    target = np.array([10.0 + 1j, 1.0, 0.5 + 0.5j, 8.0, 0.2j, 3.0 - 2j])
    p = SdpProblem(target, eps=5.0)
    J, f = solve_small_sdp(p)
    np.testing.assert_array_equal(f, target)
    np.testing.assert_allclose(J, p.schur(target))


def test_sdp_with_coupling_is_feasible_and_keeps_imaginary_parts(rng):
    target = np.array([2.0 + 0.3j, 0.4, 1.0 + 0.5j, 1.5, -0.3 + 0.8j, 2.0 - 0.1j])
    p = SdpProblem(target, eps=0.5, c1=2.0, c2=1.5, alpha=0.6 + 0.8j)
    J, f = solve_small_sdp(p)
    for i in (0, 1, 3, 5):
        assert f[i].imag == target[i].imag
    assert np.trace(np.linalg.inv(J)) <= p.eps * (1 + 1e-6)
    assert np.linalg.eigvalsh(p.lmi(J, f)).min() >= -1e-7 * np.abs(f).max()
    # random feasible perturbations are never closer to the target
    for _ in range(200):
        g = f + 0.05 * random_complex(rng, 6)
        for i in (0, 1, 3, 5):
            g[i] = g[i].real + 1j * target[i].imag
        S = p.schur(g)
        if S is None:
            continue
        w = np.linalg.eigvalsh(S)
        if w[0] > 0 and np.sum(1 / w) <= p.eps:
            assert p.objective(g) >= p.objective(f) - 1e-8


def test_sdp_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        SdpProblem(np.ones(6), 0.0)


def test_rcg_phase_alignment(rng):
    g = random_complex(rng, 8)
    phi = rcg_unit_modulus(lambda p: -np.vdot(g, p).real, lambda p: -g, np.ones(8))
    np.testing.assert_allclose(phi, np.exp(1j * np.angle(g)), atol=1e-5)


def test_rcg_quadratic_beats_random_search(rng):
    n = 6
    A = random_complex(rng, n, n)
    D = A @ A.conj().T
    g = random_complex(rng, n)

    def fun(p):
        return np.vdot(p, D @ p).real - np.vdot(g, p).real

    phi = rcg_unit_modulus(fun, lambda p: 2 * D @ p - g, np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    np.testing.assert_allclose(np.abs(phi), 1.0, atol=1e-12)
    samples = np.exp(1j * rng.uniform(0, 2 * np.pi, (2000, n)))
    assert fun(phi) <= min(fun(s) for s in samples) + 1e-9


def test_rcg_constant_objective_returns_start(rng):
    phi0 = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    np.testing.assert_allclose(rcg_unit_modulus(lambda p: 1.0, lambda p: np.zeros(4), phi0), phi0, atol=1e-15)


def test_tangent_projection_is_orthogonal(rng):
    phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
    z = random_complex(rng, 5)
    t = tangent_project(phi, z)
    np.testing.assert_allclose(np.real(t * np.conj(phi)), 0.0, atol=1e-14)
    np.testing.assert_allclose(tangent_project(phi, t), t)
