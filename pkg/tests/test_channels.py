import numpy as np
import pytest

from risisac.channels import (
    build_channel_set,
    derive_geometry,
    pathloss,
    realize,
    sample_rician,
    steering_derivative,
    steering_vector,
)
from risisac.config import SystemConfig


def test_steering_vector_examples():
    np.testing.assert_allclose(steering_vector(4, 0.0), np.ones(4))
    np.testing.assert_allclose(steering_vector(2, np.pi / 2), [1, -1], atol=1e-15)
    np.testing.assert_allclose(steering_vector(3, np.pi / 6), [1, -1j, -1], atol=1e-15)


def test_steering_vector_unit_modulus(rng):
    for theta in rng.uniform(-np.pi, np.pi, 100):
        a = steering_vector(9, theta)
        assert a[0] == 1
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-14)


def test_steering_derivative_matches_finite_difference():
    h = 1e-6
    fd = (steering_vector(4, 0.3 + h) - steering_vector(4, 0.3 - h)) / (2 * h)
    d = steering_derivative(4, 0.3)
    assert d[0] == 0
    np.testing.assert_allclose(d, fd, rtol=1e-6)
    np.testing.assert_allclose(steering_derivative(5, np.pi / 2), 0, atol=1e-14)


def test_theta1_default_geometry():
    geo = derive_geometry(SystemConfig())
    # atan((50 sin(pi/4) - 3 cos(pi/4)) / (50 cos(pi/4) + 3 sin(pi/4)))
    assert geo.theta_1 == pytest.approx(np.arctan(33.2340 / 37.4767), abs=1e-4)
    assert geo.theta_1 == pytest.approx(0.72547, abs=1e-5)


def test_theta1_zero_ris_target_distance():
    cfg = SystemConfig(d_RT=0.0, theta_BR=0.4)
    assert derive_geometry(cfg).theta_1 == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize(
    "d_BR, d_RT, theta_BR, theta_2",
    [(50, 50, 0.0, np.pi / 2), (50, 3, np.pi / 4, np.pi / 4), (20, 7, -0.3, 1.1), (10, 4, 0.9, -0.6)],
)
def test_theta1_matches_coordinate_placement(d_BR, d_RT, theta_BR, theta_2):
    cfg = SystemConfig(d_BR=d_BR, d_RT=d_RT, theta_BR=theta_BR, theta_2=theta_2)
    geo = derive_geometry(cfg)
    # place the RIS from the BS bearing, then step towards the target along the RIS array frame
    ris = d_BR * np.array([np.cos(theta_BR), np.sin(theta_BR)])
    target = ris + d_RT * np.array([np.sin(theta_2), -np.cos(theta_2)])
    measured = np.arctan(target[1] / target[0])
    assert geo.theta_1 == pytest.approx(measured, abs=1e-12)
    assert geo.d_BT == pytest.approx(np.hypot(*target), rel=1e-12)


def test_degenerate_geometry_raises():
    cfg = SystemConfig(d_BR=3.0, d_RT=3.0, theta_BR=np.pi / 2, theta_2=0.0)
    with pytest.raises(ValueError, match="degenerate"):
        derive_geometry(cfg)


def test_rician_pure_los_and_determinism():
    los = np.exp(1j * np.arange(6)).reshape(2, 3)
    out = sample_rician(2, 3, 0.5, np.inf, los, np.random.default_rng(0))
    np.testing.assert_array_equal(out, 0.5 * los)
    a = sample_rician(2, 3, 0.5, 2.0, los, np.random.default_rng(5))
    b = sample_rician(2, 3, 0.5, 2.0, los, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        sample_rician(3, 2, 0.5, 2.0, los, np.random.default_rng(0))


def test_rician_rayleigh_variance():
    rng = np.random.default_rng(3)
    los = np.ones((100, 100), dtype=complex)
    out = sample_rician(100, 100, 0.2, 0.0, los, rng)
    assert np.mean(np.abs(out) ** 2) == pytest.approx(0.04, rel=0.05)


def test_target_links_are_los():
    cfg = SystemConfig(M=5, N=7, seed=2)
    ch = realize(cfg)
    np.testing.assert_allclose(ch.h_dt / ch.alpha_dt, steering_vector(5, ch.theta_1), atol=1e-14)
    np.testing.assert_allclose(ch.h_rt / ch.alpha_rt, steering_vector(7, cfg.theta_2), atol=1e-14)
    for x in (ch.h_dk, ch.h_rk, ch.G):
        assert np.all(np.isfinite(x))


def test_pure_los_G_rank_one():
    ch = realize(SystemConfig(M=4, N=6, pure_los=True))
    assert np.linalg.matrix_rank(ch.G, tol=1e-10 * np.abs(ch.G).max()) == 1


def test_user_channel_power_matches_pathloss():
    cfg = SystemConfig(M=4, K=2, N=4)
    geo = derive_geometry(cfg)
    rng = np.random.default_rng(11)
    draws = [build_channel_set(cfg, geo, rng).h_dk for _ in range(10_000)]
    power = np.mean([np.sum(np.abs(h) ** 2, axis=1) for h in draws], axis=0)
    expected = cfg.M * pathloss(geo.d_BU, cfg.pathloss_exponents[4]) ** 2
    np.testing.assert_allclose(power, expected, rtol=0.05)


def test_seeded_realization_is_reproducible():
    cfg = SystemConfig(seed=42)
    a, b = realize(cfg), realize(cfg)
    for name in ("h_dk", "h_rk", "G", "h_dt", "h_rt"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
