import numpy as np
import pytest

from risisac.channels import ChannelSet, realize, steering_vector
from risisac.config import SystemConfig


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_phases(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def random_channels(rng, M, N, K, scale=1.0):
    """Unit-scale Gaussian links, convenient for identity checks."""
    t1, t2 = rng.uniform(-1.2, 1.2, 2)
    return ChannelSet(
        h_dk=scale * random_complex(rng, K, M),
        h_rk=random_complex(rng, K, N),
        G=random_complex(rng, N, M),
        h_dt=0.8 * steering_vector(M, t1),
        h_rt=0.6 * steering_vector(N, t2),
        theta_1=t1,
        theta_2=t2,
        alpha_dt=0.8,
        alpha_rt=0.6,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg():
    return SystemConfig(M=3, K=2, N=4, seed=7)


@pytest.fixture
def small_ch(small_cfg):
    return realize(small_cfg)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
