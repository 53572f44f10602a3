import numpy as np
import pytest

from risisac.config import SystemConfig, load_config, parse_config


def test_parse_plain_and_db_keys():
    cfg = parse_config(
        """
        # desk scenario
        M = 4
        K = 2
        N = 8   # RIS size
        Pt_dBm = 30
        kappa_dB = 3
        Gamma_t_dB = 10
        theta_BR = pi/4
        pathloss_exponents = 2.2, 2.2, 2.3, 2.4, 3.5
        """
    )
    assert (cfg.M, cfg.K, cfg.N) == (4, 2, 8)
    assert cfg.Pt == pytest.approx(1.0)
    assert cfg.kappa == pytest.approx(10 ** 0.3)
    assert cfg.Gamma_t == pytest.approx(10.0)
    assert cfg.theta_BR == pytest.approx(np.pi / 4)
    assert cfg.sigma_k2.shape == (2,)


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("bogus = 1")


def test_invalid_values_rejected():
    with pytest.raises(ValueError):
        SystemConfig(M=0)
    with pytest.raises(ValueError):
        SystemConfig(Pt=-1.0)
    with pytest.raises(ValueError):
        SystemConfig(sigma_k2=0.0)


def test_load_config_with_overrides(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("M = 4\nK = 3\n")
    cfg = load_config(path, N=5)
    assert (cfg.M, cfg.K, cfg.N) == (4, 3, 5)


def test_with_resizes_noise():
    cfg = SystemConfig(K=2).with_(K=5)
    assert cfg.sigma_k2.shape == (5,)
