import numpy as np
import pytest

from risisac.baselines import SCHEMES, baseline_separate, minimal_radar_beam, run_proposed
from risisac.channels import realize
from risisac.config import SystemConfig
from risisac.crb import crb_value
from risisac.initialization import channel_gain_reflection
from risisac.metrics import max_radar_snr, radar_snr_lower_bound, sum_rate
from risisac.solvers import InfeasibleError


@pytest.fixture(scope="module")
def case():
    cfg = SystemConfig(M=4, K=2, N=8, seed=2, Gamma_t=10**1.5, eps_crb=4.0)
    ch = realize(cfg)
    return cfg, ch, channel_gain_reflection(ch)


def test_minimal_snr_beam_hits_threshold(case):
    cfg, ch, phi = case
    Wr = minimal_radar_beam(ch, phi, cfg, "snr")
    W = np.hstack([np.zeros((ch.M, ch.K)), Wr])
    assert max_radar_snr(W, phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2) == pytest.approx(cfg.Gamma_t, rel=1e-9)
    assert not np.any(minimal_radar_beam(ch, phi, cfg.with_(Gamma_t=0.0), "snr"))


def test_minimal_crb_beam_hits_bound(case):
    cfg, ch, phi = case
    Wr = minimal_radar_beam(ch, phi, cfg, "crb")
    assert crb_value(Wr, phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2) == pytest.approx(cfg.eps_crb, rel=1e-6)
    assert np.linalg.norm(Wr) ** 2 < cfg.Pt


def test_minimal_beam_over_budget_is_infeasible(case):
    cfg, ch, phi = case
    with pytest.raises(InfeasibleError):
        minimal_radar_beam(ch, phi, cfg.with_(Gamma_t=1e9), "snr")


@pytest.mark.parametrize("mode", ["snr", "crb"])
def test_separate_design_meets_both_budgets(case, mode):
    cfg, ch, phi = case
    dv, trace = baseline_separate(cfg, ch, mode)
    assert np.linalg.norm(dv.W) ** 2 <= cfg.Pt * (1 + 1e-6)
    np.testing.assert_allclose(dv.phi, phi)
    if mode == "snr":
        snr = radar_snr_lower_bound(dv.W, dv.u, dv.phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2)
        assert snr >= cfg.Gamma_t * (1 - 1e-9)
    else:
        assert crb_value(dv.W, dv.phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2) <= cfg.eps_crb * (1 + 1e-6)
    assert trace.sum_rate[-1] == pytest.approx(sum_rate(dv.W, dv.phi, ch, cfg.sigma_k2))


def test_every_scheme_returns_a_design(case):
    cfg, ch, _ = case
    for name, scheme in SCHEMES.items():
        for mode in ("snr", "crb"):
            dv, trace = scheme(cfg, ch, mode)
            assert dv.W.shape == (ch.M, ch.K + ch.M), name
            assert trace.iterations >= 1, name


def test_unknown_mode_rejected(case):
    cfg, ch, _ = case
    with pytest.raises(ValueError):
        run_proposed(cfg, ch, "power")
