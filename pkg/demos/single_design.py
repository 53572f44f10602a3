"""Design one channel realization with every scheme and print what each achieves.

The scheme ordering holds for averages over many seeds; on a single draw two
close schemes can swap places.

    python3 demos/single_design.py
"""

import numpy as np

from risisac import SystemConfig, realize
from risisac.baselines import SCHEMES
from risisac.crb import crb_value
from risisac.metrics import max_radar_snr, sum_rate
from risisac.solvers import InfeasibleError

cfg = SystemConfig(M=4, K=2, N=8, seed=3, Gamma_t=10**2.0, eps_crb=4.0)
ch = realize(cfg)
print(f"M={cfg.M} K={cfg.K} N={cfg.N}  Gamma_t={10 * np.log10(cfg.Gamma_t):.0f} dB  eps={cfg.eps_crb}")

for mode in ("snr", "crb"):
    print(f"\n{mode} mode")
    for name, scheme in SCHEMES.items():
        try:
            dv, trace = scheme(cfg, ch, mode)
        except InfeasibleError as err:
            print(f"  {name:10s} infeasible: {err}")
            continue
        rate = sum_rate(dv.W, dv.phi, ch, cfg.sigma_k2)
        snr_db = 10 * np.log10(max_radar_snr(dv.W, dv.phi, ch, cfg.L, cfg.sigma_t2, cfg.sigma_r2))
        crb = crb_value(dv.W, dv.phi, ch, cfg.L, cfg.alpha_t, cfg.sigma_r2)
        power = np.linalg.norm(dv.W) ** 2
        print(
            f"  {name:10s} rate {rate:6.2f} bit/s/Hz  SNR {snr_db:5.1f} dB  CRB {crb:8.4f}"
            f"  power {power:.3f} W  iters {trace.iterations:2d}"
        )
