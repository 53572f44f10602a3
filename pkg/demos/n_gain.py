"""How much does a larger RIS help each sensing requirement?

Sweeps the number of RIS elements for both constrained designs on the same
seeds and prints the mean sum rate. The CRB requirement is tight at small
N and relaxes quickly as the reflected path grows, so it gains more.

    python3 demos/n_gain.py
"""

from pathlib import Path

from risisac import SystemConfig
from risisac.experiment import ExperimentSpec, run_experiment

OUT = Path(__file__).parent / "output"
N_VALUES = [4, 8, 16]
base = SystemConfig(M=4, K=2, eps_crb=8.0)

means = {}
for mode in ("snr", "crb"):
    spec = ExperimentSpec(
        mode=mode, sweep="N", values=N_VALUES, trials=5, schemes=["proposed"], out=OUT / f"n_gain_{mode}.csv", base=base
    )
    results = run_experiment(spec)
    for n in N_VALUES:
        rates = [r.sum_rate for r in results if r.sweep_value == n and r.status != "infeasible"]
        means[mode, n] = sum(rates) / len(rates)

print("   N   snr-constrained   crb-constrained")
for n in N_VALUES:
    print(f"{n:4d}   {means['snr', n]:15.3f}   {means['crb', n]:15.3f}")
for mode in ("snr", "crb"):
    gain = means[mode, N_VALUES[-1]] / means[mode, N_VALUES[0]] - 1
    print(f"{mode}: {100 * gain:.1f}% from N={N_VALUES[0]} to N={N_VALUES[-1]}")
