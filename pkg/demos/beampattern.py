"""Where does the optimized transmitter put its power?

Runs the SNR-constrained design with a demanding radar threshold and lists
the strongest directions of the trial-averaged beampattern next to the
target and RIS directions.

    python3 demos/beampattern.py
"""

from pathlib import Path

import numpy as np

from risisac import SystemConfig
from risisac.channels import derive_geometry
from risisac.config import db_to_linear
from risisac.experiment import ExperimentSpec, beampattern_grid, run_experiment
from risisac.metrics import transmit_beampattern

cfg = SystemConfig(Gamma_t=float(db_to_linear(25.0)))
geo = derive_geometry(cfg)
spec = ExperimentSpec(
    mode="snr", sweep="beampattern", values=[], trials=5, schemes=["proposed"], out=Path(__file__).parent / "output" / "beampattern.csv", base=cfg
)
results = run_experiment(spec)

grid = beampattern_grid()
gain = np.mean([transmit_beampattern(r.W, grid) for r in results], axis=0)
db = 10 * np.log10(gain / np.median(gain))

print(f"target at {np.degrees(geo.theta_1):.1f} deg, RIS at {np.degrees(cfg.theta_BR):.1f} deg")
print("users at " + ", ".join(f"{np.degrees(t):.1f}" for t in geo.theta_BU) + " deg")
peaks = [i for i in range(1, grid.size - 1) if db[i] >= db[i - 1] and db[i] >= db[i + 1]]
for i in sorted(peaks, key=lambda i: -db[i])[:5]:
    print(f"  peak {np.degrees(grid[i]):6.1f} deg  {db[i]:5.1f} dB above median")
print(f"written to {spec.out}")
