"""
Estimating the channels when the IRS does not apply the designed phases.

20% of the elements are blocked and the rest are multiplied by a random
complex factor. BALS assumes the designed matrix and breaks down; TALS
re-estimates the IRS matrix alongside both channels. TALS is slower, so
this demo uses few runs and the smaller surface.
"""

from irs_parafac.analysis import db
from irs_parafac.estimators import BalsOptions
from irs_parafac.harness import ExperimentSpec, run_experiment
from irs_parafac.system_model import PerturbationConfig, SystemConfig

RUNS = 8
base = SystemConfig(M=50, L=4, N=16, K=100, T=50, perturbation=PerturbationConfig(0.2, 0.01))
grid = (10.0, 20.0, 30.0)
spec = ExperimentSpec(base, grid, ("bals", "tals"), RUNS, timing=True,
                      bals_options=BalsOptions(max_iter=100))
impaired = run_experiment(spec)
ideal = run_experiment(spec.replace(base=base.replace(perturbation=None), estimators=("bals",)))

print(" SNR | BALS ideal IRS | BALS impaired | TALS impaired | TALS conv | TALS ms")
for snr in grid:
    ref = ideal.cell("bals", "base", snr)
    b, t = impaired.cell("bals", "base", snr), impaired.cell("tals", "base", snr)
    print(f"{snr:4.0f} | {db(ref.nmse_theta):14.2f} | {db(b.nmse_theta):13.2f} | "
          f"{db(t.nmse_theta):13.2f} | {t.conv_rate:9.2f} | {t.time_ms:7.0f}")
