"""Continuous heterodyne readout of a pumped Kerr mode through a probe mode.

One conditional trajectory of the two-mode stochastic master equation:
the pump populates the nonlinear mode, the cross-Kerr coupling shifts
the probe resonance, and the transmitted power record carries that shift
on top of the measurement's white-noise floor.  A tiny probe-detuning
sweep then locates the shifted resonance the way a spectroscopy
measurement would.

Run:  python demos/heterodyne_readout.py   (roughly two minutes)
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrsim import stochastic as st
from kerrsim.hilbert import ModeParams, TwoModeParams

os.makedirs("out", exist_ok=True)

kappa0 = 1.0 / 2.9                      # probe linewidth, pump-linewidth units
kerr0, kerr1 = 0.5 / 2.9, 5.7 / 2.9
cross = 4 * np.sqrt(kerr0 * kerr1)
pump = ModeParams(delta=6.0, kerr=kerr1, kappa=1.0,
                  drive=st.drive_from_db(12.0, 0.631))
probe = ModeParams(delta=2.0, kerr=kerr0, kappa=kappa0,
                   drive=st.PROBE_DRIVE_FRACTION * kappa0)
params = TwoModeParams(probe, pump, cross)

run = st.heterodyne_sme_run(params, dims=(6, 20), dt=2e-3, t_total=40.0,
                            seed=5, record_bin=400)
n1 = st.pump_photon_expectation(run.final_state, (6, 20))

fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
axes[0].plot(run.times, run.power_signal, lw=0.8)
axes[0].axhline(1.0 / (400 * run.dt), color="gray", lw=0.8,
                label="noise floor")
axes[0].set_xlabel("time (1/kappa_pump)")
axes[0].set_ylabel("transmitted power bin")
axes[0].set_title(f"one record; final pump photons {n1:.2f}")
axes[0].legend(fontsize=8)

detunings = np.linspace(0.5, 6.5, 7)
powers = []
for d0 in detunings:
    p = TwoModeParams(probe.with_delta(d0), pump, cross)
    avg = 0.0
    for k in range(8):
        r = st.heterodyne_sme_run(p, (6, 20), 2e-3, 40.0, seed=11,
                                  stream_index=k, record_bin=400,
                                  keep_record=False)
        avg += np.mean(r.power_signal) / 8
    powers.append(avg)
axes[1].plot(detunings, powers, "o-")
axes[1].set_xlabel("probe detuning (kappa_pump)")
axes[1].set_ylabel("averaged power")
axes[1].set_title("probe resonance shifted by the pump")
fig.tight_layout()
fig.savefig("out/heterodyne_readout.png", dpi=150)
print("wrote out/heterodyne_readout.png")
print("probe sweep powers:", np.round(powers, 3))
