"""Where the classical amplitude picture works and where it breaks.

In the weak-Kerr bistable window the deterministic amplitude equation
picks one branch per initial condition, while the quantum state relaxes
to a mixture of both.  Starting a coherent state near the high branch,
with the opposite phase, or in vacuum makes the difference visible; with
the detuning sign flipped (monostable) the two descriptions coincide.

Run:  python demos/classical_vs_quantum.py
"""

import os
import warnings

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrsim import liouville, metapotential
from kerrsim.hilbert import (DrivePhase, ModeParams, TruncationWarning,
                             coherent_state, projector)

os.makedirs("out", exist_ok=True)
p = ModeParams(2.5, 0.05, 1.0, 4.0, DrivePhase.PLUS_EPSILON)
dim = 70
times = np.linspace(0.0, 15.0, 120)
L = liouville.decaying_mode_liouvillian(p, dim)

fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharey=True)
for alpha0, label in [(np.sqrt(30), "coherent +sqrt(30)"),
                      (-np.sqrt(30), "coherent -sqrt(30)"),
                      (0.0, "vacuum")]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        rho0 = projector(coherent_state(alpha0, dim))
    res = liouville.evolve(rho0, L, times, method="dop853",
                           store_states=False)
    axes[0].plot(times, res.photon_numbers, label=label)
    classical = metapotential.classical_evolution(alpha0, p, times[1:])
    axes[1].plot(times[1:], np.abs(classical) ** 2, label=label)

fps = metapotential.classical_fixed_points(p)
for ax, title in zip(axes, ["master equation", "classical amplitude"]):
    for r in fps.roots:
        ax.axhline(r.photon_number, color="gray", lw=0.5, ls=":")
    ax.set_xlabel("time (1/kappa)")
    ax.set_title(title)
    ax.legend(fontsize=8)
axes[0].set_ylabel("photon number")
fig.tight_layout()
fig.savefig("out/classical_vs_quantum.png", dpi=150)
print("wrote out/classical_vs_quantum.png")
