"""Metapotential barrier, escape rate, and the semiclassical/quantum crossover.

The rotated one-dimensional potential between the low-amplitude well and
the saddle is a closed-form quartic.  Its barrier height sets the
activated escape rate with the mode linewidth playing the role of
temperature; the well curvature sets the attempt frequency, from which
a dimensionless crossover parameter decides where activated escape
stops being the whole story.

Run:  python demos/escape_and_crossover.py
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrsim import metapotential as mp
from kerrsim.hilbert import ModeParams

os.makedirs("out", exist_ok=True)
fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))

# one example potential in the bistable window
p = ModeParams(5.8, 0.2, 1.0, 6.0)
prof = mp.metapotential_profile(p)
x = np.linspace(-0.6 * prof.x0, 1.6 * prof.x0, 300)
axes[0].plot(x, prof.potential(x))
axes[0].plot([0, prof.x0], [0, prof.delta_u], "ko", ms=4)
axes[0].annotate("well", (0, 0), textcoords="offset points", xytext=(4, -12))
axes[0].annotate("saddle", (prof.x0, prof.delta_u),
                 textcoords="offset points", xytext=(-10, 6))
axes[0].set_xlabel("rotated coordinate x")
axes[0].set_ylabel("U(x) (kappa units)")
axes[0].set_title(f"barrier {prof.delta_u:.2f} kappa")

# escape rate vs drive at fixed detuning: higher drive lowers the barrier
drives = np.linspace(5.2, 7.6, 25)
rates = []
for eps in drives:
    prof_eps = mp.metapotential_profile(ModeParams(6.0, 0.2, 1.0, eps))
    rates.append(mp.semiclassical_escape_rate(prof_eps, 1.0))
axes[1].semilogy(drives, rates)
axes[1].set_xlabel("drive / kappa")
axes[1].set_ylabel("escape rate (kappa)")
axes[1].set_title("faster escape at stronger drive")

# crossover parameter across the bistable window (any Kerr, via gamma0)
deltas = np.linspace(0.9, 6.0, 40)
xis = []
for d in deltas:
    pp = ModeParams(d, 0.2, 1.0, 6.0)
    if mp.classical_fixed_points(pp).bistable:
        g0 = mp.metapotential_profile(pp).gamma0
    else:
        g0 = mp.single_well_attempt_frequency(pp)
    xis.append(mp.crossover_parameter(g0, 1.0).xi)
axes[2].plot(deltas, xis)
axes[2].axhline(1.0, color="gray", lw=0.8)
axes[2].axvline(np.sqrt(3) / 2, color="gray", ls=":", lw=0.8)
axes[2].set_xlabel("detuning / kappa")
axes[2].set_ylabel("crossover parameter")
axes[2].set_title("activated vs quantum escape")

fig.tight_layout()
fig.savefig("out/escape_and_crossover.png", dpi=150)
print("wrote out/escape_and_crossover.png")
