"""Driven-dissipative Kerr oscillator toolkit.

Submodules:

``hilbert``
    Truncated Fock-space operators, Hamiltonians and states.
``liouville``
    Lindblad master equation: superoperator assembly, steady states,
    time evolution, observables and relaxation-time fits.
``spectral``
    Liouvillian eigenanalysis and the quantum switching-rate formula.
``stochastic``
    Semi-classical Langevin trajectories and the two-mode heterodyne
    stochastic master equation, with lineshape extraction.
``metapotential``
    Classical fixed points, bistability analysis, metapotential and
    Kramers escape rates, and the semiclassical/quantum crossover
    parameter.
``circuit``
    Normal modes and Kerr couplings of a Josephson-junction array from
    circuit parameters.
``experiments`` / ``cli``
    Named experiment runners and the ``kerrsim`` command-line driver.

All dynamical modules work in dimensionless units where the reference
decay rate is 1; the ``circuit`` module alone uses SI units.
"""

__version__ = "0.1.0"

from . import hilbert, liouville, spectral, stochastic, metapotential, circuit

__all__ = [
    "hilbert",
    "liouville",
    "spectral",
    "stochastic",
    "metapotential",
    "circuit",
    "__version__",
]
