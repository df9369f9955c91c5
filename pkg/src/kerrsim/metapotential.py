"""Semi-classical analytics of the driven Kerr mode.

Classical fixed points of the noiseless amplitude equation and their
stability, the bistable parameter region, the one-dimensional
metapotential along the line joining the low-amplitude well and the
saddle, the Kramers escape rate over its barrier, and the dimensionless
crossover parameter separating the semiclassical from the quantum
regime.

The amplitude equation in the frame rotating with the drive is

    d(alpha)/dt = -i*delta*alpha + 2i*kerr*|alpha|^2*alpha
                  - (kappa/2)*alpha + drive_term,

with the drive term fixed by the mode's phase convention.  The photon
number n = |alpha|^2 of a stationary point satisfies the real cubic

    |eps|^2 = delta^2 n - 4 delta K n^2 + 4 K^2 n^3 + (kappa^2/4) n.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import DrivePhase, ModeParams

#: |alpha|^2 beyond which classical integration aborts.
DIVERGENCE_GUARD = 1e4

#: Residual tolerance for reported fixed points.
ROOT_RESIDUAL_TOL = 1e-12


class Stability(enum.Enum):
    STABLE_LOW = "stable_low"
    STABLE_HIGH = "stable_high"
    UNSTABLE = "unstable"


class NoBarrierError(ValueError):
    """Metapotential requested outside the bistable regime."""


class UnstableMinimumError(RuntimeError):
    """The putative well has non-positive curvature."""


class DegenerateGeometryError(ValueError):
    """Two fixed points coincide; no rotation direction exists."""


class DivergenceError(RuntimeError):
    """Amplitude exceeded the divergence guard during integration."""


@dataclass(frozen=True)
class FixedPoint:
    alpha: complex
    photon_number: float
    stability: Stability


@dataclass(frozen=True)
class ClassicalFixedPoints:
    """1 or 3 stationary amplitudes of the noiseless flow."""

    roots: tuple

    @property
    def bistable(self) -> bool:
        return len(self.roots) == 3

    def _get(self, kind):
        for r in self.roots:
            if r.stability is kind:
                return r
        raise NoBarrierError(f"no {kind.value} fixed point (monostable regime)")

    @property
    def stable_low(self) -> FixedPoint:
        if not self.bistable:
            return self.roots[0]
        return self._get(Stability.STABLE_LOW)

    @property
    def stable_high(self) -> FixedPoint:
        if not self.bistable:
            return self.roots[0]
        return self._get(Stability.STABLE_HIGH)

    @property
    def unstable(self) -> FixedPoint:
        return self._get(Stability.UNSTABLE)


@dataclass(frozen=True)
class MetapotentialProfile:
    """Quartic potential U(x) = c1 x + c2 x^2 + c3 x^3 + c4 x^4, U(0) = 0.

    x runs along the rotated line from the low-amplitude well (x = 0) to
    the saddle at ``x0``; ``delta_u`` is the barrier height U(x0),
    ``gamma0`` the attempt frequency from the well curvature, ``phi``
    the rotation angle that maps the well-to-saddle segment onto the
    real axis.
    """

    coeffs: tuple
    x0: float
    delta_u: float
    gamma0: float
    phi: float
    alpha_low: complex
    alpha_unstable: complex

    def potential(self, x):
        c1, c2, c3, c4 = self.coeffs
        x = np.asarray(x, dtype=float)
        return ((c4 * x + c3) * x + c2) * x * x + c1 * x

    def curvature_at_origin(self) -> float:
        return 2 * self.coeffs[1]


@dataclass(frozen=True)
class CrossoverResult:
    """Ratio of tunneling crossover temperature to fluctuation temperature."""

    xi: float
    gamma0: float
    regime: str  # "semiclassical" (xi < 1) or "quantum" (xi > 1)


def photon_cubic_coeffs(delta, kerr, kappa, eps_sq):
    """Coefficients (descending) of the stationarity cubic in n."""
    return np.array([4 * kerr**2, -4 * delta * kerr,
                     delta**2 + kappa**2 / 4, -eps_sq])


def drive_power_for(delta, kerr, kappa, n):
    """|eps|^2 that makes photon number ``n`` stationary."""
    n = np.asarray(n, dtype=float)
    return delta**2 * n - 4 * delta * kerr * n**2 + 4 * kerr**2 * n**3 \
        + kappa**2 / 4 * n


def classical_fixed_points(p: ModeParams) -> ClassicalFixedPoints:
    """Stationary amplitudes of the noiseless flow, with stability flags.

    Solves the photon-number cubic, recovers the complex amplitude of
    each admissible root from the linear stationarity relation, polishes
    it to full precision, and classifies stability from the eigenvalues
    of the linearized flow.
    """
    eps_sq = abs(p.drive) ** 2
    if p.kerr == 0:
        ns = [eps_sq / (p.delta**2 + p.kappa**2 / 4)]
    else:
        raw = np.roots(photon_cubic_coeffs(p.delta, p.kerr, p.kappa, eps_sq))
        scale = max(abs(raw).max(), 1.0)
        ns = sorted(r.real for r in raw
                    if abs(r.imag) < 1e-9 * scale and r.real >= -1e-12)
        ns = [_polish_root(p, max(n, 0.0), eps_sq) for n in ns]
    roots = []
    for n in ns:
        alpha = _alpha_from_n(p, n)
        roots.append((alpha, abs(alpha) ** 2))
    flags = _classify(p, roots)
    fps = tuple(FixedPoint(a, n, f) for (a, n), f in zip(roots, flags))
    return ClassicalFixedPoints(fps)


def _alpha_from_n(p, n):
    if p.drive == 0:
        return 0.0 + 0.0j
    denom = 1j * p.delta - 2j * p.kerr * n + p.kappa / 2
    return p.amplitude_drive / denom


def _polish_root(p, n, eps_sq):
    # Newton on the cubic; np.roots alone is not reliably at 1e-12
    c = photon_cubic_coeffs(p.delta, p.kerr, p.kappa, eps_sq)
    dc = np.polyder(c)
    for _ in range(60):
        f = np.polyval(c, n)
        df = np.polyval(dc, n)
        if df == 0:
            break
        step = f / df
        n -= step
        if abs(step) < 1e-16 * max(abs(n), 1.0):
            break
    return n


def flow_rhs(alpha, p: ModeParams):
    """Right-hand side of the noiseless amplitude equation."""
    return ((-1j * p.delta - p.kappa / 2) * alpha
            + 2j * p.kerr * abs(alpha) ** 2 * alpha
            + p.amplitude_drive)


def _jacobian_eigs(p, alpha):
    # linearization of the flow in (alpha, conj(alpha))
    a_diag = -1j * p.delta - p.kappa / 2 + 4j * p.kerr * abs(alpha) ** 2
    b_off = 2j * p.kerr * alpha**2
    disc = abs(b_off) ** 2 - a_diag.imag**2
    root = np.sqrt(complex(disc))
    return a_diag.real + root, a_diag.real - root


def _classify(p, roots):
    stable_idx = []
    flags = [None] * len(roots)
    for i, (alpha, n) in enumerate(roots):
        eigs = _jacobian_eigs(p, alpha)
        if all(e.real < 0 for e in eigs):
            stable_idx.append(i)
        else:
            flags[i] = Stability.UNSTABLE
    order = sorted(stable_idx, key=lambda i: roots[i][1])
    if order:
        flags[order[0]] = Stability.STABLE_LOW
        for i in order[1:]:
            flags[i] = Stability.STABLE_HIGH
    return flags


def critical_photon_numbers(delta, kerr, kappa):
    """Photon numbers bounding the bistable branch, or None.

    The stationary points of the drive-power cubic sit at
    n = (delta / 3 kerr) * [1 -+ sqrt(1 - (3/4)(1 + kappa^2/(4 delta^2)))].
    Both must be real and positive for a bistable branch to exist, which
    requires delta/kappa >= sqrt(3)/2 (for positive Kerr).

    Returns
    -------
    (n_minus, n_plus) or None
    """
    if kerr <= 0:
        raise ValueError("kerr must be positive")
    if delta == 0:
        return None
    radicand = 1.0 - 0.75 * (1.0 + kappa**2 / (4 * delta**2))
    if radicand < 0:
        return None
    root = np.sqrt(radicand)
    n_minus = delta / (3 * kerr) * (1 - root)
    n_plus = delta / (3 * kerr) * (1 + root)
    if n_minus <= 0 or n_plus <= 0:
        return None
    return float(n_minus), float(n_plus)


def bistable_drive_window(delta, kerr, kappa):
    """Drive-power interval (|eps|^2) with three stationary photon numbers.

    Returns (eps_sq_low, eps_sq_high) or None when no bistable branch
    exists at this detuning.
    """
    crit = critical_photon_numbers(delta, kerr, kappa)
    if crit is None:
        return None
    n_minus, n_plus = crit
    hi = drive_power_for(delta, kerr, kappa, n_minus)
    lo = drive_power_for(delta, kerr, kappa, n_plus)
    return float(lo), float(hi)


def rotation_angle(alpha0: complex, alpha_u: complex) -> float:
    """Angle phi with e^{i phi} (alpha_u - alpha0) real and positive."""
    w = complex(alpha_u) - complex(alpha0)
    if abs(w) < 1e-14:
        raise DegenerateGeometryError("fixed points coincide")
    return float(np.arctan2(-w.imag, w.real))


def force_coefficients(p: ModeParams, alpha0: complex, phi: float):
    """Cubic polynomial coefficients (A, B, C, D) of the on-axis force.

    The force F(x) = A + B x + C x^2 + D x^3 is the flow velocity along
    the rotated coordinate x through the low-amplitude well; A vanishes
    when the well is a fixed point of the flow.
    """
    u = np.exp(1j * phi) * alpha0
    a = ((-1j * p.delta - p.kappa / 2) * u
         + np.exp(1j * phi) * p.amplitude_drive
         + 2j * p.kerr * abs(u) ** 2 * u)
    b = (-1j * p.delta - p.kappa / 2) + 2j * p.kerr * (u**2 + 2 * abs(u) ** 2)
    c = 2j * p.kerr * (2 * u + np.conj(u))
    d = 2j * p.kerr
    return a, b, c, d


def metapotential_profile(p: ModeParams) -> MetapotentialProfile:
    """Quartic metapotential between the low well and the saddle.

    The fixed points are recomputed under the convention in which the
    drive enters the amplitude equation as ``-i*drive`` so that the
    on-axis force vanishes exactly at both ends.  Requires the bistable
    regime.

    Raises
    ------
    NoBarrierError
        Fewer than three fixed points, or no positive barrier.
    UnstableMinimumError
        Non-positive curvature at the well.
    """
    p = p.with_convention(DrivePhase.MINUS_I_EPSILON)
    fps = classical_fixed_points(p)
    if not fps.bistable:
        raise NoBarrierError("metapotential requires three fixed points")
    alpha0 = fps.stable_low.alpha
    alpha_u = fps.unstable.alpha
    phi = rotation_angle(alpha0, alpha_u)
    x0 = (np.exp(1j * phi) * (alpha_u - alpha0)).real
    a, b, c, d = force_coefficients(p, alpha0, phi)
    scale = max(abs(p.drive), abs(p.delta), p.kappa, 1.0)
    force_at_x0 = a + b * x0 + c * x0**2 + d * x0**3
    if abs(a) > 1e-10 * scale or abs(force_at_x0) > 1e-9 * scale:
        raise RuntimeError(
            f"force does not vanish at the fixed points: "
            f"|F(0)|={abs(a):.2e}, |F(x0)|={abs(force_at_x0):.2e}")
    c1 = -a.imag
    c2 = -b.imag / 2
    c3 = -c.imag / 3
    c4 = -d.imag / 4
    curvature = 2 * c2
    if curvature <= 0:
        raise UnstableMinimumError(f"well curvature {curvature:.3e} <= 0")
    delta_u = ((c4 * x0 + c3) * x0 + c2) * x0 * x0 + c1 * x0
    if delta_u <= 0:
        raise NoBarrierError(f"barrier height {delta_u:.3e} <= 0")
    gamma0 = float(np.sqrt(p.kappa * curvature))
    return MetapotentialProfile((c1, c2, c3, c4), float(x0), float(delta_u),
                                gamma0, phi, alpha0, alpha_u)


def semiclassical_escape_rate(profile: MetapotentialProfile, kappa: float) -> float:
    """Kramers rate gamma0 * exp(-delta_u / kappa).

    The effective temperature of the activated escape is the mode
    linewidth, which sets the strength of the amplitude noise.
    """
    return profile.gamma0 * float(np.exp(-profile.delta_u / kappa))


def single_well_attempt_frequency(p: ModeParams) -> float:
    """Attempt-frequency extrapolation below the bistability threshold.

    Uses the oscillation frequency of the linearized flow around the
    single stable amplitude, which matches the well-curvature definition
    in the weak-Kerr limit.  Only meaningful as an extrapolation where
    no barrier exists.
    """
    fps = classical_fixed_points(p)
    if fps.bistable:
        raise ValueError("system is bistable; use the metapotential instead")
    alpha = fps.roots[0].alpha
    eigs = _jacobian_eigs(p, alpha)
    omega = abs(eigs[0].imag)
    if omega <= 0:
        raise UnstableMinimumError("overdamped well: no oscillation frequency")
    return float(np.sqrt(p.kappa * omega))


def crossover_parameter(gamma0: float, kappa: float) -> CrossoverResult:
    """Dimensionless crossover ratio of the two escape temperatures.

    xi = (gamma0 / (2 pi kappa)) * (sqrt(kappa^2/(4 gamma0^2) + 1)
         - kappa / (2 gamma0))

    xi < 1: activated (semiclassical) escape; xi > 1: quantum regime.
    """
    if gamma0 <= 0 or kappa <= 0:
        raise ValueError("gamma0 and kappa must be positive")
    r = kappa / (2 * gamma0)
    xi = gamma0 / (2 * np.pi * kappa) * (np.sqrt(r * r + 1.0) - r)
    regime = "semiclassical" if xi < 1 else "quantum"
    return CrossoverResult(float(xi), float(gamma0), regime)


def classical_evolution(alpha0: complex, p: ModeParams, times) -> np.ndarray:
    """Integrate the noiseless amplitude equation from ``alpha0``.

    Returns the complex amplitude at each requested time.  In the
    bistable regime the long-time limit depends on the initial
    condition.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")

    def rhs(t, y):
        val = flow_rhs(y[0] + 1j * y[1], p)
        return [val.real, val.imag]

    def blowup(t, y):
        return y[0] ** 2 + y[1] ** 2 - DIVERGENCE_GUARD

    blowup.terminal = True
    a0 = complex(alpha0)
    sol = solve_ivp(rhs, (min(0.0, times[0]), times[-1]), [a0.real, a0.imag],
                    t_eval=times, rtol=1e-10, atol=1e-12, method="DOP853",
                    events=blowup)
    if sol.status == 1:
        raise DivergenceError(f"|alpha|^2 exceeded {DIVERGENCE_GUARD:.0e} "
                              f"at t={sol.t_events[0][0]:.3f}")
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol.y[0] + 1j * sol.y[1]
