"""Lattice physics: constants, dipole potentials, recoil energy, and the
hold-time-to-collision-phase calibration.

All quantities are SI internally (meters, seconds, Joules, radians).
Lattice depths are usually quoted as dimensionless multiples of the recoil
energy ``Er = hbar^2 k^2 / 2m`` with ``k = 2 pi / wavelength``, which is the
natural energy unit of a standing-wave potential.

The collisional phase accumulated while two atoms share a site grows
linearly with the hold time, ``phi = U01 * t_hold / hbar``.  Rather than
computing the on-site interaction energy ``U01`` from scattering lengths and
Wannier functions, this module fits an affine map ``phi(t) = slope*t +
offset`` through measured fringe extrema (a calibration, not a
first-principles value).  The intercept is kept and surfaced: typical anchor
pairs are not consistent with a zero-intercept line, e.g. because of finite
transport ramps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, DomainError

# SI defining constant (exact) and derived/CODATA values, 9 significant digits.
PLANCK = 6.62607015e-34          # J s
HBAR = PLANCK / (2.0 * math.pi)  # J s, exact 2*pi relation by construction
RB87_MASS = 1.44316090e-25       # kg (86.9091805 u)


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the constants used by the formulas in this module."""

    hbar: float = HBAR
    h: float = PLANCK
    mass_rb87: float = RB87_MASS

    def __post_init__(self):
        if self.hbar <= 0 or self.h <= 0 or self.mass_rb87 <= 0:
            raise DomainError("physical constants must be strictly positive")
        if abs(self.h - 2.0 * math.pi * self.hbar) > 1e-9 * self.h:
            raise DomainError("h and hbar are inconsistent (h must equal 2*pi*hbar)")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class LatticeAxis:
    """One standing-wave axis: wavelength (m), depth (units of Er), waist (m).

    The waist is informational (beam geometry); it does not enter any formula
    here.
    """

    wavelength: float
    depth: float
    waist: float = float("nan")

    def __post_init__(self):
        if self.wavelength <= 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        if self.depth < 0:
            raise DomainError(f"depth must be non-negative, got {self.depth}")

    @property
    def site_spacing(self) -> float:
        """Distance between adjacent lattice sites, wavelength / 2."""
        return self.wavelength / 2.0

    def recoil_energy(self, mass: float = RB87_MASS) -> float:
        return recoil_energy(self.wavelength, mass)


def recoil_energy(wavelength: float, mass: float) -> float:
    """Photon recoil energy ``Er = hbar^2 k^2 / 2m`` with ``k = 2 pi / wavelength``.

    Parameters
    ----------
    wavelength : float
        Laser wavelength (m).
    mass : float
        Atomic mass (kg).

    Returns
    -------
    float
        Recoil energy (J).  Divide by ``PLANCK`` for the frequency in Hz.
    """
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    if mass <= 0:
        raise DomainError(f"mass must be positive, got {mass}")
    k = 2.0 * math.pi / wavelength
    return HBAR**2 * k**2 / (2.0 * mass)


def potential_pair(x, theta, depth, k_x):
    """Spin-dependent standing-wave potentials ``V± = V0 cos^2(k_x x ± theta/2)``.

    A lin-angle-lin standing wave decomposes into sigma+ and sigma- lattices
    whose relative displacement is set by the polarization angle ``theta``.
    One spin state rides V+, the other V-; sweeping ``theta`` transports them
    in opposite directions.

    Parameters are broadcast, so ``x`` and ``theta`` may be arrays.

    Returns
    -------
    (V_plus, V_minus)
        Potential values (same units as ``depth``).
    """
    depth = np.asarray(depth, dtype=float)
    if np.any(depth < 0):
        raise DomainError("depth must be non-negative")
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    v_plus = depth * np.cos(k_x * x + theta / 2.0) ** 2
    v_minus = depth * np.cos(k_x * x - theta / 2.0) ** 2
    if v_plus.ndim == 0:
        return float(v_plus), float(v_minus)
    return v_plus, v_minus


def well_separation(theta: float, wavelength: float) -> float:
    """Displacement between the V+ and V- wells, ``theta/pi * wavelength/2``.

    At ``theta = n*pi`` the two lattices coincide again; one unit of
    ``wavelength/2`` (one site) is gained per ``pi`` of polarization angle.
    """
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return theta / math.pi * wavelength / 2.0


def trap_frequency(depth_in_er: float, recoil: float) -> float:
    """Harmonic oscillation frequency at the bottom of a cos^2 well.

    Expanding ``V0 cos^2(k x)`` around a minimum gives
    ``omega = 2 * sqrt(V0/Er) * Er / hbar``.  The harmonic expansion
    overestimates measured band frequencies by up to ~15% at typical depths,
    which is accepted here; a full band-structure solve is out of scope.

    Parameters
    ----------
    depth_in_er : float
        Well depth as a multiple of the recoil energy.
    recoil : float
        Recoil energy (J).

    Returns
    -------
    float
        Angular trap frequency (rad/s).
    """
    if depth_in_er < 0:
        raise DomainError(f"depth must be non-negative, got {depth_in_er}")
    if recoil <= 0:
        raise DomainError(f"recoil energy must be positive, got {recoil}")
    return 2.0 * math.sqrt(depth_in_er) * recoil / HBAR


@dataclass(frozen=True)
class CalibrationModel:
    """Affine map from hold time to collisional phase, ``phi(t) = slope*t + offset``.

    ``slope`` is ``U01/hbar`` in rad/s.  A nonzero ``offset`` flags that the
    anchors were not consistent with a pure linear law; it is reported rather
    than hidden.  ``anchors`` records the (t_hold, phase) pairs the fit used.
    """

    slope: float
    offset: float = 0.0
    anchors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.slope > 0:
            raise CalibrationError(f"calibration slope must be positive, got {self.slope}")

    def phase(self, t_hold: float) -> float:
        return self.slope * t_hold + self.offset

    @property
    def interaction_frequency(self) -> float:
        """U01 / h in Hz."""
        return self.slope / (2.0 * math.pi)

    def hold_time_for(self, phase: float) -> float:
        """Inverse map; useful for placing scans at target phases."""
        return (phase - self.offset) / self.slope


def calibrate_affine(anchors, through_origin: bool = False) -> CalibrationModel:
    """Fit ``phi(t) = slope*t + offset`` through (t_hold, phase) anchors.

    With exactly two anchors the fit interpolates them exactly; with more it
    is an ordinary least-squares line.  ``through_origin=True`` forces
    ``offset = 0`` and then accepts a single anchor (convenience mode for a
    quick ``U01`` estimate from one fringe extremum).

    Raises
    ------
    CalibrationError
        Fewer anchors than the mode needs, duplicate hold times, or a fitted
        slope that is not positive.
    """
    pairs = [(float(t), float(p)) for t, p in anchors]
    times = np.array([t for t, _ in pairs])
    phases = np.array([p for _, p in pairs])

    if through_origin:
        if len(pairs) < 1:
            raise CalibrationError("need at least one anchor for a through-origin fit")
        if np.all(times == 0.0):
            raise CalibrationError("anchors must include a nonzero hold time")
        slope = float(np.dot(times, phases) / np.dot(times, times))
        return CalibrationModel(slope=slope, offset=0.0, anchors=tuple(pairs))

    if len(pairs) < 2:
        raise CalibrationError("need at least two anchors for an affine fit")
    if np.unique(times).size < 2:
        raise CalibrationError("anchors must span at least two distinct hold times")
    design = np.column_stack([times, np.ones_like(times)])
    (slope, offset), *_ = np.linalg.lstsq(design, phases, rcond=None)
    return CalibrationModel(slope=float(slope), offset=float(offset), anchors=tuple(pairs))


def phase_from_hold(t_hold: float, cal: CalibrationModel) -> float:
    """Collisional phase for a full hold of ``t_hold`` seconds."""
    if t_hold < 0:
        raise DomainError(f"hold time must be non-negative, got {t_hold}")
    return cal.phase(t_hold)


def standard_calibration() -> CalibrationModel:
    """Two-anchor calibration through the fringe extrema at 210 us (phase pi)
    and 450 us (phase 2 pi)."""
    return calibrate_affine([(210e-6, math.pi), (450e-6, 2.0 * math.pi)])
