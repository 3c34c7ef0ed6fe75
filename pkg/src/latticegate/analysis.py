"""Observables: Ramsey fringes, sinusoid fits, visibility scans, and
far-field interference patterns of the delocalized protocol variant.

Fringes are fitted with ``p(alpha) = C + A cos(alpha - alpha0)``, ``A >= 0``;
the visibility is ``A / C``.  The fit is seeded from the fundamental Fourier
coefficient of the samples and refined with bounded Levenberg-Marquardt
iterations.

The delocalized variant is read out as a double-slit pattern: each atom ends
split over the two sites adjacent to its home, the fixed readout pulse mixes
the spin channels, and the far-field intensity of the detected spin carries
a fringe at wavevector ``mass * separation / (hbar * tof)``.  Atoms add
incoherently; their common fringe wavevector makes the summed pattern a
single sinusoid under a Gaussian envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FitError
from .noise import IDEAL, NoiseModel, Realization, draw_realization, member_rngs, scale_rotations
from .physics import HBAR, RB87_MASS, CalibrationModel
from .sequence import ROTATE, PulseSequence, build_delocalize_sequence, build_return_sequence
from . import statevec

DEFAULT_ALPHA_GRID = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
FIT_MAX_EVALS = 200


@dataclass(frozen=True)
class FringeData:
    alpha: np.ndarray
    p_one: np.ndarray
    n_atoms: int
    t_hold: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FitResult:
    visibility: float
    fringe_phase: float
    offset: float
    residual_rms: float


@dataclass(frozen=True)
class ScanPoint:
    t_hold: float
    phase: float
    fit: FitResult

    @property
    def visibility(self) -> float:
        return self.fit.visibility


def effective_phase(t_hold: float, cal: CalibrationModel) -> float:
    """Collisional phase the engine accumulates for a full hold of t_hold.

    Equals the calibration map for t > 0; a zero hold collides nothing, so
    the calibration intercept does not apply there.
    """
    return cal.phase(t_hold) if t_hold > 0 else 0.0


def _check_alpha_grid(alpha_grid: np.ndarray) -> np.ndarray:
    alpha = np.asarray(alpha_grid, dtype=float)
    if alpha.size < 8:
        raise DomainError(f"alpha grid needs at least 8 points, got {alpha.size}")
    span = alpha.max() - alpha.min()
    step = span / (alpha.size - 1)
    if span + step < 2.0 * math.pi - 1e-9:
        raise DomainError("alpha grid must cover a full fringe period")
    return alpha


def _fit_samples(x: np.ndarray, y: np.ndarray) -> FitResult:
    if x.size < 4:
        raise FitError(f"need at least 4 samples to fit, got {x.size}")
    design = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    (c0, a0, b0), *_ = np.linalg.lstsq(design, y, rcond=None)
    amp0 = math.hypot(a0, b0)
    ph0 = math.atan2(b0, a0) if amp0 > 0 else 0.0

    def residual(params):
        c, a, ph = params
        return c + a * np.cos(x - ph) - y

    result = least_squares(residual, x0=[c0, amp0, ph0], method="lm",
                           max_nfev=FIT_MAX_EVALS)
    if result.status <= 0:
        raise FitError(f"sinusoid fit did not converge: {result.message}")
    offset, amp, phase = result.x
    if amp < 0:
        amp, phase = -amp, phase + math.pi
    phase = math.atan2(math.sin(phase), math.cos(phase))
    if offset <= 1e-6:
        raise FitError(f"degenerate fringe: fitted offset {offset!r}")
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return FitResult(visibility=float(amp / offset), fringe_phase=float(phase),
                     offset=float(offset), residual_rms=rms)


def fit_sinusoid(fringe: FringeData) -> FitResult:
    """Fit amplitude, phase and offset to a sampled Ramsey fringe."""
    return _fit_samples(np.asarray(fringe.alpha, float), np.asarray(fringe.p_one, float))


# --- Ramsey scans ---------------------------------------------------------------


def _count_rotations(seq: PulseSequence) -> int:
    return sum(1 for ins in seq.instructions if ins.kind == ROTATE)


def _member_register_seq(seq: PulseSequence, real: Realization) -> PulseSequence:
    member = seq.with_fill_mask(real.kept_mask)
    return scale_rotations(member, real.pulse_factors)


def _member_fringe(seq: PulseSequence, cal, real: Realization, alpha: np.ndarray) -> np.ndarray:
    """One member's p_one(alpha); lost atoms contribute a flat 1/2."""
    n_lost = real.n_lost
    n_kept = sum(real.kept_mask)
    denom = n_kept + n_lost
    if denom == 0:
        return np.full(alpha.shape, 0.5)
    if n_kept == 0:
        return np.full(alpha.shape, 0.5)
    member = _member_register_seq(seq, real)
    prefix = statevec.run(member, cal, stop_before_readout=True)
    readout_area = member.instructions[-1].area  # already jitter/error scaled
    out = np.empty(alpha.shape)
    for i, a in enumerate(alpha):
        st = statevec.apply_readout(prefix, [(readout_area, float(a))],
                                    z_phases=real.z_phases)
        out[i] = (statevec.probability_one_per_atom(st).sum() + 0.5 * n_lost) / denom
    return out


def ramsey_scan(n_atoms: int, t_hold: float, cal: CalibrationModel,
                noise: NoiseModel | None, alpha_grid, *,
                boundary: str = "open") -> FringeData:
    """Ensemble-averaged fringe of the returning protocol at one hold time."""
    alpha = _check_alpha_grid(alpha_grid)
    model = noise or IDEAL
    seq = build_return_sequence(t_hold, 0.0, n_atoms, boundary=boundary)
    n_rot = _count_rotations(seq)
    total = np.zeros(alpha.shape)
    for rng in member_rngs(model):
        real = draw_realization(model, n_atoms, t_hold, n_rot, rng)
        total += _member_fringe(seq, cal, real, alpha)
    p = total / model.ensemble_size
    return FringeData(alpha=alpha, p_one=p, n_atoms=n_atoms, t_hold=t_hold,
                      meta={"noise": model.to_dict(), "boundary": boundary})


def visibility_curve(n_atoms: int, t_grid, cal: CalibrationModel,
                     noise: NoiseModel | None, *, alpha_grid=None,
                     boundary: str = "open") -> list:
    """Fitted fringe visibility at each hold time (the returning variant)."""
    alpha = _check_alpha_grid(DEFAULT_ALPHA_GRID if alpha_grid is None else alpha_grid)
    points = []
    for t in t_grid:
        fringe = ramsey_scan(n_atoms, float(t), cal, noise, alpha, boundary=boundary)
        points.append(ScanPoint(float(t), effective_phase(float(t), cal),
                                fit_sinusoid(fringe)))
    return points


# --- interference patterns -------------------------------------------------------


@dataclass(frozen=True)
class InterferogramModel:
    """Far-field double-slit model of one delocalized run (atoms summed).

    ``coherence`` is the summed detected-spin off-diagonal element between
    the two slits; populations are the summed on-diagonal weights.  The
    fringe sits at wavevector ``mass*slit_separation/(hbar*expansion_time)``
    under a Gaussian envelope from the on-site wavefunction width.
    """

    slit_separation: float
    envelope_width: float
    expansion_time: float
    mass: float
    population_left: float
    population_right: float
    coherence: complex
    n_atoms: int

    @property
    def fringe_wavevector(self) -> float:
        return self.mass * self.slit_separation / (HBAR * self.expansion_time)

    @property
    def envelope_sigma(self) -> float:
        return HBAR * self.expansion_time / (self.mass * self.envelope_width)

    @property
    def visibility(self) -> float:
        total = self.population_left + self.population_right
        return 0.0 if total <= 0 else 2.0 * abs(self.coherence) / total

    def envelope(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-(x**2) / (2.0 * self.envelope_sigma**2))

    def intensity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        carrier = (self.population_left + self.population_right
                   + 2.0 * np.abs(self.coherence)
                   * np.cos(self.fringe_wavevector * x + np.angle(self.coherence)))
        return self.envelope(x) * carrier

    def default_x_grid(self, periods: float = 3.0, points: int = 192) -> np.ndarray:
        period = 2.0 * math.pi / self.fringe_wavevector
        half = periods * period / 2.0
        return np.linspace(-half, half, points)


def compute_interferogram(n_atoms: int, t_hold: float, cal: CalibrationModel,
                          noise: NoiseModel | None, tof: float, *,
                          wavelength: float = 785e-9,
                          envelope_width: float | None = None,
                          mass: float = RB87_MASS,
                          boundary: str = "open") -> InterferogramModel:
    """Run the delocalizing protocol and reduce it to the slit model.

    Every atom ends with its detected-spin amplitude split between the two
    sites one lattice period (``wavelength``) apart, so all atoms share one
    fringe wavevector.  Lost atoms add a structureless background.
    """
    if tof <= 0:
        raise DomainError(f"expansion time must be positive, got {tof}")
    model = noise or IDEAL
    seq = build_delocalize_sequence(t_hold, n_atoms, boundary=boundary)
    n_rot = _count_rotations(seq)
    pop_l = pop_r = 0.0
    coh = 0.0 + 0.0j
    for rng in member_rngs(model):
        real = draw_realization(model, n_atoms, t_hold, n_rot, rng)
        n_kept = sum(real.kept_mask)
        if n_kept > 0:
            member = _member_register_seq(seq, real)
            prefix = statevec.run(member, cal, stop_before_readout=True)
            pre = statevec.apply_readout(prefix, [], z_phases=real.z_phases)
            gate = statevec.rotation_matrix(statevec.READOUT_AREA * real.readout_factor, 0.0)
            for a in range(n_kept):
                rho = statevec.reduced_density(pre, [a])
                # detected spin |1>; spin 1 sits on the left slit, spin 0 on the right
                pop_l += float(np.real(gate[1, 1] * rho[1, 1] * np.conj(gate[1, 1])))
                pop_r += float(np.real(gate[1, 0] * rho[0, 0] * np.conj(gate[1, 0])))
                coh += gate[1, 0] * rho[0, 1] * np.conj(gate[1, 1])
        # lost atoms: depolarized background, half an atom of detected weight
        pop_l += 0.25 * real.n_lost
        pop_r += 0.25 * real.n_lost
    m = model.ensemble_size
    return InterferogramModel(
        slit_separation=wavelength,
        envelope_width=envelope_width if envelope_width is not None else wavelength / 8.0,
        expansion_time=tof,
        mass=mass,
        population_left=pop_l / m,
        population_right=pop_r / m,
        coherence=coh / m,
        n_atoms=n_atoms,
    )


def interference_pattern(n_atoms: int, t_hold: float, cal: CalibrationModel,
                         noise: NoiseModel | None, x_grid, tof: float,
                         **geometry) -> np.ndarray:
    """Far-field intensity sampled on ``x_grid`` (meters after expansion)."""
    model = compute_interferogram(n_atoms, t_hold, cal, noise, tof, **geometry)
    return model.intensity(x_grid)


def pattern_fit(model: InterferogramModel, x_grid=None) -> FitResult:
    """Fit the envelope-divided pattern with the fringe model."""
    x = model.default_x_grid() if x_grid is None else np.asarray(x_grid, float)
    y = model.intensity(x) / model.envelope(x)
    theta = model.fringe_wavevector * x
    return _fit_samples(theta, y)


def pattern_contrast(intensity) -> float:
    """(max - min) / (max + min) of a sampled pattern.  Equals the fitted
    visibility for a pure sinusoid sampled over full periods; the fit is the
    robust choice for enveloped or partial patterns."""
    intensity = np.asarray(intensity, dtype=float)
    hi, lo = intensity.max(), intensity.min()
    if hi + lo <= 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


def interference_visibility_curve(n_atoms: int, t_grid, cal: CalibrationModel,
                                  noise: NoiseModel | None, *, tof: float = 0.011,
                                  x_grid=None, boundary: str = "open",
                                  **geometry) -> list:
    """Pattern visibility at each hold time (the delocalizing variant)."""
    points = []
    for t in t_grid:
        model = compute_interferogram(n_atoms, float(t), cal, noise, tof,
                                      boundary=boundary, **geometry)
        points.append(ScanPoint(float(t), effective_phase(float(t), cal),
                                pattern_fit(model, x_grid)))
    return points


def count_interior_maxima(values, prominence: float | None = None) -> int:
    """Interior local maxima of a scan, boundaries excluded.

    With ``prominence`` set, only peaks that rise at least that far above
    their surroundings count; a Monte Carlo curve needs this so sampling
    wiggles on flat stretches are not mistaken for oscillation maxima.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0
    if prominence is None:
        return int(np.sum((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])))
    from scipy.signal import find_peaks
    peaks, _ = find_peaks(v, prominence=prominence)
    return int(peaks.size)


# --- CSV output -------------------------------------------------------------------

SCAN_CSV_HEADER = "t_hold_us,phase_rad,visibility,fringe_phase_rad,offset,residual_rms"


def scan_csv_lines(points) -> list:
    lines = [SCAN_CSV_HEADER]
    for p in points:
        lines.append(",".join(f"{v:.12g}" for v in (
            p.t_hold * 1e6, p.phase, p.fit.visibility, p.fit.fringe_phase,
            p.fit.offset, p.fit.residual_rms)))
    return lines


def write_scan_csv(path, points) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(scan_csv_lines(points)) + "\n")
