"""Imperfection channels and the deterministic ensemble runner.

Channels, all independently switchable and seed-deterministic:

* vacancies -- each site carries an atom with probability ``fill_probability``
  (a defective unity-filling register); empty sites break collision bonds.
* pulse area error -- every rotation area is scaled by ``1 + pulse_area_error``
  (systematic).  An optional per-pulse Gaussian jitter is available but off
  by default.
* dephasing -- each atom acquires a random Z phase before the readout pulse,
  drawn from N(0, sigma_total^2) with
  ``sigma_total^2 = dephasing_sigma^2 + (dephasing_rate * t_hold)^2``.
  This models the inhomogeneity component that the mid-hold echo does not
  cancel; the rate term produces a Gaussian decay envelope versus hold time.
* loss -- each atom survives the full sequence with probability
  ``1 - loss_per_atom``; a lost atom is removed from the register (no
  collisions) but still counts toward the total atom number with a
  depolarized readout probability of 1/2.

Randomness comes from the counter-based Philox generator.  Member streams
are derived from the master seed with ``numpy.random.SeedSequence.spawn``,
so any ensemble member is reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

import numpy as np

from .errors import DomainError
from .sequence import ROTATE, PulseSequence

RNG_ALGORITHM = "numpy.random.Philox"


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator used everywhere randomness is needed."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class NoiseModel:
    fill_probability: float = 1.0
    pulse_area_error: float = 0.0
    pulse_area_jitter: float = 0.0
    dephasing_sigma: float = 0.0
    dephasing_rate: float = 0.0      # rad/s of hold time
    loss_per_atom: float = 0.0
    ensemble_size: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fill_probability <= 1.0:
            raise DomainError(f"fill_probability must be in [0,1], got {self.fill_probability}")
        if not 0.0 <= self.loss_per_atom <= 1.0:
            raise DomainError(f"loss_per_atom must be in [0,1], got {self.loss_per_atom}")
        if self.pulse_area_error <= -1.0:
            raise DomainError("pulse_area_error must exceed -1")
        if self.pulse_area_jitter < 0 or self.dephasing_sigma < 0 or self.dephasing_rate < 0:
            raise DomainError("jitter, dephasing_sigma and dephasing_rate must be >= 0")
        if self.ensemble_size < 1:
            raise DomainError(f"ensemble_size must be >= 1, got {self.ensemble_size}")

    @property
    def is_ideal(self) -> bool:
        return (self.fill_probability == 1.0 and self.pulse_area_error == 0.0
                and self.pulse_area_jitter == 0.0 and self.dephasing_sigma == 0.0
                and self.dephasing_rate == 0.0 and self.loss_per_atom == 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rng"] = RNG_ALGORITHM
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        d = {k: v for k, v in d.items() if k != "rng"}
        return cls(**d)


IDEAL = NoiseModel()


def apply_pulse_error(seq: PulseSequence, eps: float) -> PulseSequence:
    """Scale every rotation area by (1 + eps); other instructions untouched."""
    if eps <= -1.0:
        raise DomainError("pulse area error must exceed -1")
    if eps == 0.0:
        return seq
    scaled = tuple(
        replace(ins, area=ins.area * (1.0 + eps)) if ins.kind == ROTATE else ins
        for ins in seq.instructions
    )
    return replace(seq, instructions=scaled)


def scale_rotations(seq: PulseSequence, factors) -> PulseSequence:
    """Scale each rotation by its own factor (per-pulse jitter support)."""
    factors = list(factors)
    n_rot = sum(1 for ins in seq.instructions if ins.kind == ROTATE)
    if n_rot != len(factors):
        raise ValueError(f"expected {n_rot} rotation factors, got {len(factors)}")
    out = []
    k = 0
    for ins in seq.instructions:
        if ins.kind == ROTATE:
            out.append(replace(ins, area=ins.area * factors[k]))
            k += 1
        else:
            out.append(ins)
    return replace(seq, instructions=tuple(out))


def sample_vacancies(n_atoms: int, fill_probability: float, seed) -> np.ndarray:
    """Bernoulli occupancy mask over the sites, deterministic per seed."""
    if not 0.0 <= fill_probability <= 1.0:
        raise DomainError(f"fill_probability must be in [0,1], got {fill_probability}")
    rng = make_rng(seed)
    return rng.random(n_atoms) < fill_probability


def member_seed_sequences(master_seed: int, count: int):
    """Documented member-stream splitting rule."""
    return np.random.SeedSequence(master_seed).spawn(count)


def member_rngs(model: NoiseModel):
    return [np.random.Generator(np.random.Philox(ss))
            for ss in member_seed_sequences(model.seed, model.ensemble_size)]


@dataclass(frozen=True)
class Realization:
    """One concrete draw of all noise channels for a single ensemble member.

    ``fill_mask`` marks occupied sites; ``kept_mask`` (same length) marks the
    occupied atoms that also survived loss and therefore make it into the
    quantum register.  ``z_phases`` has one entry per kept atom, in register
    order.  ``pulse_factors`` has one area factor per rotation in the
    sequence; the readout pulse appended at FREEZE uses ``readout_factor``.
    """

    fill_mask: tuple
    kept_mask: tuple
    z_phases: np.ndarray
    pulse_factors: tuple
    readout_factor: float

    @property
    def n_occupied(self) -> int:
        return int(sum(self.fill_mask))

    @property
    def n_lost(self) -> int:
        return int(sum(f and not k for f, k in zip(self.fill_mask, self.kept_mask)))


def draw_realization(model: NoiseModel, n_atoms: int, t_hold: float,
                     n_pulses: int, rng: np.random.Generator) -> Realization:
    """Draw one member realization; the draw order is fixed for determinism
    (vacancies, loss, dephasing, pulse jitter)."""
    if model.fill_probability < 1.0:
        fill = rng.random(n_atoms) < model.fill_probability
    else:
        fill = np.ones(n_atoms, dtype=bool)
    kept = fill.copy()
    if model.loss_per_atom > 0.0:
        lost = rng.random(n_atoms) < model.loss_per_atom
        kept &= ~lost
    sigma = float(np.hypot(model.dephasing_sigma, model.dephasing_rate * t_hold))
    n_kept = int(kept.sum())
    z = rng.normal(0.0, sigma, size=n_kept) if sigma > 0 else np.zeros(n_kept)
    base = 1.0 + model.pulse_area_error
    if model.pulse_area_jitter > 0.0:
        factors = base * (1.0 + rng.normal(0.0, model.pulse_area_jitter, size=n_pulses + 1))
    else:
        factors = np.full(n_pulses + 1, base)
    return Realization(
        fill_mask=tuple(bool(b) for b in fill),
        kept_mask=tuple(bool(b) for b in kept),
        z_phases=z,
        pulse_factors=tuple(float(f) for f in factors[:n_pulses]),
        readout_factor=float(factors[n_pulses]),
    )


def ensemble_average(model: NoiseModel, n_atoms: int, t_hold: float,
                     n_pulses: int, member_fn):
    """Mean and standard error of a vector observable over the ensemble.

    ``member_fn(realization)`` must return a 1-d array of fixed length.
    Members are evaluated in seed order; any member error aborts the whole
    average.
    """
    rows = []
    for rng in member_rngs(model):
        real = draw_realization(model, n_atoms, t_hold, n_pulses, rng)
        rows.append(np.asarray(member_fn(real), dtype=float))
    stacked = np.vstack(rows)
    mean = stacked.mean(axis=0)
    if stacked.shape[0] > 1:
        stderr = stacked.std(axis=0, ddof=1) / np.sqrt(stacked.shape[0])
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr
