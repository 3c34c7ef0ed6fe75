"""Pulse sequences: the executable form of the collision protocols.

A sequence is an ordered list of abstract instructions acting on a chain of
atoms, one per lattice site:

* ``rotate(area, axis_phase)`` -- resonant microwave pulse on every atom,
  modeled as instantaneous.
* ``shift(direction)`` -- spin-dependent transport by one site: the two spin
  components of each atom move half a site each, in opposite directions.
* ``hold(duration)`` -- wait; co-located components of neighbouring atoms
  accumulate collisional phase.
* ``RETURN`` -- transport everything back so both components sit at the home
  site again.
* ``FREEZE`` -- terminate with the components left delocalized (the engine
  applies a fixed pi/2 readout pulse at this point).

Positions are tracked in half-site units so that the symmetric motion of the
two spin components stays integer-valued.  A pi pulse exchanges the spin
labels of the two components in place, so it swaps the position tags; this
is what makes a mid-hold echo keep the collisional phase while cancelling
single-particle phases, and why the second transport step of the
"delocalize" variant runs opposite to the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ProtocolError

ROTATE = "rotate"
SHIFT = "shift"
HOLD = "hold"
RETURN_KIND = "return"
FREEZE_KIND = "freeze"

_TERMINALS = (RETURN_KIND, FREEZE_KIND)


@dataclass(frozen=True)
class Instruction:
    kind: str
    area: float = 0.0        # rotate only, rad
    axis_phase: float = 0.0  # rotate only, rad
    direction: int = 0       # shift only, +1 or -1
    duration: float = 0.0    # hold only, s

    def __str__(self):
        if self.kind == ROTATE:
            return f"rotate {self.area!r} {self.axis_phase!r}"
        if self.kind == SHIFT:
            return f"shift {self.direction:+d}"
        if self.kind == HOLD:
            return f"hold {self.duration!r}"
        return self.kind


def rotate(area: float, axis_phase: float = 0.0) -> Instruction:
    return Instruction(ROTATE, area=float(area), axis_phase=float(axis_phase))


def shift(direction: int) -> Instruction:
    if direction not in (+1, -1):
        raise ProtocolError(f"shift direction must be +1 or -1, got {direction}")
    return Instruction(SHIFT, direction=direction)


def hold(duration: float) -> Instruction:
    return Instruction(HOLD, duration=float(duration))


RETURN = Instruction(RETURN_KIND)
FREEZE = Instruction(FREEZE_KIND)


def is_echo_like(area: float) -> bool:
    """True if a rotation acts as a spin-label exchange of the two components.

    Holds for areas within pi/4 of an odd multiple of pi, which covers ideal
    echo pulses and echo pulses with realistic area errors while excluding
    (possibly mis-set) pi/2 pulses.
    """
    k = round(area / math.pi)
    return k % 2 == 1 and abs(area - k * math.pi) < math.pi / 4


@dataclass(frozen=True)
class PulseSequence:
    """Immutable protocol: instructions plus the register they act on.

    ``fill_mask`` marks which home sites actually carry an atom (vacancies
    are empty sites).  ``boundary`` is ``"open"`` or ``"ring"``.
    """

    instructions: tuple
    n_atoms: int
    fill_mask: tuple = ()
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.fill_mask:
            object.__setattr__(self, "fill_mask", (True,) * self.n_atoms)
        else:
            object.__setattr__(self, "fill_mask", tuple(bool(b) for b in self.fill_mask))

    def with_fill_mask(self, mask) -> "PulseSequence":
        return replace(self, fill_mask=tuple(bool(b) for b in mask))

    @property
    def total_hold(self) -> float:
        return sum(i.duration for i in self.instructions if i.kind == HOLD)

    def terminal_index(self) -> int:
        for k, ins in enumerate(self.instructions):
            if ins.kind in _TERMINALS:
                return k
        return -1


def build_return_sequence(t_hold: float, alpha: float, n_atoms: int = 2, *,
                          boundary: str = "open", fill_mask=None) -> PulseSequence:
    """Interferometer that returns the atoms home: pi/2, split, hold with a
    mid-hold echo pi pulse, return, final pi/2 with variable phase ``alpha``."""
    if t_hold < 0:
        raise ProtocolError(f"hold time must be non-negative, got {t_hold}")
    instructions = (
        rotate(math.pi / 2, 0.0),
        shift(+1),
        hold(t_hold / 2.0),
        rotate(math.pi, 0.0),
        hold(t_hold / 2.0),
        RETURN,
        rotate(math.pi / 2, float(alpha)),
    )
    return PulseSequence(instructions, n_atoms, fill_mask or (), boundary)


def build_delocalize_sequence(t_hold: float, n_atoms: int = 2, *,
                              boundary: str = "open", fill_mask=None) -> PulseSequence:
    """Variant that leaves every atom split over the two sites adjacent to its
    home (separation of two sites, i.e. one full wavelength of the axis).

    After the echo the spin labels of the components are exchanged, so the
    separating transport runs with direction -1.  No final rotation is
    included; the engine appends a fixed pi/2 readout pulse at FREEZE.
    """
    if t_hold < 0:
        raise ProtocolError(f"hold time must be non-negative, got {t_hold}")
    instructions = (
        rotate(math.pi / 2, 0.0),
        shift(+1),
        hold(t_hold / 2.0),
        rotate(math.pi, 0.0),
        hold(t_hold / 2.0),
        shift(-1),
        FREEZE,
    )
    return PulseSequence(instructions, n_atoms, fill_mask or (), boundary)


def initial_positions(n_atoms: int):
    """Home positions in half-site units: component tags (pos0, pos1)."""
    home = 2 * np.arange(n_atoms, dtype=np.int64)
    return home.copy(), home.copy()


def step_positions(pos0, pos1, instruction, n_sites: int, boundary: str):
    """Advance component position tags through one instruction.

    Returns (pos0, pos1, swapped) where ``swapped`` reports whether the
    instruction exchanged the spin labels (echo-like rotation).
    """
    swapped = False
    if instruction.kind == SHIFT:
        pos0 = pos0 - instruction.direction
        pos1 = pos1 + instruction.direction
    elif instruction.kind == ROTATE and is_echo_like(instruction.area):
        pos0, pos1 = pos1, pos0
        swapped = True
    elif instruction.kind == RETURN_KIND:
        home = 2 * np.arange(len(pos0), dtype=np.int64)
        pos0, pos1 = home.copy(), home.copy()
    if boundary == "ring":
        period = 2 * n_sites
        pos0 = np.mod(pos0, period)
        pos1 = np.mod(pos1, period)
    return pos0, pos1, swapped


def validate(seq: PulseSequence, edge_policy: str = "absorb"):
    """Check structural invariants; return a list of violation strings.

    ``edge_policy="absorb"`` (default) lets components move past the span of
    home sites on an open chain into empty lattice; they simply find no
    collision partner there.  ``edge_policy="strict"`` flags any excursion.
    """
    violations = []
    if seq.n_atoms < 1:
        violations.append(f"n_atoms must be >= 1, got {seq.n_atoms}")
        return violations
    if seq.boundary not in ("open", "ring"):
        violations.append(f"unknown boundary {seq.boundary!r}")
    if len(seq.fill_mask) != seq.n_atoms:
        violations.append(
            f"fill_mask length {len(seq.fill_mask)} does not match n_atoms {seq.n_atoms}")
    if edge_policy not in ("absorb", "strict"):
        violations.append(f"unknown edge policy {edge_policy!r}")

    terminals = [k for k, ins in enumerate(seq.instructions) if ins.kind in _TERMINALS]
    if not terminals:
        violations.append("missing terminal: exactly one return or freeze required")
    elif len(terminals) > 1:
        violations.append(f"multiple terminals at instruction indices {terminals}")
    else:
        for k in range(terminals[0] + 1, len(seq.instructions)):
            if seq.instructions[k].kind != ROTATE:
                violations.append(
                    f"instruction {k} ({seq.instructions[k].kind}) after terminal; "
                    "only rotations may follow")

    for k, ins in enumerate(seq.instructions):
        if ins.kind == ROTATE and not (0.0 <= ins.area <= 2 * math.pi + 1e-12):
            violations.append(f"instruction {k}: area {ins.area} outside [0, 2*pi]")
        if ins.kind == HOLD and ins.duration < 0:
            violations.append(f"instruction {k}: negative hold duration {ins.duration}")
        if ins.kind == SHIFT and ins.direction not in (+1, -1):
            violations.append(f"instruction {k}: shift direction must be +1 or -1")

    if seq.boundary == "open" and edge_policy == "strict":
        pos0, pos1 = initial_positions(seq.n_atoms)
        span = 2 * (seq.n_atoms - 1)
        for k, ins in enumerate(seq.instructions):
            pos0, pos1, _ = step_positions(pos0, pos1, ins, seq.n_atoms, seq.boundary)
            occ = np.array(seq.fill_mask, dtype=bool)
            for tag, pos in (("|0>", pos0), ("|1>", pos1)):
                out = occ & ((pos < 0) | (pos > span))
                if np.any(out):
                    atoms = np.nonzero(out)[0].tolist()
                    violations.append(
                        f"instruction {k}: {tag} component of atoms {atoms} "
                        "beyond the open-chain edge (strict policy)")
    return violations


# --- line-oriented text form -------------------------------------------------

def sequence_to_text(seq: PulseSequence) -> str:
    lines = [
        f"atoms {seq.n_atoms}",
        f"boundary {seq.boundary}",
        "fill " + "".join("1" if b else "0" for b in seq.fill_mask),
    ]
    lines.extend(str(ins) for ins in seq.instructions)
    return "\n".join(lines) + "\n"


def sequence_from_text(text: str) -> PulseSequence:
    n_atoms = None
    boundary = "open"
    fill = None
    instructions = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        word = fields[0]
        try:
            if word == "atoms":
                n_atoms = int(fields[1])
            elif word == "boundary":
                boundary = fields[1]
            elif word == "fill":
                fill = tuple(c == "1" for c in fields[1])
            elif word == ROTATE:
                instructions.append(rotate(float(fields[1]), float(fields[2])))
            elif word == SHIFT:
                instructions.append(shift(int(fields[1])))
            elif word == HOLD:
                instructions.append(hold(float(fields[1])))
            elif word == RETURN_KIND:
                instructions.append(RETURN)
            elif word == FREEZE_KIND:
                instructions.append(FREEZE)
            else:
                raise ProtocolError(f"line {ln}: unknown instruction {word!r}")
        except (IndexError, ValueError) as exc:
            raise ProtocolError(f"line {ln}: malformed {word!r} line: {raw!r}") from exc
    if n_atoms is None:
        raise ProtocolError("missing 'atoms' header line")
    return PulseSequence(tuple(instructions), n_atoms, fill or (), boundary)
