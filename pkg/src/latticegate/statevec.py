"""Exact state-vector engine for the collision protocols.

The register holds one qubit per occupied site.  Atom ``a`` (rank ``a`` among
occupied sites, left to right) maps to bit ``n-1-a`` of the amplitude index,
so a basis index written in binary reads as the spin string ``s_0 s_1 ...``.

Rotations use the convention

    R(beta, phi) = [[cos(beta/2),              -i e^{-i phi} sin(beta/2)],
                    [-i e^{i phi} sin(beta/2),  cos(beta/2)]]

in the {|0>, |1>} basis, i.e. a right-handed rotation about the equatorial
axis at azimuth ``phi``.

During a hold, every ordered pair of occupied atoms (x, y) whose |1>
component of x sits on the same site as the |0> component of y picks up the
diagonal phase ``e^{-i phi_c}`` on the (s_x=1, s_y=0) sector.  The affine
calibration intercept is distributed over the hold instructions in
proportion to their duration, so a full hold of t seconds accumulates
exactly ``slope*t + offset`` regardless of how the echo splits it, and a
zero-duration hold accumulates nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CapacityError, ProtocolError, LatticeGateError
from .physics import CalibrationModel
from .sequence import (FREEZE_KIND, HOLD, RETURN_KIND, ROTATE, SHIFT,
                       PulseSequence, initial_positions, is_echo_like,
                       step_positions, validate)

DEFAULT_MAX_ATOMS = 22
NORM_TOL = 1e-10
ENTROPY_EIGENVALUE_FLOOR = 1e-12

READOUT_AREA = math.pi / 2  # fixed pulse appended at FREEZE


def rotation_matrix(area: float, axis_phase: float) -> np.ndarray:
    c = math.cos(area / 2.0)
    s = math.sin(area / 2.0)
    e = np.exp(1j * axis_phase)
    return np.array([[c, -1j * s / e], [-1j * s * e, c]], dtype=complex)


@dataclass
class ManyBodyState:
    """Spin state of the occupied atoms plus the execution bookkeeping
    needed by the observables (component positions, collision record,
    echo parity, readout pulses)."""

    amplitudes: np.ndarray
    atoms: tuple                 # occupied home-site indices, ascending
    n_sites: int
    boundary: str
    pos0: np.ndarray             # |0>-component positions, half-site units
    pos1: np.ndarray
    collision_records: tuple = ()   # ((x_rank, y_rank), accumulated phase)
    echo_parity: int = 0
    readout: tuple = ()             # (area, axis_phase) pulses applied post-terminal

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "ManyBodyState":
        return replace(self, amplitudes=self.amplitudes.copy(),
                       pos0=self.pos0.copy(), pos1=self.pos1.copy())

    def basis_index(self, bits) -> int:
        """Index of |s_0 s_1 ...> for a bit string / iterable of 0,1."""
        out = 0
        for b in bits:
            out = (out << 1) | int(b)
        return out

    def bond_pairs(self):
        """Unordered collision pairs with odd multiplicity (the bond graph)."""
        parity = {}
        for (x, y), _ in self.collision_records:
            key = (min(x, y), max(x, y))
            parity[key] = parity.get(key, 0) ^ 1
        return sorted(k for k, v in parity.items() if v)

    def left_parity(self) -> np.ndarray:
        """Per-atom parity of 'my |1> component collided' events."""
        lefts = np.zeros(self.n_atoms, dtype=np.int64)
        for (x, _y), _ in self.collision_records:
            lefts[x] ^= 1
        return lefts


def _apply_single(amp: np.ndarray, gate: np.ndarray, atom: int, n: int) -> np.ndarray:
    view = amp.reshape(2**atom, 2, 2**(n - atom - 1))
    return np.einsum("ij,ajb->aib", gate, view).reshape(-1)


def _apply_rotation_all(amp, gate, n):
    for a in range(n):
        amp = _apply_single(amp, gate, a, n)
    return amp


def _atom_bits(idx: np.ndarray, atom: int, n: int) -> np.ndarray:
    return (idx >> (n - 1 - atom)) & 1


def _z_phase_weights(idx: np.ndarray, z_phases, n: int) -> np.ndarray:
    weights = np.zeros(idx.shape, dtype=float)
    for a, phase in enumerate(np.asarray(z_phases, dtype=float)):
        if phase != 0.0:
            weights += phase * _atom_bits(idx, a, n)
    return weights


def run(seq: PulseSequence, cal: CalibrationModel | None = None, *,
        area_scale: float = 1.0, z_phases=None,
        max_atoms: int = DEFAULT_MAX_ATOMS,
        stop_before_readout: bool = False) -> ManyBodyState:
    """Execute a validated sequence and return the final state.

    ``area_scale`` multiplies every rotation area (systematic pulse error).
    ``z_phases`` (per occupied atom, radians) are inserted as Z rotations
    immediately before the readout pulse.  ``stop_before_readout=True``
    returns the state at the terminal instruction with neither ``z_phases``
    nor any readout rotation applied; use :func:`apply_readout` to finish.
    """
    violations = validate(seq)
    if violations:
        raise ProtocolError("; ".join(violations))

    atoms = tuple(i for i, occ in enumerate(seq.fill_mask) if occ)
    n = len(atoms)
    if n == 0:
        raise ProtocolError("no occupied sites in fill_mask")
    if n > max_atoms:
        raise CapacityError(f"{n} occupied atoms exceeds the limit of {max_atoms}")

    total_hold = seq.total_hold
    if total_hold > 0 and cal is None:
        raise ProtocolError("sequence holds require a CalibrationModel")

    amp = np.zeros(2**n, dtype=complex)
    amp[0] = 1.0
    pos0_all, pos1_all = initial_positions(seq.n_atoms)
    idx = np.arange(2**n, dtype=np.int64)
    rank_of = {site: r for r, site in enumerate(atoms)}
    records: dict = {}
    echo_parity = 0
    readout: list = []
    terminal_seen = False
    pending_z = np.asarray(z_phases, dtype=float) if z_phases is not None else None

    def flush_z():
        nonlocal amp, pending_z
        if pending_z is not None:
            amp = amp * np.exp(1j * _z_phase_weights(idx, pending_z, n))
            pending_z = None

    def do_hold(duration):
        nonlocal amp
        if duration <= 0 or total_hold <= 0:
            return
        phase_inc = cal.slope * duration + cal.offset * (duration / total_hold)
        where0 = {int(pos0_all[site]): site for site in atoms}
        exponent = np.zeros(2**n, dtype=float)
        for x in atoms:
            site_y = where0.get(int(pos1_all[x]))
            if site_y is None or site_y == x:
                continue
            rx, ry = rank_of[x], rank_of[site_y]
            sector = (_atom_bits(idx, rx, n) == 1) & (_atom_bits(idx, ry, n) == 0)
            exponent[sector] += phase_inc
            # conjugating a post-echo segment through X^n swaps the sector,
            # so records are normalized to the pre-echo orientation: both
            # halves of an echo-split hold accumulate on one key
            key = (ry, rx) if echo_parity & 1 else (rx, ry)
            records[key] = records.get(key, 0.0) + phase_inc
        amp = amp * np.exp(-1j * exponent)

    for ins in seq.instructions:
        if ins.kind == ROTATE:
            executed = ins.area * area_scale
            if terminal_seen:
                if stop_before_readout:
                    break
                flush_z()
                readout.append((executed, ins.axis_phase))
            amp = _apply_rotation_all(amp, rotation_matrix(executed, ins.axis_phase), n)
            if is_echo_like(executed):
                echo_parity ^= 1
        elif ins.kind == HOLD:
            do_hold(ins.duration)
        elif ins.kind in (SHIFT, RETURN_KIND):
            pass  # positions handled below
        elif ins.kind == FREEZE_KIND:
            terminal_seen = True
            if not stop_before_readout:
                executed = READOUT_AREA * area_scale
                flush_z()
                readout.append((executed, 0.0))
                amp = _apply_rotation_all(amp, rotation_matrix(executed, 0.0), n)
            continue
        pos0_all, pos1_all, _ = step_positions(pos0_all, pos1_all, ins,
                                               seq.n_atoms, seq.boundary)
        if ins.kind == RETURN_KIND:
            terminal_seen = True

    if not stop_before_readout:
        flush_z()

    state = ManyBodyState(
        amplitudes=amp,
        atoms=atoms,
        n_sites=seq.n_atoms,
        boundary=seq.boundary,
        pos0=pos0_all[list(atoms)],
        pos1=pos1_all[list(atoms)],
        collision_records=tuple(sorted((k, v) for k, v in records.items())),
        echo_parity=echo_parity,
        readout=tuple(readout),
    )
    if abs(state.norm() - 1.0) > NORM_TOL:
        raise LatticeGateError(f"norm drifted to {state.norm()!r}")
    return state


def apply_readout(state: ManyBodyState, rotations, z_phases=None) -> ManyBodyState:
    """Apply optional per-atom Z phases followed by readout rotations.

    ``rotations`` is an iterable of (area, axis_phase).  Returns a new state
    with the pulses recorded in ``readout``.
    """
    n = state.n_atoms
    amp = state.amplitudes.copy()
    if z_phases is not None:
        idx = np.arange(2**n, dtype=np.int64)
        amp = amp * np.exp(1j * _z_phase_weights(idx, z_phases, n))
    applied = []
    parity = state.echo_parity
    for area, axis_phase in rotations:
        amp = _apply_rotation_all(amp, rotation_matrix(area, axis_phase), n)
        applied.append((area, axis_phase))
        if is_echo_like(area):
            parity ^= 1
    return replace(state, amplitudes=amp, echo_parity=parity,
                   readout=state.readout + tuple(applied))


# --- observables --------------------------------------------------------------


def probability_one_per_atom(state: ManyBodyState) -> np.ndarray:
    pr = np.abs(state.amplitudes) ** 2
    n = state.n_atoms
    view = pr.reshape([2] * n)
    out = np.empty(n)
    for a in range(n):
        axes = tuple(i for i in range(n) if i != a)
        out[a] = view.sum(axis=axes)[1]
    return out


def probability_one(state: ManyBodyState) -> float:
    """Mean |1> population over the occupied atoms."""
    return float(np.mean(probability_one_per_atom(state)))


def reduced_density(state: ManyBodyState, atoms) -> np.ndarray:
    """Partial trace down to one or two atoms (by rank among occupied)."""
    targets = [int(a) for a in atoms]
    n = state.n_atoms
    if not 1 <= len(targets) <= 2 or len(set(targets)) != len(targets):
        raise ValueError("atoms must name one or two distinct atom ranks")
    if any(a < 0 or a >= n for a in targets):
        raise IndexError(f"atom rank out of range for {n} atoms: {targets}")
    tensor = state.amplitudes.reshape([2] * n)
    rest = [i for i in range(n) if i not in targets]
    mat = np.transpose(tensor, targets + rest).reshape(2 ** len(targets), -1)
    rho = mat @ mat.conj().T
    return rho


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def entanglement_entropy(state: ManyBodyState, cut) -> float:
    """Von Neumann entropy (bits) across the bipartition ``cut`` vs rest.

    Eigenvalues below the configured floor are treated as exact zeros.
    """
    part = sorted(set(int(a) for a in cut))
    n = state.n_atoms
    if not part or len(part) >= n:
        return 0.0
    tensor = state.amplitudes.reshape([2] * n)
    rest = [i for i in range(n) if i not in part]
    mat = np.transpose(tensor, part + rest).reshape(2 ** len(part), -1)
    svals = np.linalg.svd(mat, compute_uv=False)
    p = svals**2
    p = p[p > ENTROPY_EIGENVALUE_FLOOR]
    return float(-np.sum(p * np.log2(p)))


def pauli_expectation(state: ManyBodyState, x_atom: int | None, z_atoms) -> float:
    """<X_a * prod Z_b> for a Pauli string with at most one X factor.

    ``x_atom=None`` gives a pure Z string.  The X site must not repeat in
    ``z_atoms``.
    """
    n = state.n_atoms
    amp = state.amplitudes
    idx = np.arange(2**n, dtype=np.int64)
    zmask = 0
    for b in z_atoms:
        zmask |= 1 << (n - 1 - int(b))
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)
    if x_atom is None:
        val = np.sum(np.abs(amp) ** 2 * signs)
    else:
        flip = idx ^ (1 << (n - 1 - int(x_atom)))
        val = np.sum(np.conj(amp) * signs * amp[flip])
    return float(np.real(val))


_S_GATE = np.diag([1.0, 1.0j]).astype(complex)
_X_GATE = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Z_GATE = np.diag([1.0, -1.0]).astype(complex)


def local_correction(state: ManyBodyState, atom: int) -> np.ndarray:
    """Single-atom Clifford taking the run output into canonical graph-state
    form: undo the readout pulses, undo the echo's net spin flip, cancel the
    per-bond Z byproduct, and rotate the initial-pulse frame onto |+>."""
    corr = _S_GATE.copy()
    if state.left_parity()[atom] & 1:
        corr = corr @ _Z_GATE
    if state.echo_parity & 1:
        corr = corr @ _X_GATE
    for area, axis_phase in reversed(state.readout):
        corr = corr @ rotation_matrix(area, axis_phase).conj().T
    return corr


def stabilizer_check(state: ManyBodyState, phase: float = math.pi) -> np.ndarray:
    """Expectation of every graph-state generator K_a = X_a prod Z_nbr on the
    run output, after the documented local corrections.

    For a noiseless run at collision phase pi (the ``phase`` the corrections
    were derived at) every value is +1; other phases give sub-unity values.
    """
    n = state.n_atoms
    corrected = state.copy()
    amp = corrected.amplitudes
    for a in range(n):
        amp = _apply_single(amp, local_correction(state, a), a, n)
    corrected.amplitudes = amp

    neighbours = {a: [] for a in range(n)}
    for x, y in state.bond_pairs():
        neighbours[x].append(y)
        neighbours[y].append(x)
    return np.array([pauli_expectation(corrected, a, neighbours[a]) for a in range(n)])


# --- utilities ----------------------------------------------------------------


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute amplitude deviation between a and b after aligning the
    global phase (minimized over the phase)."""
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-300:
        return float(np.max(np.abs(a - b)))
    g = overlap / abs(overlap)
    return float(np.max(np.abs(a - g * b)))


def states_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    return global_phase_distance(a, b) < tol


def sample_counts(state: ManyBodyState, shots: int, rng) -> dict:
    """Multinomial samples of the spin basis, {bitstring: count}."""
    pr = np.abs(state.amplitudes) ** 2
    pr = pr / pr.sum()
    counts = rng.multinomial(shots, pr)
    n = state.n_atoms
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def dump_state(state: ManyBodyState, stream) -> None:
    """Debug dump, one line per basis state: index, re, im (12 digits)."""
    for i, z in enumerate(state.amplitudes):
        stream.write(f"{i} {z.real:.12g} {z.imag:.12g}\n")
