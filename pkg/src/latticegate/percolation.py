"""Site percolation on simple-cubic lattices: defect-limited cluster sizes
and spanning-threshold estimation.

Occupancy uses the shared-field coupling: a site is occupied iff its
uniform(0,1) draw is below p, with the uniform field fixed by the seed.
The same seed therefore gives monotone occupancy in p, exact per trial,
which makes spanning monotone in p and lets a bisection on p converge with
reused trial seeds and no Monte Carlo order flips.

Randomness: the counter-based Philox generator (``numpy.random.Philox``);
per-trial streams are spawned from the master seed with
``numpy.random.SeedSequence``.  Spanning is defined along x only: some
component touches both the x=0 and x=L-1 faces.  All boundaries are open.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, EstimationError
from .noise import RNG_ALGORITHM, make_rng


def _normalize_dims(dims) -> tuple:
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if any(d < 1 for d in dims) or not 1 <= len(dims) <= 3:
        raise DomainError(f"dims must be 1 to 3 sizes >= 1, got {dims}")
    return dims + (1,) * (3 - len(dims))


def _axis_pairs(dims) -> np.ndarray:
    lx, ly, lz = dims
    n = lx * ly * lz
    idx = np.arange(n, dtype=np.int64).reshape(lz, ly, lx)
    pairs = []
    for ax, (length, stride) in enumerate(((lx, 1), (ly, lx), (lz, lx * ly))):
        if length < 2:
            continue
        take = [slice(None)] * 3
        take[2 - ax] = slice(0, length - 1)
        src = idx[tuple(take)].reshape(-1)
        pairs.append(np.column_stack([src, src + stride]))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs, axis=0)


@dataclass(frozen=True)
class PercolationTrial:
    dims: tuple
    p: float
    seed_key: tuple
    mask: np.ndarray
    component_sizes: np.ndarray   # descending
    spanning: bool

    @property
    def n_occupied(self) -> int:
        return int(self.mask.sum())

    @property
    def largest(self) -> int:
        return int(self.component_sizes[0]) if self.component_sizes.size else 0

    @property
    def giant_fraction(self) -> float:
        occ = self.n_occupied
        return self.largest / occ if occ else 0.0


def _occupancy_field(dims, seed) -> np.ndarray:
    return make_rng(seed).random(int(np.prod(dims)))


def _components(dims, mask):
    """Component labels over all sites (unoccupied sites stay singletons)."""
    pairs = _axis_pairs(dims)
    keep = mask[pairs[:, 0]] & mask[pairs[:, 1]] if pairs.size else np.empty(0, bool)
    edges = pairs[keep] if pairs.size else pairs
    n = mask.size
    adj = coo_matrix((np.ones(edges.shape[0], dtype=np.int8),
                      (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return labels


def _spans_x(dims, mask, labels) -> bool:
    lx, ly, lz = dims
    faces = np.arange(mask.size, dtype=np.int64).reshape(lz, ly, lx)
    left = faces[:, :, 0].reshape(-1)
    right = faces[:, :, lx - 1].reshape(-1)
    left_labels = labels[left[mask[left]]]
    right_labels = labels[right[mask[right]]]
    if left_labels.size == 0 or right_labels.size == 0:
        return False
    return bool(np.isin(left_labels, right_labels).any())


def run_trial(dims, p: float, seed) -> PercolationTrial:
    """One seeded occupancy draw with its components and spanning flag."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0,1], got {p}")
    dims = _normalize_dims(dims)
    field = _occupancy_field(dims, seed)
    mask = field < p
    labels = _components(dims, mask)
    occupied = np.nonzero(mask)[0]
    if occupied.size:
        sizes = np.bincount(labels[occupied])
        sizes = np.sort(sizes[sizes > 0])[::-1]
    else:
        sizes = np.empty(0, dtype=np.int64)
    spanning = _spans_x(dims, mask, labels) if occupied.size else False
    key = seed.spawn_key if isinstance(seed, np.random.SeedSequence) else (int(seed),)
    return PercolationTrial(dims=dims, p=float(p), seed_key=tuple(key),
                            mask=mask, component_sizes=sizes, spanning=spanning)


def trial_seeds(master_seed: int, trials: int):
    return np.random.SeedSequence(master_seed).spawn(trials)


def spanning_probability(dims, p: float, seeds) -> float:
    hits = sum(run_trial(dims, p, s).spanning for s in seeds)
    return hits / len(seeds)


@dataclass(frozen=True)
class ThresholdEstimate:
    p_c: float
    stderr: float
    spanning_prob: float
    ndim: int
    size: int
    trials: int
    evaluations: tuple   # (p, spanning probability) in evaluation order
    rng: str = RNG_ALGORITHM


def estimate_threshold(ndim: int, size: int, trials: int, tolerance: float = 0.002, *,
                       seed: int = 0, bracket=(0.0, 1.0),
                       max_iterations: int = 60) -> ThresholdEstimate:
    """Bisection for the p where the spanning probability crosses 1/2.

    The same ``trials`` seeded occupancy fields are reused at every probed
    p, so the per-seed spanning indicator is monotone and the empirical
    crossing is well defined.  Returns the bracket midpoint once the bracket
    is narrower than ``tolerance``, with the binomial standard error of the
    spanning probability measured there.
    """
    if size < 2:
        raise DomainError(f"size must be >= 2, got {size}")
    if trials < 2:
        raise DomainError(f"trials must be >= 2, got {trials}")
    dims = tuple([size] * ndim)
    seeds = trial_seeds(seed, trials)
    lo, hi = map(float, bracket)
    evaluations = []
    for _ in range(max_iterations):
        if hi - lo <= tolerance:
            mid = 0.5 * (lo + hi)
            q = spanning_probability(dims, mid, seeds)
            evaluations.append((mid, q))
            stderr = float(np.sqrt(max(q * (1.0 - q), 1.0 / trials) / trials))
            return ThresholdEstimate(p_c=mid, stderr=stderr, spanning_prob=q,
                                     ndim=ndim, size=size, trials=trials,
                                     evaluations=tuple(evaluations))
        mid = 0.5 * (lo + hi)
        q = spanning_probability(dims, mid, seeds)
        evaluations.append((mid, q))
        if q < 0.5:
            lo = mid
        else:
            hi = mid
    raise EstimationError(
        f"bisection did not reach tolerance {tolerance} in {max_iterations} "
        f"iterations; bracket [{lo}, {hi}]")


@dataclass(frozen=True)
class SizeStats:
    dims: tuple
    p: float
    trials: int
    mean_size: float
    max_size: int
    giant_fraction: float
    spanning_prob: float
    rng: str = RNG_ALGORITHM


def cluster_size_stats(dims, p: float, trials: int, *, seed: int = 0,
                       seeds=None) -> SizeStats:
    """Aggregate component statistics over seeded trials.

    ``mean_size`` averages the per-trial mean component size,
    ``giant_fraction`` the per-trial share of occupied sites in the largest
    component.  Deterministic given the seed list.
    """
    dims = _normalize_dims(dims)
    if seeds is None:
        seeds = trial_seeds(seed, trials)
    means, giants, spans = [], [], []
    max_size = 0
    for s in seeds:
        trial = run_trial(dims, p, s)
        if trial.component_sizes.size:
            means.append(float(trial.component_sizes.mean()))
        else:
            means.append(0.0)
        giants.append(trial.giant_fraction)
        spans.append(trial.spanning)
        max_size = max(max_size, trial.largest)
    return SizeStats(dims=dims, p=float(p), trials=len(means),
                     mean_size=float(np.mean(means)), max_size=max_size,
                     giant_fraction=float(np.mean(giants)),
                     spanning_prob=float(np.mean(spans)))


PERCOLATION_CSV_HEADER = ("p,trials,spanning_prob,stderr,mean_size,max_size,"
                          "giant_fraction")


def percolation_csv_lines(stats_rows) -> list:
    lines = [PERCOLATION_CSV_HEADER]
    for s in stats_rows:
        stderr = np.sqrt(max(s.spanning_prob * (1 - s.spanning_prob), 0.0) / s.trials)
        lines.append(",".join(f"{v:.12g}" for v in (
            s.p, s.trials, s.spanning_prob, stderr, s.mean_size, s.max_size,
            s.giant_fraction)))
    return lines
