"""Stabilizer-level cluster generation and verification.

At collision phase pi the protocol is a Clifford circuit, so cluster states
on up to ~2e5 sites are tracked as stabilizer generators instead of
amplitudes.  Generator rows are bit-packed, 64 qubits per machine word.
Building a cluster from the |+>-type product state applies one CZ layer per
chosen lattice axis; CZ never touches the X part of these generators, so
the X block stays the identity and is stored implicitly (materializing it
for a 125k-qubit lattice would double a ~2 GB allocation for no benefit).

Canonical comparison of stabilizer groups row-reduces generator sets over
GF(2) with exact sign tracking, so two generating sets match if and only if
they generate the same signed group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError

DEFAULT_MAX_QUBITS = 200_000
MATERIALIZE_LIMIT = 4096  # dense canonical work above this is refused


def _n_words(n: int) -> int:
    return (n + 63) >> 6


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, n) 0/1 array into (rows, words) uint64, LSB-first."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, n = bits.shape
    words = _n_words(n)
    padded = np.zeros((rows, words * 64), dtype=np.uint8)
    padded[:, :n] = bits
    chunks = padded.reshape(rows, words, 8, 8)
    packed_bytes = np.packbits(chunks, axis=-1, bitorder="little").reshape(rows, words * 8)
    return packed_bytes.view("<u8").reshape(rows, words)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    rows = words.shape[0]
    as_bytes = words.astype("<u8").view(np.uint8).reshape(rows, -1)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[:, :n]


@dataclass
class StabilizerTableau:
    """Signed stabilizer generators, one bit-packed row per generator.

    ``x_words is None`` encodes an identity X block (generator a carries
    X on qubit a), the invariant form for CZ-only circuits from |+...+>.
    ``signs`` holds 0 for +1 and 1 for -1.
    """

    n: int
    z_words: np.ndarray
    x_words: np.ndarray | None = None
    signs: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.signs is None:
            self.signs = np.zeros(self.n, dtype=np.uint8)

    @classmethod
    def plus_state(cls, n: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> "StabilizerTableau":
        if n < 1:
            raise DomainError(f"need at least one qubit, got {n}")
        if n > max_qubits:
            raise CapacityError(f"{n} qubits exceeds the limit of {max_qubits}")
        return cls(n=n, z_words=np.zeros((n, _n_words(n)), dtype=np.uint64))

    @classmethod
    def graph_state(cls, n: int, edges) -> "StabilizerTableau":
        """Generators X_a prod_{b ~ a} Z_b of the graph with the given edges."""
        tab = cls.plus_state(n, max_qubits=max(n, DEFAULT_MAX_QUBITS))
        tab.apply_cz_layer(edges)
        return tab

    def x_bits(self) -> np.ndarray:
        if self.x_words is None:
            return np.eye(self.n, dtype=np.uint8)
        return unpack_bits(self.x_words, self.n)

    def z_bits(self) -> np.ndarray:
        return unpack_bits(self.z_words, self.n)

    def apply_cz_layer(self, edges) -> None:
        """Conjugate the generators by CZ on every (a, b) pair.

        Requires the identity X block (the only form this engine builds);
        there each CZ(a, b) maps generator a -> X_a Z_b ... and b -> X_b
        Z_a ..., with no sign changes.
        """
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size == 0:
            return
        if self.x_words is not None:
            for a, b in edges:
                self.apply_cz(int(a), int(b))
            return
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        np.bitwise_xor.at(self.z_words, (rows, cols >> 6),
                          np.uint64(1) << (cols & 63).astype(np.uint64))

    def apply_cz(self, a: int, b: int) -> None:
        """General CZ update: z_a ^= x_b, z_b ^= x_a per row, and a sign
        flip for rows carrying X on both qubits with z_a != z_b."""
        if self.x_words is None:
            self.z_words[a, b >> 6] ^= np.uint64(1) << np.uint64(b & 63)
            self.z_words[b, a >> 6] ^= np.uint64(1) << np.uint64(a & 63)
            return
        wa, ba = a >> 6, np.uint64(a & 63)
        wb, bb = b >> 6, np.uint64(b & 63)
        xa = (self.x_words[:, wa] >> ba) & 1
        xb = (self.x_words[:, wb] >> bb) & 1
        za = (self.z_words[:, wa] >> ba) & 1
        zb = (self.z_words[:, wb] >> bb) & 1
        self.signs ^= (xa & xb & (za ^ zb)).astype(np.uint8)
        self.z_words[:, wa] ^= xb << ba
        self.z_words[:, wb] ^= xa << bb

    def generator_strings(self) -> list:
        """Readable dump, one signed Pauli string per generator (n <= 64)."""
        if self.n > 64:
            raise CapacityError("text dump is limited to 64 qubits")
        xs, zs = self.x_bits(), self.z_bits()
        out = []
        letters = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        for r in range(self.n):
            body = "".join(letters[(int(xs[r, q]), int(zs[r, q]))] for q in range(self.n))
            out.append(("-" if self.signs[r] else "+") + body)
        return out

    def mutually_commute(self) -> bool:
        xs = self.x_bits().astype(np.int64)
        zs = self.z_bits().astype(np.int64)
        sym = (xs @ zs.T + zs @ xs.T) % 2
        return not np.any(sym)

    def canonical(self) -> tuple:
        """Unique signed canonical basis of the stabilizer group.

        Full row reduction over GF(2) on the (X|Z) bits with exact sign
        tracking; two generating sets yield identical canonical forms iff
        they generate the same signed group.
        """
        if self.n > MATERIALIZE_LIMIT:
            raise CapacityError(
                f"canonical form is limited to {MATERIALIZE_LIMIT} qubits")
        mat = np.concatenate([self.x_bits(), self.z_bits()], axis=1).astype(np.uint8)
        signs = self.signs.astype(np.int64).copy()
        rows, cols = mat.shape
        n = self.n
        pivot = 0
        for col in range(cols):
            hits = np.nonzero(mat[pivot:, col])[0]
            if hits.size == 0:
                continue
            src = pivot + hits[0]
            if src != pivot:
                mat[[pivot, src]] = mat[[src, pivot]]
                signs[[pivot, src]] = signs[[src, pivot]]
            others = np.nonzero(mat[:, col])[0]
            for r in others:
                if r == pivot:
                    continue
                signs[r] = _product_sign(mat[pivot], signs[pivot],
                                         mat[r], signs[r], n)
                mat[r] ^= mat[pivot]
            pivot += 1
            if pivot == rows:
                break
        return mat.tobytes(), signs.astype(np.uint8).tobytes()


def _product_sign(row_a, sign_a, row_b, sign_b, n) -> int:
    """Sign bit of the Pauli product (row_a * row_b) for commuting rows."""
    x1, z1 = row_a[:n].astype(np.int64), row_a[n:].astype(np.int64)
    x2, z2 = row_b[:n].astype(np.int64), row_b[n:].astype(np.int64)
    g = np.zeros(n, dtype=np.int64)
    is_y = (x1 == 1) & (z1 == 1)
    is_x = (x1 == 1) & (z1 == 0)
    is_z = (x1 == 0) & (z1 == 1)
    g[is_y] = z2[is_y] - x2[is_y]
    g[is_x] = z2[is_x] * (2 * x2[is_x] - 1)
    g[is_z] = x2[is_z] * (1 - 2 * z2[is_z])
    exponent = (2 * sign_a + 2 * sign_b + int(g.sum())) % 4
    if exponent % 2:
        raise DomainError("product of anticommuting generators requested")
    return exponent // 2


def same_stabilizer_group(a: StabilizerTableau, b: StabilizerTableau) -> bool:
    return a.n == b.n and a.canonical() == b.canonical()


@dataclass(frozen=True)
class SiteLattice:
    """Simple-cubic site lattice (1D/2D/3D via unit dimensions)."""

    dims: tuple
    occupancy: np.ndarray
    boundary: str = "open"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise DomainError(f"dims must be three sizes >= 1, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        occ = np.asarray(self.occupancy, dtype=bool).reshape(-1)
        if occ.size != dims[0] * dims[1] * dims[2]:
            raise DomainError(
                f"occupancy length {occ.size} != lattice volume {np.prod(dims)}")
        if self.boundary not in ("open", "periodic"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "occupancy", occ)

    @classmethod
    def full(cls, dims, boundary: str = "open") -> "SiteLattice":
        dims = tuple(dims) + (1,) * (3 - len(tuple(dims)))
        return cls(dims, np.ones(int(np.prod(dims)), dtype=bool), boundary)

    @property
    def n_sites(self) -> int:
        return self.occupancy.size

    @property
    def n_occupied(self) -> int:
        return int(self.occupancy.sum())

    def axis_pairs(self, axis: str) -> np.ndarray:
        """Site-index pairs of nearest neighbours along an axis ('x','y','z')."""
        ax = "xyz".index(axis)
        lx, ly, lz = self.dims
        length = self.dims[ax]
        idx = np.arange(self.n_sites, dtype=np.int64).reshape(lz, ly, lx)
        stride = (1, lx, lx * ly)[ax]
        take = [slice(None)] * 3
        take[2 - ax] = slice(0, length - 1)
        src = idx[tuple(take)].reshape(-1)
        pairs = [np.column_stack([src, src + stride])] if length > 1 else []
        if self.boundary == "periodic" and length > 2:
            take[2 - ax] = slice(length - 1, length)
            last = idx[tuple(take)].reshape(-1)
            pairs.append(np.column_stack([last, last - (length - 1) * stride]))
        if not pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.concatenate(pairs, axis=0)


@dataclass(frozen=True)
class ClusterGraph:
    """Bond graph of the executed CZ layers over occupied sites."""

    sites: np.ndarray          # occupied site indices
    edges: np.ndarray          # (m, 2) qubit-rank pairs
    labels: np.ndarray         # component label per qubit

    @property
    def n_nodes(self) -> int:
        return self.sites.size


class DisjointSet:
    """Array union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return int(a)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def labels(self) -> np.ndarray:
        parent = self.parent
        # collapse every path so each node points directly at its root
        for a in range(len(parent)):
            root = a
            while parent[root] != root:
                root = parent[root]
            while parent[a] != root:
                parent[a], a = root, parent[a]
        return parent.copy()


def generate_cluster(lattice: SiteLattice, axes, *,
                     max_qubits: int = DEFAULT_MAX_QUBITS):
    """One CZ layer per axis over the occupied sites.

    Returns the stabilizer tableau (one generator per occupied site) and
    the executed bond graph with its connected components.
    """
    axes = tuple(axes)
    if not axes or any(a not in "xyz" for a in axes) or len(set(axes)) != len(axes):
        raise DomainError(f"axes must be a nonempty subset of x, y, z; got {axes!r}")
    n = lattice.n_occupied
    if n < 1:
        raise DomainError("lattice has no occupied sites")
    if n > max_qubits:
        raise CapacityError(f"{n} occupied sites exceeds the limit of {max_qubits}")

    rank = -np.ones(lattice.n_sites, dtype=np.int64)
    sites = np.nonzero(lattice.occupancy)[0]
    rank[sites] = np.arange(n)

    tableau = StabilizerTableau.plus_state(n, max_qubits=max_qubits)
    all_edges = []
    for axis in axes:
        pairs = lattice.axis_pairs(axis)
        if pairs.size == 0:
            continue
        keep = lattice.occupancy[pairs[:, 0]] & lattice.occupancy[pairs[:, 1]]
        bonds = rank[pairs[keep]]
        if bonds.size:
            tableau.apply_cz_layer(bonds)
            all_edges.append(bonds)

    edges = (np.concatenate(all_edges, axis=0) if all_edges
             else np.empty((0, 2), dtype=np.int64))
    dsu = DisjointSet(n)
    for a, b in edges:
        dsu.union(int(a), int(b))
    graph = ClusterGraph(sites=sites, edges=edges, labels=dsu.labels())
    return tableau, graph


def component_sizes(graph: ClusterGraph) -> np.ndarray:
    """Connected-component sizes (descending) over the occupied sites."""
    if graph.n_nodes == 0:
        return np.empty(0, dtype=np.int64)
    sizes = np.bincount(graph.labels)
    sizes = sizes[sizes > 0]
    return np.sort(sizes)[::-1]


def verify_generators(tableau: StabilizerTableau, lattice: SiteLattice, axes) -> bool:
    """Check that the tableau generates exactly the signed graph-state group
    of the bond graph implied by (lattice, axes)."""
    _, graph = generate_cluster(lattice, axes)
    expected = StabilizerTableau.graph_state(tableau.n, graph.edges)
    return same_stabilizer_group(tableau, expected)


def size_histogram_csv_lines(sizes) -> list:
    values, counts = np.unique(np.asarray(sizes, dtype=np.int64), return_counts=True)
    lines = ["size,count"]
    lines.extend(f"{int(v)},{int(c)}" for v, c in zip(values, counts))
    return lines
