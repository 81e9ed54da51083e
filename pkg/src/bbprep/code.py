"""GF(2) linear algebra and bivariate-bicycle CSS codes.

Matrices used during code construction are small (a few hundred columns), so
they are stored densely with rows packed into ``uint64`` words.  Decoding
works on sparse adjacency lists instead; see :mod:`bbprep.dem`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

_WORD = 64


class BitMatrix:
    """Dense GF(2) matrix with each row packed into 64-bit words.

    Bit ``j`` of a row lives in word ``j // 64`` at position ``j % 64``.
    Instances are treated as immutable; every operation returns a new matrix.
    """

    __slots__ = ("rows", "cols", "bits")

    def __init__(self, rows: int, cols: int, bits: np.ndarray | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        n_words = max(1, -(-self.cols // _WORD))
        if bits is None:
            bits = np.zeros((self.rows, n_words), dtype=np.uint64)
        if bits.shape != (self.rows, n_words) or bits.dtype != np.uint64:
            raise ValueError(f"bits must be uint64 of shape {(self.rows, n_words)}")
        self.bits = bits

    @classmethod
    def from_dense(cls, dense) -> BitMatrix:
        arr = np.asarray(dense)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        rows, cols = arr.shape
        return cls(rows, cols, _pack(arr.astype(np.uint8) & 1))

    @classmethod
    def identity(cls, size: int) -> BitMatrix:
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols)

    def to_dense(self) -> np.ndarray:
        return _unpack(self.bits, self.cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            prod = self.to_dense().astype(np.int64) @ other.to_dense().astype(np.int64)
            return BitMatrix.from_dense(prod & 1)
        vec = np.asarray(other, dtype=np.int64)
        if vec.shape != (self.cols,):
            raise ValueError(f"vector length {vec.shape} does not match {self.cols} columns")
        return ((self.to_dense().astype(np.int64) @ vec) & 1).astype(np.uint8)

    def __add__(self, other: BitMatrix) -> BitMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.bits ^ other.bits)

    def __pow__(self, exponent: int) -> BitMatrix:
        if self.rows != self.cols:
            raise ValueError("power of a non-square matrix")
        result = BitMatrix.identity(self.rows)
        base = self
        e = int(exponent)
        while e:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.rows, self.cols, self.bits.tobytes()))

    def is_zero(self) -> bool:
        return not self.bits.any()

    def row_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=1)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0)

    def hstack(self, other: BitMatrix) -> BitMatrix:
        return BitMatrix.from_dense(np.hstack([self.to_dense(), other.to_dense()]))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def _pack(dense: np.ndarray) -> np.ndarray:
    rows, cols = dense.shape
    n_words = max(1, -(-cols // _WORD))
    padded = np.zeros((rows, n_words * _WORD), dtype=np.uint8)
    padded[:, :cols] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64).reshape(rows, n_words)


def _unpack(bits: np.ndarray, cols: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(bits.astype("<u8")).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols]


def _eliminate(bits: np.ndarray, cols: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Reduced row echelon form of packed rows.

    Pivot columns are scanned left to right; within a column the first
    remaining row holding a one becomes the pivot.
    """
    work = bits.copy()
    n_rows = work.shape[0]
    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(cols):
        if r == n_rows:
            break
        w, b = divmod(c, _WORD)
        mask = np.uint64(1) << np.uint64(b)
        col_set = (work[r:, w] & mask) != 0
        hits = np.flatnonzero(col_set)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        others = np.flatnonzero((work[:, w] & mask) != 0)
        others = others[others != r]
        if others.size:
            work[others] ^= work[r]
        pivots.append((r, c))
        r += 1
    return work, pivots


def gf2_rank(mat: BitMatrix) -> int:
    """Rank of ``mat`` over GF(2)."""
    if mat.rows == 0 or mat.cols == 0:
        return 0
    _, pivots = _eliminate(mat.bits, mat.cols)
    return len(pivots)


def gf2_solve(mat: BitMatrix, rhs) -> np.ndarray | None:
    """Return some ``v`` with ``mat @ v == rhs`` over GF(2), or ``None``.

    Free variables are set to zero.
    """
    rhs = np.asarray(rhs, dtype=np.uint8) & 1
    if rhs.shape != (mat.rows,):
        raise ValueError(f"rhs length {rhs.shape} does not match {mat.rows} rows")
    augmented = BitMatrix.from_dense(np.hstack([mat.to_dense(), rhs[:, None]]))
    reduced, pivots = _eliminate(augmented.bits, augmented.cols)
    if any(c == mat.cols for _, c in pivots):
        return None
    dense = _unpack(reduced, augmented.cols)
    solution = np.zeros(mat.cols, dtype=np.uint8)
    for r, c in pivots:
        solution[c] = dense[r, mat.cols]
    return solution


def gf2_nullspace(mat: BitMatrix) -> BitMatrix:
    """Basis of ``{v : mat @ v = 0}``, one basis vector per row."""
    reduced, pivots = _eliminate(mat.bits, mat.cols)
    dense = _unpack(reduced, mat.cols)
    pivot_cols = [c for _, c in pivots]
    free = [c for c in range(mat.cols) if c not in set(pivot_cols)]
    basis = np.zeros((len(free), mat.cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, c in pivots:
            basis[i, c] = dense[r, f]
    return BitMatrix.from_dense(basis.reshape(len(free), mat.cols))


def gf2_row_basis(mat: BitMatrix) -> BitMatrix:
    reduced, pivots = _eliminate(mat.bits, mat.cols)
    return BitMatrix(len(pivots), mat.cols, reduced[: len(pivots)].copy())


# --------------------------------------------------------------------------
# Bivariate-bicycle codes


def shift_matrices(l: int, m: int) -> tuple[BitMatrix, BitMatrix]:
    """Generators ``x = S_l (x) I_m`` and ``y = I_l (x) S_m`` of the BB algebra."""
    if l < 1 or m < 1:
        raise ValueError("l and m must be positive")
    s_l = np.roll(np.eye(l, dtype=np.uint8), 1, axis=1)
    s_m = np.roll(np.eye(m, dtype=np.uint8), 1, axis=1)
    x = np.kron(s_l, np.eye(m, dtype=np.uint8))
    y = np.kron(np.eye(l, dtype=np.uint8), s_m)
    return BitMatrix.from_dense(x), BitMatrix.from_dense(y)


@dataclass(frozen=True)
class BbSpec:
    """Bivariate-bicycle code ``A = sum x^i y^j`` over ``a_terms``, likewise ``B``.

    ``z_schedule`` lists, for each CNOT layer of a Z check, which of its six
    neighbours is coupled: indices 0-2 are the ``B^T`` (left) terms in order,
    3-5 the ``A^T`` (right) terms.  ``x_schedule`` does the same for X checks
    (0-2 the ``A`` terms on left qubits, 3-5 the ``B`` terms on right qubits).
    """

    l: int
    m: int
    a_terms: tuple[tuple[int, int], ...]
    b_terms: tuple[tuple[int, int], ...]
    name: str = ""
    distance: int | None = None
    z_schedule: tuple[int, ...] | None = None
    x_schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise ValueError("l and m must be positive")
        for label in ("a_terms", "b_terms"):
            terms = tuple((int(i) % self.l, int(j) % self.m) for i, j in getattr(self, label))
            if not terms:
                raise ValueError(f"{label} is empty")
            object.__setattr__(self, label, terms)
        for label in ("z_schedule", "x_schedule"):
            sched = getattr(self, label)
            if sched is not None:
                sched = tuple(int(s) for s in sched)
                n_nbrs = len(self.a_terms) + len(self.b_terms)
                if sorted(sched) != list(range(n_nbrs)):
                    raise ValueError(f"{label} must be a permutation of 0..{n_nbrs - 1}")
                object.__setattr__(self, label, sched)

    @classmethod
    def from_dict(cls, data: dict) -> BbSpec:
        return cls(
            l=int(data["l"]),
            m=int(data["m"]),
            a_terms=tuple(tuple(t) for t in data["a_terms"]),
            b_terms=tuple(tuple(t) for t in data["b_terms"]),
            name=str(data.get("name", "")),
            distance=data.get("distance"),
            z_schedule=tuple(data["z_schedule"]) if data.get("z_schedule") is not None else None,
            x_schedule=tuple(data["x_schedule"]) if data.get("x_schedule") is not None else None,
        )

    def to_dict(self) -> dict:
        out = {
            "l": self.l,
            "m": self.m,
            "a_terms": [list(t) for t in self.a_terms],
            "b_terms": [list(t) for t in self.b_terms],
        }
        if self.name:
            out["name"] = self.name
        if self.distance is not None:
            out["distance"] = self.distance
        if self.z_schedule is not None:
            out["z_schedule"] = list(self.z_schedule)
        if self.x_schedule is not None:
            out["x_schedule"] = list(self.x_schedule)
        return out


def load_spec(path: str | Path) -> BbSpec:
    """Read a code spec file ``{l, m, a_terms, b_terms, ...}`` (JSON)."""
    with open(path) as fh:
        return BbSpec.from_dict(json.load(fh))


# Schedules below are the depth-8 interleaved cycle of the original BB-code
# construction: Z checks couple neighbours 3,5,0,1,2,4 in rounds 0-5, X checks
# couple 1,4,3,5,0,2 in rounds 1-6.
IBM_Z_SCHEDULE = (3, 5, 0, 1, 2, 4)
IBM_X_SCHEDULE = (1, 4, 3, 5, 0, 2)
# Z-only circuits: right neighbours (A terms) first, then left (B terms).
AB_Z_SCHEDULE = (3, 4, 5, 0, 1, 2)

# The l=m=6 weight-6 pair x^3+y+y^2, y^3+x+x^2 yields k=12; this pair yields
# k=8 and a randomized information-set search finds no logical below weight 6.
BB_72 = BbSpec(6, 6, ((1, 0), (0, 3), (0, 4)), ((0, 1), (3, 0), (4, 0)), "[[72,8,6]]", 6)
BB_90 = BbSpec(15, 3, ((9, 0), (0, 1), (0, 2)), ((0, 0), (2, 0), (7, 0)), "[[90,8,10]]", 10)
BB_144 = BbSpec(12, 6, ((3, 0), (0, 1), (0, 2)), ((0, 3), (1, 0), (2, 0)), "[[144,12,12]]", 12)
BB_CODES = {"72": BB_72, "90": BB_90, "144": BB_144}


@dataclass(frozen=True, eq=False)
class CssCode:
    h_x: BitMatrix
    h_z: BitMatrix
    n_data: int
    k: int
    z_check_adjacency: tuple[tuple[int, ...], ...]
    data_adjacency_z: tuple[tuple[int, ...], ...]
    x_check_adjacency: tuple[tuple[int, ...], ...] = ()
    logical_z: BitMatrix | None = None
    spec: BbSpec | None = None
    name: str = ""
    distance: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_z_checks(self) -> int:
        return self.h_z.rows

    @property
    def n_x_checks(self) -> int:
        return self.h_x.rows

    @property
    def label(self) -> str:
        d = self.distance if self.distance is not None else "?"
        return self.name or f"[[{self.n_data},{self.k},{d}]]"


def _monomial(x: BitMatrix, y: BitMatrix, i: int, j: int) -> np.ndarray:
    return (x ** i @ y ** j).to_dense()


def _neighbour(perm: np.ndarray, row: int) -> int:
    return int(np.flatnonzero(perm[row])[0])


def build_bb(spec: BbSpec) -> CssCode:
    """Construct ``h_x = [A | B]`` and ``h_z = [B^T | A^T]`` for a BB spec.

    Z-check adjacency is ordered by neighbour direction: the left qubits from
    ``B^T`` terms, then the right qubits from ``A^T`` terms.  X-check adjacency
    lists the ``A`` terms (left) then the ``B`` terms (right).
    """
    x, y = shift_matrices(spec.l, spec.m)
    a_mono = [_monomial(x, y, i, j) for i, j in spec.a_terms]
    b_mono = [_monomial(x, y, i, j) for i, j in spec.b_terms]
    a = np.bitwise_xor.reduce(a_mono, axis=0)
    b = np.bitwise_xor.reduce(b_mono, axis=0)
    h_x = BitMatrix.from_dense(np.hstack([a, b]))
    h_z = BitMatrix.from_dense(np.hstack([b.T, a.T]))
    if not (h_x @ h_z.T).is_zero():
        raise ValueError("h_x h_z^T != 0: spec does not define a CSS code")

    half = spec.l * spec.m
    z_adj = []
    for c in range(half):
        nbrs = [_neighbour(bm.T, c) for bm in b_mono] + [half + _neighbour(am.T, c) for am in a_mono]
        z_adj.append(tuple(nbrs))
    x_adj = []
    for c in range(half):
        nbrs = [_neighbour(am, c) for am in a_mono] + [half + _neighbour(bm, c) for bm in b_mono]
        x_adj.append(tuple(nbrs))

    return make_css(h_x, h_z, z_adj, x_adj, spec=spec, name=spec.name, distance=spec.distance)


def make_css(
    h_x: BitMatrix,
    h_z: BitMatrix,
    z_adjacency: Sequence[Sequence[int]] | None = None,
    x_adjacency: Sequence[Sequence[int]] | None = None,
    **kwargs,
) -> CssCode:
    """Assemble a :class:`CssCode` from check matrices (any CSS code)."""
    if h_x.cols != h_z.cols:
        raise ValueError("h_x and h_z act on different numbers of qubits")
    if not (h_x @ h_z.T).is_zero():
        raise ValueError("h_x h_z^T != 0")
    n = h_z.cols
    dz = h_z.to_dense()
    if z_adjacency is None:
        z_adjacency = [np.flatnonzero(row).tolist() for row in dz]
    if x_adjacency is None:
        x_adjacency = [np.flatnonzero(row).tolist() for row in h_x.to_dense()]
    data_adj: list[list[int]] = [[] for _ in range(n)]
    for c, nbrs in enumerate(z_adjacency):
        for q in nbrs:
            data_adj[q].append(c)
    k = n - gf2_rank(h_x) - gf2_rank(h_z)
    return CssCode(
        h_x=h_x,
        h_z=h_z,
        n_data=n,
        k=k,
        z_check_adjacency=tuple(tuple(int(q) for q in a) for a in z_adjacency),
        data_adjacency_z=tuple(tuple(sorted(a)) for a in data_adj),
        x_check_adjacency=tuple(tuple(int(q) for q in a) for a in x_adjacency),
        logical_z=logical_z_basis(h_x, h_z),
        **kwargs,
    )


def logical_z_basis(h_x: BitMatrix, h_z: BitMatrix) -> BitMatrix:
    """Independent Z-type logicals: ``ker(h_x)`` modulo ``rowspace(h_z)``.

    Returns ``k`` rows; an X-type residual error flips logical ``i`` iff it
    overlaps row ``i`` an odd number of times.
    """
    kernel = gf2_nullspace(h_x).to_dense()
    stabs = gf2_row_basis(h_z).to_dense()
    chosen: list[np.ndarray] = []
    rank = stabs.shape[0]
    for vec in kernel:
        trial = np.vstack([stabs] + chosen + [vec[None, :]]) if chosen else np.vstack([stabs, vec[None, :]])
        if gf2_rank(BitMatrix.from_dense(trial)) > rank:
            chosen.append(vec[None, :])
            rank += 1
    if not chosen:
        return BitMatrix.zeros(0, h_x.cols)
    return BitMatrix.from_dense(np.vstack(chosen))
