"""Block partitions of {1,...,N} and the diagonal (Cartan) coordinate geometry.

Everything downstream is indexed by an ordered partition of {1,...,N} into
contiguous blocks.  Diagonal group elements are stored in logarithmic
coordinates: a "Cartan vector" is a length-N float vector with zero sum,
normed by the trace form (which restricts to the Euclidean norm on the
diagonal).  Indices are 0-based throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Partition",
    "make_partition",
    "require_horocycle_partition",
    "Cone",
    "cone_contains",
    "BlockDiagonalSplit",
    "block_split",
    "lambda_I",
    "rho_density",
    "v0",
    "p_norm",
    "p_norm_squared",
    "as_cartan",
]

TRACELESS_TOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Ordered partition of {0,...,n-1} into contiguous blocks.

    ``sizes`` are the block lengths in order.  Horocycle partitions need at
    least two blocks (a single block collapses the unipotent radical and
    the "horocycle" degenerates to a compact orbit); that floor is enforced
    by :func:`make_partition` and the counting entry points, while the bare
    type also admits the single-block coarse partitions produced by the
    limit classifier.
    """

    n: int
    sizes: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    block_of: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if not self.sizes or any(s <= 0 for s in self.sizes):
            raise ValueError(f"block sizes must be positive, got {self.sizes}")
        if sum(self.sizes) != self.n:
            raise ValueError(f"block sizes {self.sizes} do not sum to n={self.n}")
        blocks = []
        pos = 0
        for s in self.sizes:
            blocks.append(tuple(range(pos, pos + s)))
            pos += s
        object.__setattr__(self, "blocks", tuple(blocks))
        owner = [0] * self.n
        for k, blk in enumerate(blocks):
            for i in blk:
                owner[i] = k
        object.__setattr__(self, "block_of", tuple(owner))

    @property
    def k0(self) -> int:
        return len(self.sizes)

    def same_block(self, i: int, j: int) -> bool:
        return self.block_of[i] == self.block_of[j]

    def prefix(self, k: int) -> tuple[int, ...]:
        """Indices of the first k blocks (k = 1,...,k0)."""
        if not 1 <= k <= self.k0:
            raise ValueError(f"prefix index {k} out of range 1..{self.k0}")
        return tuple(range(sum(self.sizes[:k])))

    def intra_pairs(self) -> list[tuple[int, int]]:
        """All (i, j), i < j, with i and j in the same block."""
        out = []
        for blk in self.blocks:
            for a in range(len(blk)):
                for b in range(a + 1, len(blk)):
                    out.append((blk[a], blk[b]))
        return out

    def cross_pairs(self) -> list[tuple[int, int]]:
        """All (i, j), i < j, with i and j in different blocks."""
        return [
            (i, j)
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if not self.same_block(i, j)
        ]

    def to_json(self) -> str:
        """Serialize as the JSON array of block sizes, e.g. ``[2,1]``."""
        return json.dumps(list(self.sizes))

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        sizes = json.loads(text)
        return make_partition(sum(sizes), sizes)


def make_partition(n: int, block_sizes: Sequence[int]) -> Partition:
    """Contiguous ordered partition of {0,...,n-1} with the given block sizes.

    Rejects single-block input: with a trivial unipotent radical there is
    no horocycle to count.
    """
    sizes = tuple(int(s) for s in block_sizes)
    if len(sizes) < 2:
        raise ValueError(
            "need at least two blocks: a single-block partition has a "
            "trivial unipotent radical and no horocycle to count"
        )
    return Partition(n=n, sizes=sizes)


def require_horocycle_partition(partition: Partition) -> Partition:
    """Guard for counting entry points: at least two blocks."""
    if partition.k0 < 2:
        raise ValueError("counting requires a partition with at least two blocks")
    return partition


def as_cartan(entries: Iterable[float], tol: float = 1e-9) -> np.ndarray:
    """Validate and return a traceless diagonal (Cartan) vector."""
    y = np.asarray(list(entries) if not isinstance(entries, np.ndarray) else entries,
                   dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("Cartan vector must be one-dimensional")
    s = float(y.sum())
    if abs(s) > tol * max(1.0, float(np.abs(y).max(initial=0.0))):
        raise ValueError(f"entries must sum to 0 (trace constraint), got sum {s}")
    return y


def lambda_I(a: Sequence[float], indices: Iterable[int], *, log: bool = False) -> float:
    """Product of the diagonal entries of ``a`` over ``indices``.

    With ``log=True`` the input is a Cartan (logarithmic) vector and the
    result is exp of the partial sum.  The empty product is 1.
    """
    a = np.asarray(a, dtype=float)
    idx = list(indices)
    if any(i < 0 or i >= a.shape[0] for i in idx):
        raise IndexError(f"index set {idx} out of range for dimension {a.shape[0]}")
    if log:
        return float(math.exp(a[idx].sum())) if idx else 1.0
    return float(np.prod(a[idx])) if idx else 1.0


@dataclass(frozen=True)
class BlockDiagonalSplit:
    """Orthogonal splitting y = aM + aZ of a Cartan vector.

    ``aM`` has zero sum within every block; ``aZ`` is constant within every
    block.  The two pieces are trace-form orthogonal and recover y uniquely.
    """

    aM: np.ndarray
    aZ: np.ndarray

    def join(self) -> np.ndarray:
        return self.aM + self.aZ


def block_split(partition: Partition, y: Sequence[float]) -> BlockDiagonalSplit:
    """Split a Cartan vector into its block-traceless and block-scalar parts."""
    y = np.asarray(y, dtype=float)
    if y.shape != (partition.n,):
        raise ValueError(f"vector has shape {y.shape}, expected ({partition.n},)")
    aZ = np.empty_like(y)
    for blk in partition.blocks:
        idx = list(blk)
        aZ[idx] = y[idx].mean()
    return BlockDiagonalSplit(aM=y - aZ, aZ=aZ)


@dataclass(frozen=True)
class Cone:
    """Offset cone C_C attached to a partition.

    Membership: within every block, y_i - y_j >= max(0, C) for i < j, and
    every proper prefix sum of y over whole blocks is >= C.  C = 0 is the
    positive cone; for C <= 0 the cone is a translate of the positive cone.
    """

    partition: Partition
    offset: float = 0.0

    def contains(self, y: Sequence[float], tol: float = 1e-12) -> bool:
        return cone_contains(self, y, tol=tol)


def cone_contains(cone: Cone, y: Sequence[float], tol: float = 1e-12) -> bool:
    y = np.asarray(y, dtype=float)
    part = cone.partition
    if y.shape != (part.n,):
        raise ValueError(f"vector has shape {y.shape}, expected ({part.n},)")
    c = cone.offset
    intra_floor = max(0.0, c)
    for i, j in part.intra_pairs():
        if y[i] - y[j] < intra_floor - tol:
            return False
    for k in range(1, part.k0):
        if y[list(part.prefix(k))].sum() < c - tol:
            return False
    return True


def rho_density(partition: Partition, a: Sequence[float], b: Sequence[float],
                tol: float = 1e-12) -> float:
    """Haar density factor rho(a, b) in logarithmic coordinates.

    ``a`` is a block-traceless vector in the closed positive chamber
    (weakly decreasing within every block); ``b`` is block-scalar.  The
    value is the product of sinh(a_i - a_j) over intra-block pairs i < j
    times exp of the sum of b_i - b_j over cross-block pairs.  Chamber
    walls give 0; a strictly negative intra-block difference is rejected.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (partition.n,) or b.shape != (partition.n,):
        raise ValueError("a and b must be length-n vectors")
    value = 1.0
    for i, j in partition.intra_pairs():
        d = a[i] - a[j]
        if d < -tol:
            raise ValueError(
                f"a is outside the closed positive chamber: a[{i}]-a[{j}] = {d}"
            )
        value *= math.sinh(max(d, 0.0))
    cross = sum(b[i] - b[j] for i, j in partition.cross_pairs())
    return value * math.exp(cross)


def v0(n: int) -> np.ndarray:
    """The sum-of-positive-roots vector diag(N-1, N-3, ..., -N+1)."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return np.array([n - 2 * i - 1 for i in range(n)], dtype=float)


def p_norm_squared(n: int) -> int:
    """Exact integer value of ||v0||^2 = N(N-1)(N+1)/3."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    prod = n * (n - 1) * (n + 1)
    assert prod % 3 == 0
    return prod // 3


def p_norm(n: int) -> float:
    """||v0|| in the trace form; the exponential growth rate of the count."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return math.sqrt(p_norm_squared(n))
