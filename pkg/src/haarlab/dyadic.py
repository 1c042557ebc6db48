"""Dyadic cube combinatorics.

Cubes are half-open: level N, multi-index nu denotes 2^-N (nu + [0,1)^d).
Level -1 is allowed only as the parent of a level-0 cube.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: tuple
    dimension: int

    def __post_init__(self):
        if self.level < -1:
            raise ValueError("level must be >= -1")
        if len(self.index) != self.dimension:
            raise ValueError("index length must equal dimension")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    def lower(self) -> np.ndarray:
        return np.array(self.index, dtype=float) * self.side

    def upper(self) -> np.ndarray:
        return (np.array(self.index, dtype=float) + 1.0) * self.side

    def center(self) -> np.ndarray:
        return (np.array(self.index, dtype=float) + 0.5) * self.side

    def contains(self, x) -> bool:
        """Half-open membership test."""
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower()) and np.all(x < self.upper()))

    def closure_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower()) and np.all(x <= self.upper()))


def cube(level: int, *index) -> DyadicCube:
    if len(index) == 1 and isinstance(index[0], (tuple, list)):
        index = tuple(index[0])
    return DyadicCube(level, tuple(int(i) for i in index), len(index))


def parent(I: DyadicCube) -> DyadicCube:
    if I.level < 0:
        raise ValueError("level -1 cubes have no parent here")
    idx = tuple(i // 2 for i in I.index)  # floor division, exact for negatives
    return DyadicCube(I.level - 1, idx, I.dimension)


def children(I: DyadicCube) -> list:
    """The 2^d level-(N+1) children, in lexicographic index order."""
    if I.level < 0:
        raise ValueError("children require level >= 0")
    out = []
    for offs in product((0, 1), repeat=I.dimension):
        idx = tuple(2 * i + o for i, o in zip(I.index, offs))
        out.append(DyadicCube(I.level + 1, idx, I.dimension))
    out.sort(key=lambda c: c.index)
    return out


def omega_child(I: DyadicCube) -> DyadicCube:
    """The unique child whose closure contains the center of parent(I).

    Writing nu_i = 2 p_i + r_i with r_i in {0,1}, that child has offset
    e_i = 1 - r_i.
    """
    if I.level < 0:
        raise ValueError("omega_child requires level >= 0")
    idx = tuple(2 * i + (1 - (i & 1)) for i in I.index)
    return DyadicCube(I.level + 1, idx, I.dimension)


def neighbor_cubes(I: DyadicCube) -> list:
    """All 3^d same-level cubes whose closure meets closure(I), incl. I."""
    if I.level < 0:
        raise ValueError("neighbor_cubes requires level >= 0")
    out = []
    for offs in product((-1, 0, 1), repeat=I.dimension):
        idx = tuple(i + o for i, o in zip(I.index, offs))
        out.append(DyadicCube(I.level, idx, I.dimension))
    return out


def boundary_shell(I: DyadicCube, ell: int) -> list:
    """All level-ell cubes J with closure(J) meeting the boundary of I.

    Candidates are drawn from the integer bounding box of I at level ell,
    expanded by one cell; uses exact integer arithmetic.
    """
    if ell <= I.level:
        raise ValueError("boundary_shell requires ell > I.level")
    m = ell - I.level
    scale = 1 << m  # level-ell cells per side of I
    out = []
    lo = [i * scale - 1 for i in I.index]
    hi = [(i + 1) * scale for i in I.index]  # inclusive
    for idx in product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        if _closure_meets_boundary(idx, I.index, m):
            out.append(DyadicCube(ell, tuple(idx), I.dimension))
    return out


def _closure_meets_boundary(j_idx, i_idx, m: int) -> bool:
    """closure(J) meets the topological boundary of I (integer arithmetic).

    In level-ell units, I spans [a_i, a_i + 2^m] per axis and closure(J)
    spans [j_i, j_i + 1].  Their intersection meets the boundary of I iff
    the closures intersect while J's closure is not contained in int(I).
    """
    scale = 1 << m
    inter_lo, inter_hi = [], []
    for j, a in zip(j_idx, i_idx):
        lo = max(j, a * scale)
        hi = min(j + 1, (a + 1) * scale)
        if lo > hi:
            return False
        inter_lo.append(lo)
        inter_hi.append(hi)
    # The intersection is a (possibly degenerate) box; it meets the boundary
    # of I iff it touches a face of I in some axis.
    for lo, hi, a in zip(inter_lo, inter_hi, i_idx):
        if lo == a * scale or hi == (a + 1) * scale:
            return True
    return False


def dist_to_boundary(x, I: DyadicCube) -> float:
    """sup-metric distance from x to the boundary of I."""
    x = np.asarray(x, dtype=float)
    lo, hi = I.lower(), I.upper()
    inside = np.all(x >= lo) and np.all(x <= hi)
    if inside:
        return float(np.minimum(x - lo, hi - x).min())
    # distance to the closed box equals distance to the boundary when outside
    gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
    return float(gap.max())


def in_u_set(N: int, k: int, x, d: int) -> bool:
    """Membership in the near-grid set: min_i dist(x_i, 2^-N Z) <= 2^-(k+1)."""
    if not k > N or N < 0:
        raise ValueError("in_u_set requires k > N >= 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != d:
        raise ValueError("point dimension mismatch")
    grid = 2.0**-N
    frac = np.abs(x / grid - np.round(x / grid)) * grid
    return bool(frac.min() <= 2.0 ** (-k - 1))


def u_set_mask(N: int, k: int, axes: list, inflate: float = 0.0) -> np.ndarray:
    """Boolean mask of the near-grid set on broadcast coordinate arrays.

    inflate widens the threshold (used to absorb one grid cell of slack).
    """
    thr = 2.0 ** (-k - 1) + inflate
    grid = 2.0**-N
    mask = None
    for ax in axes:
        frac = np.abs(ax / grid - np.round(ax / grid)) * grid
        m = frac <= thr
        mask = m if mask is None else (mask | m)
    return np.broadcast_to(mask, np.broadcast_shapes(*[a.shape for a in axes]))
