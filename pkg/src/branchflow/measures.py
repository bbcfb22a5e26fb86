"""Atomic measures and axis-aligned boxes.

An atomic measure is a finite set of point masses sum(m_i * delta_{x_i}) with
pairwise distinct points and strictly positive masses.  Boxes are half-open
[lo, hi) per axis, except axes explicitly flagged closed on the upper face
(the outermost faces of a bounding cube), so that splitting a box partitions
its atoms exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True)
class Violation:
    kind: str  # "duplicate_point" | "nonpositive_mass" | "nonfinite_coordinate"
    index: int
    detail: str


@dataclass(frozen=True)
class Cube:
    """Axis-aligned box; upper faces are open unless flagged in closed_hi."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    closed_hi: tuple[bool, ...]

    @classmethod
    def from_bounds(cls, lo, hi, closed_hi=None) -> "Cube":
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if closed_hi is None:
            closed_hi = tuple(True for _ in lo)
        return cls(lo, hi, tuple(bool(c) for c in closed_hi))

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    @property
    def side(self) -> float:
        return max(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        for x, lo, hi, closed in zip(p, self.lo, self.hi, self.closed_hi):
            if x < lo:
                return False
            if x > hi or (x == hi and not closed):
                return False
        return True

    def split(self, lam: int) -> list["Cube"]:
        """Partition into lam**d boxes of equal side.

        Interior faces are half-open; each outermost child face reuses the
        parent bound and closed flag, so child membership partitions parent
        membership exactly (no atom lost or duplicated at cell boundaries).
        """
        d = self.dimension
        axes = []
        for a in range(d):
            lo, hi = self.lo[a], self.hi[a]
            h = (hi - lo) / lam
            cuts = [lo + j * h for j in range(lam)] + [hi]
            axes.append(cuts)
        cells = []
        for idx in np.ndindex(*([lam] * d)):
            lo = tuple(axes[a][idx[a]] for a in range(d))
            hi = tuple(axes[a][idx[a] + 1] for a in range(d))
            closed = tuple(
                self.closed_hi[a] if idx[a] == lam - 1 else False for a in range(d)
            )
            cells.append(Cube(lo, hi, closed))
        return cells


class AtomicMeasure:
    """Immutable finite collection of weighted points."""

    __slots__ = ("points", "masses")

    def __init__(self, points, masses):
        pts = np.array(points, dtype=float)
        ms = np.array(masses, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if ms.shape != (pts.shape[0],):
            raise ValueError("masses must be a length-n vector")
        pts.setflags(write=False)
        ms.setflags(write=False)
        self.points = pts
        self.masses = ms

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple]) -> "AtomicMeasure":
        atoms = list(atoms)
        if not atoms:
            raise ValueError("measure needs at least one atom")
        points = [a[0] for a in atoms]
        masses = [a[1] for a in atoms]
        return cls(points, masses)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def atoms(self) -> Iterator[tuple[np.ndarray, float]]:
        for i in range(self.n):
            yield self.points[i], float(self.masses[i])

    def validate(self) -> list[Violation]:
        out: list[Violation] = []
        for i in range(self.n):
            if not np.all(np.isfinite(self.points[i])):
                out.append(Violation("nonfinite_coordinate", i, f"point {self.points[i]}"))
            if not np.isfinite(self.masses[i]) or self.masses[i] <= 0:
                out.append(Violation("nonpositive_mass", i, f"mass {self.masses[i]}"))
        seen: dict[tuple, int] = {}
        for i in range(self.n):
            key = tuple(self.points[i].tolist())
            if key in seen:
                out.append(Violation("duplicate_point", i, f"same point as atom {seen[key]}"))
            else:
                seen[key] = i
        return out

    def restrict(self, cube: Cube) -> "AtomicMeasure":
        """Sub-measure of atoms inside the box; may be empty."""
        if self.n == 0:
            return self
        mask = np.array([cube.contains(self.points[i]) for i in range(self.n)])
        return AtomicMeasure(self.points[mask].copy(), self.masses[mask].copy())

    def is_empty(self) -> bool:
        return self.n == 0

    def __repr__(self) -> str:
        return f"AtomicMeasure(n={self.n}, total={self.total_mass():g})"


def bounding_cube(points: np.ndarray, inflate: float = 0.01) -> Cube:
    """Smallest axis-aligned cube containing the points, inflated slightly.

    Equal side on every axis (centered on the data), upper faces closed.
    A degenerate point set (single point) gets unit side.
    """
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    side = float((hi - lo).max())
    if side <= 0.0:
        side = 1.0
    side *= 1.0 + inflate
    center = (lo + hi) / 2.0
    return Cube.from_bounds(center - side / 2.0, center + side / 2.0)


def diameter(points: np.ndarray) -> float:
    """Diagonal length of the axis-aligned bounding box of the points."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    span = pts.max(axis=0) - pts.min(axis=0)
    return float(np.sqrt(np.sum(span * span)))
