"""Half-space grids, phase fields, region masks and the even reflection.

Nodes live on a uniform lattice inside the closed half-space {x_n >= 0};
the last array axis is always the normal direction x_n, and index 0 along
it is the bottom face (the trace) when the box touches x_n = 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class HalfSpaceGrid:
    dim: int
    h: float
    counts: tuple[int, ...]
    origin_offset: tuple[float, ...] = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.h > 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != self.dim or min(counts) < 2:
            raise ValueError(f"need {self.dim} axes with >= 2 nodes, got {counts}")
        offset = self.origin_offset
        offset = (0.0,) * self.dim if offset is None else tuple(float(o) for o in offset)
        if len(offset) != self.dim:
            raise ValueError("origin_offset has the wrong length")
        if offset[-1] < 0:
            raise ValueError("box must lie in the closed half-space x_n >= 0")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "origin_offset", offset)

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float], h: float):
        """Grid with nodes from `lower` to `upper` (rounded to whole cells)."""
        lower = [float(a) for a in lower]
        counts = [int(round((b - a) / h)) + 1 for a, b in zip(lower, upper)]
        return cls(len(lower), h, tuple(counts), tuple(lower))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(c - 1 for c in self.counts)

    @property
    def on_trace(self) -> bool:
        return self.origin_offset[-1] == 0.0

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + (c - 1) * self.h for o, c in zip(self.origin_offset, self.counts))

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(c) for o, c in zip(self.origin_offset, self.counts)]

    def cell_axes(self) -> list[np.ndarray]:
        return [o + self.h * (np.arange(c - 1) + 0.5) for o, c in zip(self.origin_offset, self.counts)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape counts + (dim,)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def cell_centers(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.cell_axes(), indexing="ij"), axis=-1)

    def face_nodes(self, face: str) -> np.ndarray:
        """Boolean node mask of a named box face.

        Faces are ``low<i>``/``high<i>`` for axis i, with aliases ``left``/``right``
        (axis 0), ``front``/``back`` (axis 1 when dim == 3), ``bottom``/``top``
        (the normal axis).
        """
        aliases = {"left": "low0", "right": "high0", "bottom": f"low{self.dim - 1}",
                   "top": f"high{self.dim - 1}"}
        if self.dim == 3:
            aliases.update(front="low1", back="high1")
        name = aliases.get(face, face)
        if name.startswith("low"):
            axis, index = int(name[3:]), 0
        elif name.startswith("high"):
            axis, index = int(name[4:]), -1
        else:
            raise ValueError(f"unknown face {face!r}")
        if not 0 <= axis < self.dim:
            raise ValueError(f"unknown face {face!r}")
        mask = np.zeros(self.counts, dtype=bool)
        sl = [slice(None)] * self.dim
        sl[axis] = index
        mask[tuple(sl)] = True
        return mask

    def to_text(self) -> str:
        return "\n".join([
            f"dim={self.dim}",
            f"h={self.h!r}",
            "counts=" + ",".join(str(c) for c in self.counts),
            "origin_offset=" + ",".join(repr(o) for o in self.origin_offset),
        ]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HalfSpaceGrid":
        kv = dict(line.split("=", 1) for line in text.split() if "=" in line)
        return cls(int(kv["dim"]), float(kv["h"]),
                   tuple(int(c) for c in kv["counts"].split(",")),
                   tuple(float(o) for o in kv["origin_offset"].split(",")))


@dataclass
class ScalarField:
    grid: HalfSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field has non-finite values")
        if values.min() < -1.0 or values.max() > 1.0:
            raise ValueError("field values must lie in [-1, 1]")
        self.values = values

    @classmethod
    def constant(cls, grid: HalfSpaceGrid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: HalfSpaceGrid, fn) -> "ScalarField":
        """Sample `fn` (mapping coordinate array (..., dim) to values) at the nodes."""
        return cls(grid, np.clip(fn(grid.coords()), -1.0, 1.0))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def cell_average(self) -> np.ndarray:
        return cell_average(self.values)

    def to_csv(self) -> str:
        g = self.grid
        header = (f"# dim={g.dim} h={g.h!r} counts=" + ",".join(map(str, g.counts))
                  + " origin_offset=" + ",".join(repr(o) for o in g.origin_offset))
        cols = ",".join(f"x{i + 1}" for i in range(g.dim)) + ",u"
        xs = g.coords().reshape(-1, g.dim)
        lines = [header, cols]
        for x, u in zip(xs, self.values.ravel()):
            lines.append(",".join(repr(float(c)) for c in x) + "," + repr(float(u)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ScalarField":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("field dump must start with a '# dim=... h=...' header")
        grid = HalfSpaceGrid.from_text(lines[0][1:])
        data = np.loadtxt(lines[2:], delimiter=",", ndmin=2)
        return cls(grid, data[:, -1].reshape(grid.shape))


def cell_average(values: np.ndarray) -> np.ndarray:
    """Mean of the 2^n corner values of every cell."""
    n = values.ndim
    acc = np.zeros(tuple(s - 1 for s in values.shape))
    for corner in itertools.product((0, 1), repeat=n):
        acc += values[corner_slice(corner, values.shape)]
    return acc / 2 ** n


def corner_slice(corner: Sequence[int], node_shape: Sequence[int]) -> tuple[slice, ...]:
    """Slice of a node array giving the `corner` vertex of every cell."""
    return tuple(slice(c, c + s - 1) for c, s in zip(corner, node_shape))


@dataclass(frozen=True, eq=False)
class CellMask:
    """Cell flags for a bulk region and its trace on {x_n = 0}.

    `bulk` has the grid's cell shape; `trace` has the cell shape of the
    bottom face (a 0-d array when dim == 1).
    """

    grid: HalfSpaceGrid
    bulk: np.ndarray
    trace: np.ndarray

    def __post_init__(self):
        bulk = np.asarray(self.bulk, dtype=bool)
        trace = np.asarray(self.trace, dtype=bool)
        if bulk.shape != self.grid.cell_shape or trace.shape != self.grid.cell_shape[:-1]:
            raise ValueError("mask flags do not match the grid's cell shape")
        object.__setattr__(self, "bulk", bulk)
        object.__setattr__(self, "trace", trace)

    def __eq__(self, other):
        if not isinstance(other, CellMask):
            return NotImplemented
        return (self.grid == other.grid and np.array_equal(self.bulk, other.bulk)
                and np.array_equal(self.trace, other.trace))

    @property
    def bulk_measure(self) -> float:
        return int(np.count_nonzero(self.bulk)) * self.grid.h ** self.grid.dim

    @property
    def trace_measure(self) -> float:
        return int(np.count_nonzero(self.trace)) * self.grid.h ** (self.grid.dim - 1)

    def _check(self, other: "CellMask"):
        if other.grid != self.grid:
            raise ValueError("masks live on different grids")

    def __or__(self, other):
        self._check(other)
        return CellMask(self.grid, self.bulk | other.bulk, self.trace | other.trace)

    def __and__(self, other):
        self._check(other)
        return CellMask(self.grid, self.bulk & other.bulk, self.trace & other.trace)

    def __sub__(self, other):
        self._check(other)
        return CellMask(self.grid, self.bulk & ~other.bulk, self.trace & ~other.trace)

    def issubset(self, other: "CellMask") -> bool:
        self._check(other)
        return not np.any(self.bulk & ~other.bulk) and not np.any(self.trace & ~other.trace)

    def is_empty(self) -> bool:
        return not np.any(self.bulk) and not np.any(self.trace)

    @classmethod
    def full(cls, grid: HalfSpaceGrid) -> "CellMask":
        return cls(grid, np.ones(grid.cell_shape, dtype=bool),
                   np.full(grid.cell_shape[:-1], grid.on_trace, dtype=bool))

    @classmethod
    def empty(cls, grid: HalfSpaceGrid) -> "CellMask":
        return cls(grid, np.zeros(grid.cell_shape, dtype=bool),
                   np.zeros(grid.cell_shape[:-1], dtype=bool))


def _as_point(grid: HalfSpaceGrid, center) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.dim,):
        raise ValueError(f"center must have {grid.dim} coordinates")
    if c[-1] < 0:
        raise ValueError("center lies below the half-space")
    return c


def half_ball_mask(grid: HalfSpaceGrid, center, radius: float) -> CellMask:
    """Cells of B_R(center) ∩ {x_n > 0} and bottom-face cells of B_R(center) ∩ {x_n = 0}.

    Membership is decided by the cell center, strict inequality.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    c = _as_point(grid, center)
    d2 = np.zeros(grid.cell_shape)
    for i, ax in enumerate(grid.cell_axes()):
        shape = [1] * grid.dim
        shape[i] = -1
        d2 = d2 + ((ax - c[i]) ** 2).reshape(shape)
    bulk = d2 < radius ** 2
    if grid.on_trace:
        t2 = np.full(grid.cell_shape[:-1], c[-1] ** 2)
        for i, ax in enumerate(grid.cell_axes()[:-1]):
            shape = [1] * (grid.dim - 1)
            shape[i] = -1
            t2 = t2 + ((ax - c[i]) ** 2).reshape(shape)
        trace = t2 < radius ** 2
    else:
        trace = np.zeros(grid.cell_shape[:-1], dtype=bool)
    return CellMask(grid, bulk, np.asarray(trace))


def annulus_mask(grid: HalfSpaceGrid, center, r_inner: float, r_outer: float) -> CellMask:
    if not 0 <= r_inner < r_outer:
        raise ValueError(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    outer = half_ball_mask(grid, center, r_outer)
    if r_inner == 0:
        return outer
    return outer - half_ball_mask(grid, center, r_inner)


@dataclass(frozen=True)
class MirroredField:
    """Even extension of a half-space field across {x_n = 0}.

    The mirrored half is not stored; `values` builds the full array on demand.
    The bottom-face nodes appear once.
    """

    half: ScalarField

    @property
    def h(self) -> float:
        return self.half.grid.h

    @property
    def values(self) -> np.ndarray:
        v = self.half.values
        return np.concatenate([np.flip(v[..., 1:], axis=-1), v], axis=-1)

    @property
    def shape(self) -> tuple[int, ...]:
        c = self.half.grid.counts
        return c[:-1] + (2 * c[-1] - 1,)

    def axes(self) -> list[np.ndarray]:
        ax = self.half.grid.axes()
        return ax[:-1] + [np.concatenate([-ax[-1][:0:-1], ax[-1]])]

    def value_at(self, index: Sequence[int]) -> float:
        """Value at lattice index (i_1, ..., i_n) with i_n allowed negative."""
        idx = tuple(index[:-1]) + (abs(index[-1]),)
        return float(self.half.values[idx])

    def ball_cells(self, center, radius: float) -> np.ndarray:
        """Cells of the mirrored box whose centers lie in the full open ball."""
        c = np.asarray(center, dtype=float)
        d2 = 0.0
        for i, ax in enumerate(self.axes()):
            mid = 0.5 * (ax[1:] + ax[:-1])
            shape = [1] * len(self.shape)
            shape[i] = -1
            d2 = d2 + ((mid - c[i]) ** 2).reshape(shape)
        return d2 < radius ** 2

    def restrict(self) -> ScalarField:
        full = self.values
        n_up = self.half.grid.counts[-1]
        return ScalarField(self.half.grid, full[..., n_up - 1:].copy())


def reflect_even(field: ScalarField) -> MirroredField:
    if not field.grid.on_trace:
        raise ValueError("even reflection needs the box to touch x_n = 0")
    return MirroredField(field)


@dataclass(frozen=True)
class TraceValues:
    values: np.ndarray
    coords: np.ndarray
    valid: bool


def trace_restrict(field: ScalarField) -> TraceValues:
    """u(x', 0) in bottom-face node order; empty and invalid when the box floats above x_n = 0."""
    g = field.grid
    if not g.on_trace:
        return TraceValues(np.empty(0), np.empty((0, g.dim - 1)), False)
    coords = g.coords()[..., 0, :-1]
    return TraceValues(field.values[..., 0].copy(), coords, True)
