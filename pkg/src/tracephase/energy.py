"""Discrete trace-coupled Allen-Cahn energy and its exact gradient.

Quadrature per cell:

* gradient term: mean over the 2^n cell corners of |g_c|^p, where g_c is the
  one-sided difference vector built from the n cell edges meeting at corner c;
* potential term: mean of F over the 2^n corner values;
* trace term: mean of G over the 2^(n-1) corners of each bottom-face cell.

Each is weighted by the cell measure (h^n, or h^(n-1) on the trace). For
p < 2 the gradient term uses (|g|^2 + delta^2)^(p/2) - delta^p.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import CellMask, HalfSpaceGrid, ScalarField, corner_slice, half_ball_mask
from .model import DoubleWell


@dataclass(frozen=True)
class EnergyBreakdown:
    bulk_gradient: float
    bulk_potential: float
    trace: float

    @property
    def total(self) -> float:
        return self.bulk_gradient + self.bulk_potential + self.trace

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(self.bulk_gradient + other.bulk_gradient,
                               self.bulk_potential + other.bulk_potential,
                               self.trace + other.trace)

    def csv_row(self, label) -> str:
        return ",".join([str(label), repr(self.bulk_gradient), repr(self.bulk_potential),
                         repr(self.trace), repr(self.total)])


BREAKDOWN_CSV_HEADER = "R_or_label,bulk_gradient,bulk_potential,trace,total"


@dataclass(frozen=True)
class Regularization:
    delta: float = 0.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    def check(self, p: float):
        if p < 2 and self.delta == 0:
            raise ValueError("p < 2 needs a positive regularization delta for the gradient")


def _phi(s, p, delta):
    if delta == 0:
        return s ** (0.5 * p)
    return (s + delta * delta) ** (0.5 * p) - delta ** p


def _dphi(s, p, delta):
    # derivative with respect to s = |g|^2
    return 0.5 * p * (s + delta * delta) ** (0.5 * p - 1.0)


class Functional:
    """Energy of node arrays on a fixed grid, region and well.

    Precomputes the corner/edge slicing and the per-node and per-edge
    quadrature weights, so repeated evaluations inside the minimizer do no
    bookkeeping. `bulk` and `trace` are the cell flags (cast to 0/1 weights).
    """

    def __init__(self, h: float, node_shape, well: DoubleWell, bulk, trace=None, delta: float = 0.0):
        self.h = float(h)
        self.n = n = len(node_shape)
        self.node_shape = tuple(node_shape)
        self.well = well
        self.p = float(well.p)
        self.delta = float(delta)
        self.bulk = np.asarray(bulk, dtype=float)
        cells = tuple(s - 1 for s in node_shape)
        self._corners = []
        self.node_weight = np.zeros(node_shape)
        self.edge_weight = []
        for i in range(n):
            shape = list(node_shape)
            shape[i] = cells[i]
            self.edge_weight.append(np.zeros(shape))
        for corner in itertools.product((0, 1), repeat=n):
            node_sl = corner_slice(corner, node_shape)
            edge_sl = []
            for i in range(n):
                sl = tuple(slice(0, cells[k]) if k == i else slice(corner[k], corner[k] + cells[k])
                           for k in range(n))
                edge_sl.append(sl)
                self.edge_weight[i][sl] += self.bulk
            self.node_weight[node_sl] += self.bulk
            self._corners.append((node_sl, edge_sl))
        self.trace_weight = None
        if trace is not None:
            trace = np.asarray(trace, dtype=float)
            self.trace_weight = np.zeros(node_shape[:-1])
            for c in itertools.product((0, 1), repeat=n - 1):
                self.trace_weight[corner_slice(c, node_shape[:-1])] += trace
        self._cell_vol = self.h ** n / 2 ** n
        self._face_vol = self.h ** (n - 1) / 2 ** (n - 1)
        # |g|^2 summed over corners is a weighted sum of squared edge differences
        self._quadratic = self.p == 2.0 and self.delta == 0.0

    def _gradient_term(self, diffs):
        if self._quadratic:
            return sum(float(np.sum(self.edge_weight[i] * diffs[i] ** 2)) for i in range(self.n))
        p, delta, w = self.p, self.delta, self.bulk
        acc = 0.0
        for _, edge_sl in self._corners:
            s = diffs[0][edge_sl[0]] ** 2
            for i in range(1, self.n):
                s = s + diffs[i][edge_sl[i]] ** 2
            acc += float(np.sum(w * _phi(s, p, delta)))
        return acc

    def parts(self, u: np.ndarray) -> EnergyBreakdown:
        diffs = [np.diff(u, axis=i) / self.h for i in range(self.n)]
        grad_sum = self._gradient_term(diffs)
        pot_sum = float(np.sum(self.node_weight * self.well.F(u)))
        trace_sum = 0.0
        if self.trace_weight is not None:
            trace_sum = float(np.sum(self.trace_weight * self.well.G(u[..., 0])))
        return EnergyBreakdown(grad_sum * self._cell_vol, pot_sum * self._cell_vol,
                               trace_sum * self._face_vol)

    def value(self, u: np.ndarray) -> float:
        return self.parts(u).total

    def value_and_grad(self, u: np.ndarray):
        p, delta, w, h = self.p, self.delta, self.bulk, self.h
        if p < 2 and delta == 0:
            raise ValueError("p < 2 needs a positive regularization delta for the gradient")
        diffs = [np.diff(u, axis=i) / h for i in range(self.n)]
        if self._quadratic:
            ddiffs = [2.0 * self.edge_weight[i] * diffs[i] for i in range(self.n)]
            grad_sum = sum(float(np.sum(dd * d)) for dd, d in zip(ddiffs, diffs)) / 2.0
        else:
            ddiffs = [np.zeros_like(d) for d in diffs]
            grad_sum = 0.0
            for _, edge_sl in self._corners:
                comps = [diffs[i][edge_sl[i]] for i in range(self.n)]
                s = comps[0] ** 2
                for c in comps[1:]:
                    s = s + c ** 2
                grad_sum += float(np.sum(w * _phi(s, p, delta)))
                coef = 2.0 * w * _dphi(s, p, delta)
                for i in range(self.n):
                    ddiffs[i][edge_sl[i]] += coef * comps[i]
        total = (grad_sum + float(np.sum(self.node_weight * self.well.F(u)))) * self._cell_vol
        grad = self._cell_vol * self.node_weight * self.well.dF(u)
        for i in range(self.n):
            g = ddiffs[i] * (self._cell_vol / h)
            hi = [slice(None)] * self.n
            lo = [slice(None)] * self.n
            hi[i] = slice(1, None)
            lo[i] = slice(0, -1)
            grad[tuple(hi)] += g
            grad[tuple(lo)] -= g
        if self.trace_weight is not None:
            u0 = u[..., 0]
            total += float(np.sum(self.trace_weight * self.well.G(u0))) * self._face_vol
            grad[..., 0] += self._face_vol * self.trace_weight * self.well.dG(u0)
        return total, grad


def _check(grid: HalfSpaceGrid, field: ScalarField, mask: Optional[CellMask] = None):
    if field.grid != grid:
        raise ValueError("field does not live on this grid")
    if mask is not None and mask.grid != grid:
        raise ValueError("mask does not live on this grid")


def functional(grid: HalfSpaceGrid, well: DoubleWell, mask: Optional[CellMask] = None,
               delta: float = 0.0) -> Functional:
    mask = CellMask.full(grid) if mask is None else mask
    trace = mask.trace if grid.on_trace else None
    return Functional(grid.h, grid.shape, well, mask.bulk, trace, delta)


def energy(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, mask: Optional[CellMask] = None,
           delta: float = 0.0) -> EnergyBreakdown:
    """Energy of `field` over the region `mask` (whole box if omitted)."""
    _check(grid, field, mask)
    return functional(grid, well, mask, delta).parts(field.values)


def energy_ball(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, x_o, R: float,
                delta: float = 0.0) -> EnergyBreakdown:
    return energy(grid, field, well, half_ball_mask(grid, x_o, R), delta)


def energy_gradient(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell,
                    reg: Regularization = Regularization(), pinned: Optional[np.ndarray] = None,
                    mask: Optional[CellMask] = None) -> np.ndarray:
    """Gradient of the discrete energy with respect to node values.

    Entries at `pinned` nodes are zeroed.
    """
    _check(grid, field, mask)
    reg.check(well.p)
    _, g = functional(grid, well, mask, reg.delta).value_and_grad(field.values)
    if pinned is not None:
        g[pinned] = 0.0
    return g


def bulk_terms(values: np.ndarray, h: float, cells: np.ndarray, well: DoubleWell,
               delta: float = 0.0) -> EnergyBreakdown:
    """Bulk gradient and potential terms of a bare node array over flagged cells (no trace)."""
    return Functional(h, values.shape, well, cells, None, delta).parts(values)


def lipschitz_constant(field: ScalarField) -> float:
    """Largest edge difference quotient |u(x + h e_i) - u(x)| / h."""
    v, h = field.values, field.grid.h
    return max(float(np.max(np.abs(np.diff(v, axis=i)))) / h for i in range(v.ndim))
