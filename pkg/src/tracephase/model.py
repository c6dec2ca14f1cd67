"""Double-well potentials, the weight S and the two comparison barriers."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DoubleWell:
    """Bulk potential F and trace potential G with their derivatives.

    Evaluators must be pure and vectorised over numpy arrays.
    """

    p: float
    C_o: float
    F: Scalar
    dF: Scalar
    G: Scalar
    dG: Scalar
    name: str = "custom"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"exponent p must exceed 1, got {self.p}")
        if not self.C_o >= 1:
            raise ValueError(f"C_o must be >= 1, got {self.C_o}")

    def without_trace(self) -> "DoubleWell":
        zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        return replace(self, G=zero, dG=zero, name=self.name + "/no-trace")


def _base(t, p):
    return np.clip(1.0 - np.asarray(t, dtype=float) ** 2, 0.0, None) ** p


def _dbase(t, p):
    t = np.asarray(t, dtype=float)
    return -2.0 * p * t * np.clip(1.0 - t ** 2, 0.0, None) ** (p - 1)


def standard_well(p: float) -> DoubleWell:
    """F(t) = G(t) = (1 - t^2)^p, the equality case C_o = 1."""
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p}")
    F = lambda t: _base(t, p)
    dF = lambda t: _dbase(t, p)
    return DoubleWell(p, 1.0, F, dF, F, dF, name=f"standard-p{p:g}")


def scaled_well(p: float, f_scale: float = 1.0, g_scale: float = 1.0, C_o: float = 1.0) -> DoubleWell:
    """F = f_scale (1-t^2)^p, G = g_scale (1-t^2)^p under a caller-chosen C_o."""
    return DoubleWell(
        p, C_o,
        lambda t: f_scale * _base(t, p), lambda t: f_scale * _dbase(t, p),
        lambda t: g_scale * _base(t, p), lambda t: g_scale * _dbase(t, p),
        name=f"scaled-p{p:g}-F{f_scale:g}-G{g_scale:g}",
    )


def asymmetric_well(p: float) -> DoubleWell:
    """Non-even demo pair: F = (1 + t/2)(1-t^2)^p, G = (1 - t/2)(1-t^2)^p, valid with C_o = 2."""
    def F(t):
        t = np.asarray(t, dtype=float)
        return (1 + 0.5 * t) * _base(t, p)

    def dF(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * _base(t, p) + (1 + 0.5 * t) * _dbase(t, p)

    def G(t):
        t = np.asarray(t, dtype=float)
        return (1 - 0.5 * t) * _base(t, p)

    def dG(t):
        t = np.asarray(t, dtype=float)
        return -0.5 * _base(t, p) + (1 - 0.5 * t) * _dbase(t, p)

    return DoubleWell(p, 2.0, F, dF, G, dG, name=f"asymmetric-demo-p{p:g}")


WELLS = ("standard-p2", "standard-p", "asymmetric-demo")


def well_by_name(name: str, p: float = 2.0, C_o: Optional[float] = None) -> DoubleWell:
    if name == "standard-p2":
        well = standard_well(2.0)
    elif name == "standard-p":
        well = standard_well(p)
    elif name == "asymmetric-demo":
        well = asymmetric_well(p)
    else:
        raise ValueError(f"unknown well {name!r}; choose from {', '.join(WELLS)}")
    if C_o is not None and C_o != well.C_o:
        well = replace(well, C_o=float(C_o))
    return well


@dataclass(frozen=True)
class WellReport:
    passed: bool
    worst_margin: float
    worst_tau: float
    violations: list  # tau values where an inequality fails
    upper_margin: float
    lower_margin: float


def validate_wells(well: DoubleWell, samples: int, atol: float = 1e-12) -> WellReport:
    """Check max(F, G) <= C_o b and F >= b / C_o, b = (1-t^2)^p, at equispaced t in [-1, 1]."""
    if samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(-1.0, 1.0, samples)
    b = _base(t, well.p)
    F, G = np.asarray(well.F(t), float), np.asarray(well.G(t), float)
    upper = well.C_o * b - np.maximum(F, G)
    lower = F - b / well.C_o
    nonneg = np.minimum(F, G)
    margin = np.minimum(np.minimum(upper, lower), nonneg)
    bad = margin < -atol
    i = int(np.argmin(margin))
    return WellReport(
        passed=not bool(bad.any()),
        worst_margin=float(margin[i]),
        worst_tau=float(t[i]),
        violations=[float(x) for x in t[bad]],
        upper_margin=float(upper.min()),
        lower_margin=float(lower.min()),
    )


def s_weight(tau, p: float):
    """S(t) = min{(t+1)^p, 1}, inputs below -1 clamped to -1."""
    t = np.maximum(np.asarray(tau, dtype=float), -1.0)
    return np.minimum((t + 1.0) ** p, 1.0)


@dataclass(frozen=True)
class BarrierParams:
    x_o: tuple
    R: Optional[float] = None
    k: Optional[int] = None
    T: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "x_o", tuple(float(c) for c in np.atleast_1d(self.x_o)))
        if self.R is not None and not self.R > 0.5:
            raise ValueError(f"barrier radius must exceed 1/2, got {self.R}")
        if self.T is not None and not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.k is not None and (int(self.k) != self.k or self.k < 0):
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")


def _radius(x, x_o):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum((x - np.asarray(x_o, dtype=float)) ** 2, axis=-1))


# ramp over [R - 1/2, R - 1/4]: cubic smoothstep, peak slope 2 * 1.5 * 4 = 12
BETA_RAMP = 0.25


def barrier_beta(x, params: BarrierParams):
    """-1 on B_{R-1/2}(x_o), +1 outside B_{R-1/4}(x_o), monotone radial ramp between."""
    if params.R is None:
        raise ValueError("barrier_beta needs R")
    r = _radius(x, params.x_o)
    s = np.clip((r - (params.R - 0.5)) / BETA_RAMP, 0.0, 1.0)
    return -1.0 + 2.0 * s * s * (3.0 - 2.0 * s)


def barrier_vk(x, params: BarrierParams):
    """Sliding barrier 2 exp(|x - x_o| - (k+1)T) - 1, capped at 2 e^T - 1 outside B_{(k+2)T}.

    Points with x_n < 0 take the value at the mirror point (x', -x_n).
    """
    if params.k is None or params.T is None:
        raise ValueError("barrier_vk needs k and T")
    x = np.array(x, dtype=float)
    x[..., -1] = np.abs(x[..., -1])
    k, T = params.k, params.T
    r = np.minimum(_radius(x, params.x_o), (k + 2) * T)
    return 2.0 * np.exp(r - (k + 1) * T) - 1.0
