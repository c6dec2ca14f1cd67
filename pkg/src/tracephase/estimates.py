"""Level-set volumes, area terms, scaling fits, proof quantities and the recursion lemma check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import HalfSpaceGrid, ScalarField, annulus_mask, cell_average, half_ball_mask
from .energy import energy
from .model import BarrierParams, DoubleWell, barrier_beta, barrier_vk, s_weight

FLOOR_CELLS = 10


def volume_above(grid: HalfSpaceGrid, field: ScalarField, theta: float, x_o, r: float) -> float:
    """L^n(B_r^+(x_o) ∩ {u > θ}) with cell-averaged u."""
    if not -1 < theta < 1:
        raise ValueError("theta must lie in (-1, 1)")
    mask = half_ball_mask(grid, x_o, r)
    return int(np.count_nonzero(mask.bulk & (field.cell_average() > theta))) * grid.h ** grid.dim


def volume_below(grid: HalfSpaceGrid, field: ScalarField, theta: float, x_o, r: float) -> float:
    """L^n(B_r^+(x_o) ∩ {u < θ}) with cell-averaged u."""
    if not -1 < theta < 1:
        raise ValueError("theta must lie in (-1, 1)")
    mask = half_ball_mask(grid, x_o, r)
    return int(np.count_nonzero(mask.bulk & (field.cell_average() < theta))) * grid.h ** grid.dim


def area_term(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, theta: float, x_o,
              r: float) -> float:
    """∫ S(u) over B_r^+(x_o) ∩ {u <= θ}, cell-averaged u."""
    if not -1 < theta < 1:
        raise ValueError("theta must lie in (-1, 1)")
    mask = half_ball_mask(grid, x_o, r)
    avg = field.cell_average()
    sel = mask.bulk & (avg <= theta)
    return float(np.sum(s_weight(avg[sel], well.p))) * grid.h ** grid.dim


def fit_power_law(r, y, usable=None):
    """Least-squares fit log y = a log r + b; returns (exponent, constant).

    The constant is the geometric mean of y / r^a. Both are None with fewer
    than three usable points.
    """
    r, y = np.asarray(r, float), np.asarray(y, float)
    ok = y > 0 if usable is None else (np.asarray(usable) & (y > 0))
    if np.count_nonzero(ok) < 3:
        return None, None
    a, _ = np.polyfit(np.log(r[ok]), np.log(y[ok]), 1)
    const = float(np.exp(np.mean(np.log(y[ok]) - a * np.log(r[ok]))))
    return float(a), const


@dataclass
class DensityReport:
    theta: float
    x_o: tuple
    radii: list
    V: list
    A: list
    E: list
    fitted_exponent_V: Optional[float]
    fitted_constant_V: Optional[float]
    fitted_exponent_E: Optional[float]
    fitted_constant_E: Optional[float]
    fitted_exponent_A: Optional[float] = None
    r0: Optional[float] = None
    side: str = "above"
    floor_cells: int = FLOOR_CELLS

    def density_ratio(self, r_min: float = 0.0) -> Optional[float]:
        """min / max of V_r / r^n over scanned r >= r_min."""
        n = len(self.x_o)
        d = [v / r ** n for r, v in zip(self.radii, self.V) if r >= r_min]
        if not d or max(d) == 0:
            return None
        return min(d) / max(d)

    def to_csv(self) -> str:
        lines = ["r,V_r,A_r,E_r"]
        for r, v, a, e in zip(self.radii, self.V, self.A, self.E):
            lines.append(f"{r!r},{v!r},{a!r},{e!r}")
        lines.append(
            f"# side={self.side} theta={self.theta!r} floor_cells={self.floor_cells}"
            f" exponent_V={self.fitted_exponent_V!r} constant_V={self.fitted_constant_V!r}"
            f" exponent_E={self.fitted_exponent_E!r} constant_E={self.fitted_constant_E!r}"
            f" exponent_A={self.fitted_exponent_A!r} r0={self.r0!r}")
        return "\n".join(lines) + "\n"


def scan(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, theta: float, x_o,
         radii: Sequence[float], side: str = "above", floor_cells: int = FLOOR_CELLS) -> DensityReport:
    """V_r, A_r and E_r over `radii` with log-log fits.

    side="below" measures {u < θ} instead, with the area term taken on the
    mirrored problem (u -> -u, θ -> -θ); E_r is unaffected.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    hi = np.array(grid.upper)
    lo = np.array(grid.origin_offset)
    c = np.asarray(x_o, dtype=float)
    if radii and (np.any(c[:-1] - radii[-1] < lo[:-1] - 1e-9) or np.any(c + radii[-1] > hi + 1e-9)):
        raise ValueError("largest radius does not fit in the grid")
    avg = field.cell_average()
    if side == "below":
        avg, th = -avg, -theta
    else:
        th = theta
    cell = grid.h ** grid.dim
    V, A, E, counts = [], [], [], []
    for r in radii:
        mask = half_ball_mask(grid, x_o, r)
        above = mask.bulk & (avg > th)
        below = mask.bulk & ~(avg > th)
        V.append(int(np.count_nonzero(above)) * cell)
        A.append(float(np.sum(s_weight(avg[below], well.p))) * cell)
        E.append(energy(grid, field, well, mask).total)
        counts.append(int(np.count_nonzero(mask.bulk)))
    V_ok = np.array(V) >= floor_cells * cell
    E_ok = np.array(counts) >= floor_cells
    aV, cV = fit_power_law(radii, V, V_ok)
    aE, cE = fit_power_law(radii, E, E_ok)
    aA, _ = fit_power_law(radii, A, E_ok)
    n = grid.dim
    dens = [v / r ** n for r, v in zip(radii, V)]
    r0 = None
    if dens and dens[-1] > 0:
        r0 = next(r for r, d in zip(radii, dens) if d > 0.5 * dens[-1])
    return DensityReport(float(theta), tuple(float(x) for x in c), radii, V, A, E,
                         aV, cV, aE, cE, aA, r0, side, floor_cells)


def hypothesis_check(grid: HalfSpaceGrid, field: ScalarField, theta: float, x_o, mu1: float,
                     mu2: float, below: bool = False) -> bool:
    """True iff L^n(B_μ1^+(x_o) ∩ {u > θ}) >= μ2 (or {u < θ} when `below`)."""
    if not (mu1 > 0 and mu2 > 0):
        raise ValueError("mu1 and mu2 must be positive")
    vol = volume_below if below else volume_above
    return vol(grid, field, theta, x_o, mu1) >= mu2


@dataclass(frozen=True)
class ProofQuantities:
    k: int
    T: float
    l1: float
    l2: float
    l3: float
    lhs: float
    ratio: float


def proof_quantities(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, x_o, k: int,
                     T: float, theta: float) -> ProofQuantities:
    """ℓ1, ℓ2, ℓ3 of the sliding barrier v_k and lhs = V_{kT}^{(n-1)/n}.

    Cells are compared through their averaged u and v_k at the cell center;
    trace cells use the mean of the bottom-face corner values.
    """
    params = BarrierParams(x_o, k=k, T=T)
    n, h, p = grid.dim, grid.h, well.p
    if half_ball_mask(grid, x_o, (k + 2) * T).is_empty():
        raise ValueError("the (k+2)T ball misses the grid")
    centers = grid.cell_centers()
    vk = barrier_vk(centers, params)
    Svk = s_weight(vk, p)
    avg = field.cell_average()
    cell = h ** n
    inner = half_ball_mask(grid, x_o, k * T) if k > 0 else None
    l1 = 0.0 if inner is None else float(np.sum(Svk[inner.bulk])) * cell
    ring = (annulus_mask(grid, x_o, k * T, (k + 1) * T) if k > 0
            else half_ball_mask(grid, x_o, T))
    sel = ring.bulk & (avg >= vk)
    l2 = float(np.sum(Svk[sel])) * cell
    l3 = 0.0
    outer = half_ball_mask(grid, x_o, (k + 1) * T)
    if grid.on_trace and np.any(outer.trace):
        face_centers = centers[..., 0, :].copy()
        face_centers[..., -1] = 0.0
        vk0 = barrier_vk(face_centers, params)
        u0 = field.values[..., 0]
        u0_avg = u0 if n == 1 else cell_average(u0)
        sel0 = outer.trace & (u0_avg >= vk0)
        l3 = float(np.sum(s_weight(vk0, p)[sel0])) * h ** (n - 1)
    V = volume_above(grid, field, theta, x_o, k * T) if k > 0 else 0.0
    lhs = V ** ((n - 1) / n)
    den = l1 + l2 + l3
    ratio = lhs / den if den > 0 else math.inf
    return ProofQuantities(k, T, l1, l2, l3, lhs, ratio)


@dataclass(frozen=True)
class RecursionParams:
    C: float
    epsilon: float
    n: int
    A_seq: tuple
    V_seq: tuple

    def __post_init__(self):
        if not self.C >= 1:
            raise ValueError("C must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        A, V = tuple(float(a) for a in self.A_seq), tuple(float(v) for v in self.V_seq)
        if len(A) != len(V) or not A:
            raise ValueError("A and V sequences must have the same positive length")
        if min(A) < 0 or min(V) < 0:
            raise ValueError("sequences must be nonnegative")
        object.__setattr__(self, "A_seq", A)
        object.__setattr__(self, "V_seq", V)


@dataclass(frozen=True)
class RecursionVerdict:
    hypotheses_hold: bool
    lower_bound_holds: bool
    recursion_holds: bool
    epsilon_ok: bool
    conclusion_holds: Optional[bool]
    vacuous: bool
    c: float
    epsilon_bound: float
    k_threshold: int
    first_violation: Optional[int]
    first_hypothesis_failure: Optional[int]

    def to_text(self) -> str:
        keys = ["hypotheses_hold", "lower_bound_holds", "recursion_holds", "epsilon_ok",
                "conclusion_holds", "vacuous", "c", "epsilon_bound", "k_threshold",
                "first_violation", "first_hypothesis_failure"]
        out = []
        for k in keys:
            v = getattr(self, k)
            out.append(f"{k}={'none' if v is None else (str(v).lower() if isinstance(v, bool) else repr(v))}")
        return "\n".join(out) + "\n"


EPS_SLACK = 1e-12


def lemma_constant(C: float, n: int) -> float:
    return min(1.0 / C, 1.0 / (2.0 * C * math.factorial(n + 1)) ** n)


def epsilon_bound(C: float, n: int) -> float:
    c = lemma_constant(C, n)
    return min(c / (4.0 * C), c ** ((n - 1) / n) * (2.0 ** (1.0 / n) - 1.0) / (2.0 * C))


def k_threshold(C: float, n: int) -> int:
    """Smallest integer k with k >= 4 C (n+1)!."""
    return math.ceil(4 * C * math.factorial(n + 1))


def recursion_check(params: RecursionParams) -> RecursionVerdict:
    """Check the recursion lemma's hypotheses and, when they hold, its conclusion.

    Entry j of each sequence is index k = j + 1. The lower bound V_k >= 1/C is
    checked at every k; the recursion at every k whose successor is present.
    The conclusion A_k + V_k >= c k^n is checked for k >= 4C(n+1)!; when no
    such k is present the conclusion holds vacuously.
    """
    C, eps, n = params.C, params.epsilon, params.n
    A, V = params.A_seq, params.V_seq
    c = lemma_constant(C, n)
    eb = epsilon_bound(C, n)
    eps_ok = eps <= eb * (1.0 - EPS_SLACK)
    first_fail = None
    lower_ok = True
    rec_ok = True
    for j in range(len(V)):
        k = j + 1
        if V[j] < 1.0 / C:
            lower_ok = False
            first_fail = k if first_fail is None else first_fail
        if j + 1 < len(V):
            lhs = V[j] ** ((n - 1) / n) + A[j]
            rhs = C * ((V[j + 1] - V[j]) + (A[j + 1] - A[j]) + eps * k ** (n - 1))
            if lhs > rhs:
                rec_ok = False
                first_fail = k if first_fail is None else min(first_fail, k)
    hyp = lower_ok and rec_ok and eps_ok
    kt = k_threshold(C, n)
    conclusion, vacuous, first_violation = None, False, None
    if hyp:
        ks = range(kt, len(V) + 1)
        vacuous = len(ks) == 0
        for k in ks:
            if A[k - 1] + V[k - 1] < c * k ** n:
                first_violation = k
                break
        conclusion = first_violation is None
    return RecursionVerdict(hyp, lower_ok, rec_ok, eps_ok, conclusion, vacuous, c, eb, kt,
                            first_violation, first_fail)


def calibrate_recursion(A_seq, V_seq, n: int, C_max: float = 2.0 ** 30) -> Optional[RecursionParams]:
    """Smallest C in 1, 2, 4, ... for which the sequences satisfy the lemma's hypotheses.

    ε is set just inside its admissible bound for each candidate C.
    Returns None when no C up to C_max works.
    """
    C = 1.0
    while C <= C_max:
        eps = epsilon_bound(C, n) * (1.0 - 1e-9)
        params = RecursionParams(C, eps, n, tuple(A_seq), tuple(V_seq))
        if recursion_check(params).hypotheses_hold:
            return params
        C *= 2.0
    return None


def sample_admissible_sequences(rng: np.random.Generator, n: int, C: float, epsilon: float,
                                length: int, slack: tuple = (1.0, 1.5)):
    """Random (A, V) sequences built to satisfy the recursion hypotheses.

    Each step adds just enough total growth (times a factor drawn from
    `slack`) and splits it randomly between A and V, letting one of them
    shrink. Floating-point rounding can still break a hypothesis, so
    callers should re-check.
    """
    V = [1.0 / C * (1.0 + rng.uniform(0.0, 2.0))]
    A = [rng.uniform(0.0, 1.0)]
    for k in range(1, length):
        need = (V[-1] ** ((n - 1) / n) + A[-1]) / C - epsilon * k ** (n - 1)
        total = max(need, 0.0) * rng.uniform(*slack)
        dv = total * rng.uniform(-0.3, 1.3)
        dv = max(dv, -(V[-1] - 1.0 / C), total - A[-1])
        V.append(V[-1] + dv)
        A.append(max(A[-1] + total - dv, 0.0))
    return np.array(A), np.array(V)


@dataclass(frozen=True)
class TruncationCheck:
    R: float
    inner_energy: float
    ball_energy: float
    field: ScalarField


def barrier_truncation(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, x_o,
                       R: float) -> TruncationCheck:
    """w = min(u, β) and its energy on B_{R-1/2} and on B_R.

    The inner region is the set of cells lying entirely in B_{R-1/2}
    (center within R - 1/2 - h√n/2), where every node of w equals -1.
    """
    beta = barrier_beta(grid.coords(), BarrierParams(x_o, R=R))
    w = ScalarField(grid, np.minimum(field.values, beta))
    inset = R - 0.5 - 0.5 * grid.h * math.sqrt(grid.dim)
    inner = energy(grid, w, well, half_ball_mask(grid, x_o, inset)).total if inset > 0 else 0.0
    ball = energy(grid, w, well, half_ball_mask(grid, x_o, R)).total
    return TruncationCheck(R, inner, ball, w)
