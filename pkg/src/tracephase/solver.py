"""Box-constrained energy minimization, the Q-minimality audit and the 1D heteroclinic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import CellMask, HalfSpaceGrid, ScalarField, half_ball_mask
from .energy import EnergyBreakdown, Regularization, energy, functional
from .model import DoubleWell


class NumericalFailure(RuntimeError):
    """Raised when the energy stops being finite; carries the last good iterate."""

    def __init__(self, message: str, last_field: Optional[ScalarField] = None):
        super().__init__(message)
        self.last_field = last_field


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 5000
    tol: float = 1e-9
    step0: float = 1e-2
    backtrack: float = 0.5
    pinned: tuple = ()
    delta: Regularization = Regularization()
    seed: int = 0
    armijo: float = 1e-4

    def __post_init__(self):
        # max_iters == 0 is allowed: it returns the initial field with a one-row log
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not self.tol > 0 or not self.step0 > 0:
            raise ValueError("tol and step0 must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if isinstance(self.delta, (int, float)):
            object.__setattr__(self, "delta", Regularization(float(self.delta)))
        object.__setattr__(self, "pinned", tuple(self.pinned))


def pinned_nodes(grid: HalfSpaceGrid, faces: Sequence[str]) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for face in faces:
        if face in ("bottom", f"low{grid.dim - 1}"):
            raise ValueError("the trace face is never pinned")
        mask |= grid.face_nodes(face)
    return mask


@dataclass
class IterationLog:
    rows: list = field(default_factory=list)  # (iter, energy, step, grad_norm)
    converged: bool = False

    @property
    def energies(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    def to_csv(self) -> str:
        lines = ["iter,energy,step,grad_norm"]
        lines += [f"{i},{e!r},{s!r},{g!r}" for i, e, s, g in self.rows]
        return "\n".join(lines) + "\n"


def minimize(grid: HalfSpaceGrid, field0: ScalarField, well: DoubleWell,
             options: SolveOptions = SolveOptions()):
    """Projected gradient descent on [-1, 1]^nodes with Armijo backtracking.

    The trial step is the Barzilai-Borwein step of the previous iteration
    (step0 at the start); it is shrunk by `backtrack` until the Armijo
    condition holds, so the logged energy never increases. Steps act on the
    gradient divided by h^n. Returns (field, IterationLog).
    """
    if field0.grid != grid:
        raise ValueError("field does not live on this grid")
    options.delta.check(well.p)
    pinned = pinned_nodes(grid, options.pinned)
    fun = functional(grid, well, None, options.delta.delta)
    scale = grid.h ** grid.dim
    u = field0.values.copy()
    E, g = fun.value_and_grad(u)
    if not math.isfinite(E):
        raise NumericalFailure("initial energy is not finite", field0.copy())
    g[pinned] = 0.0
    d = g / scale
    log = IterationLog([(0, E, 0.0, float(np.max(np.abs(d))))])
    step = options.step0
    for it in range(1, options.max_iters + 1):
        while True:
            u_new = np.clip(u - step * d, -1.0, 1.0)
            du = u_new - u
            if not np.any(du):
                # the step underflowed: u is stationary up to rounding
                E_new = E
                break
            E_new = fun.value(u_new)
            if not math.isfinite(E_new):
                raise NumericalFailure(f"non-finite energy at iteration {it}", ScalarField(grid, u))
            if E_new <= E + options.armijo * float(np.sum(g * du)):
                break
            step *= options.backtrack
        E_new, g_new = fun.value_and_grad(u_new)
        g_new[pinned] = 0.0
        d_new = g_new / scale
        update = float(np.max(np.abs(du)))
        log.rows.append((it, E_new, step, float(np.max(np.abs(d_new)))))
        sy = float(np.sum(du * (d - d_new)))
        u, E, g, d = u_new, E_new, g_new, d_new
        if update < options.tol:
            log.converged = True
            break
        step = -float(np.sum(du * du)) / sy if sy < 0 else options.step0
        step = min(max(step, 1e-12), 1e6)
    return ScalarField(grid, u), log


def planar_interface(grid: HalfSpaceGrid, width: float = 2.0, axis: int = 0) -> ScalarField:
    """u0(x) = clamp(x_1 / width, -1, 1): an interface across the box, orthogonal to the trace."""
    return ScalarField.from_function(grid, lambda x: np.clip(x[..., axis] / width, -1.0, 1.0))


@dataclass(frozen=True)
class AuditTrial:
    trial: int
    ratio: float
    center: tuple
    radius: float
    profile: str
    seed: int  # master seed; the trial stream is SeedSequence(seed).spawn(trials)[trial]


@dataclass
class AuditReport:
    Q: float
    trials: int
    skipped: int
    worst_ratio: float
    records: list
    violations: list

    def to_csv(self) -> str:
        lines = ["trial,ratio,support_center,radius"]
        for r in self.records:
            c = " ".join(repr(float(x)) for x in r.center)
            lines.append(f"{r.trial},{r.ratio!r},{c},{r.radius!r}")
        return "\n".join(lines) + "\n"


PROFILES = ("cone", "smoothstep", "descent")


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def q_minimality_audit(grid: HalfSpaceGrid, field: ScalarField, well: DoubleWell, Q: float,
                       trials: int, perturb_scale: float, seed: int,
                       pinned: Sequence[str] = (), radius_range: tuple = (1.0, 6.0),
                       delta: float = 0.0) -> AuditReport:
    """Compare E_Ω(u) with Q E_Ω(u + φ) for random Lipschitz bumps φ.

    Each trial draws a ball (center, ρ) inside the box, one profile from
    PROFILES with random sign and amplitude ≤ perturb_scale, clips u + φ to
    [-1, 1] and zeroes φ on pinned nodes. Ω is the half-ball of radius
    ρ + h√n, so it holds every cell touched by the support of φ. The
    "descent" profile is the negative energy gradient under a smoothstep
    window, scaled to the amplitude. A bump that the clipping would erase is
    applied with the opposite sign; trials whose perturbation still vanishes
    are skipped and counted.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if trials < 1:
        raise ValueError("need at least one trial")
    u = field.values
    pin = pinned_nodes(grid, pinned)
    coords = grid.coords()
    lo = np.array(grid.origin_offset)
    hi = np.array(grid.upper)
    h, n = grid.h, grid.dim
    margin = h * math.sqrt(n)
    grad = None
    records, violations = [], []
    skipped = 0
    master = np.random.SeedSequence(seed)
    for t, child in enumerate(master.spawn(trials)):
        rng = np.random.default_rng(child)
        rho_max = min(radius_range[1], 0.5 * float(np.min(hi - lo)) - 2 * margin)
        rho = rng.uniform(radius_range[0], max(radius_range[0], rho_max))
        c_lo = lo + rho + margin
        c_hi = hi - rho - margin
        c_lo[-1] = lo[-1] if grid.on_trace else lo[-1] + rho + margin
        if np.any(c_hi < c_lo):
            skipped += 1
            continue
        center = rng.uniform(c_lo, c_hi)
        profile = PROFILES[rng.integers(len(PROFILES))]
        amp = perturb_scale * rng.uniform(0.05, 1.0) * rng.choice((-1.0, 1.0))
        r = np.sqrt(np.sum((coords - center) ** 2, axis=-1))
        if profile == "cone":
            phi = np.clip(1.0 - r / rho, 0.0, None)
        else:
            phi = _smoothstep(1.0 - r / rho)
            if profile == "descent":
                if grad is None:
                    fun = functional(grid, well, None, delta if delta > 0 or well.p >= 2 else 1e-6)
                    grad = -fun.value_and_grad(u)[1]
                window = phi
                phi = window * grad
                peak = float(np.max(np.abs(phi)))
                if peak > 0:
                    phi = phi / peak
                    amp = abs(amp)
                else:
                    # u is stationary under the window; use the plain bump
                    profile, phi = "smoothstep", window
        phi = amp * phi
        phi[pin] = 0.0
        v = np.clip(u + phi, -1.0, 1.0)
        if not np.any(v != u):
            # u sits on the constraint under the whole bump: push the other way
            v = np.clip(u - phi, -1.0, 1.0)
        if not np.any(v != u):
            skipped += 1
            continue
        omega = half_ball_mask(grid, center, rho + margin)
        if omega.is_empty():
            skipped += 1
            continue
        fun = functional(grid, well, omega, delta)
        e_u, e_v = fun.value(u), fun.value(v)
        if e_v > 0:
            ratio = e_u / e_v
        else:
            ratio = 0.0 if e_u == 0 else math.inf
        rec = AuditTrial(t, ratio, tuple(float(x) for x in center), float(rho), profile, seed)
        records.append(rec)
        if ratio > Q:
            violations.append(rec)
    worst = max((r.ratio for r in records), default=0.0)
    return AuditReport(Q, trials, skipped, worst, records, violations)


@dataclass(frozen=True)
class Profile1D:
    t: np.ndarray
    u: np.ndarray
    energy: float
    log: IterationLog


def heteroclinic_1d(p: float, well: DoubleWell, L: float = 10.0, h: float = 0.05,
                    eps_b: float = 1e-6, options: Optional[SolveOptions] = None) -> Profile1D:
    """Minimize ∫_{-L}^{L} |u'|^p + F(u) with u(±L) = ±(1 - eps_b).

    The interval is shifted onto [0, 2L] so it fits the half-space grid;
    the trace potential is dropped.
    """
    if L < 5 or h > 0.1:
        raise ValueError("need L >= 5 and h <= 0.1")
    m = int(round(L / h))
    grid = HalfSpaceGrid(1, L / m, (2 * m + 1,))
    t = grid.axes()[0] - L
    u0 = np.clip(t / 2.0, -1.0, 1.0)
    u0[0], u0[-1] = -(1.0 - eps_b), 1.0 - eps_b
    if options is None:
        options = SolveOptions(max_iters=20000, tol=1e-12, step0=1e-3,
                               delta=Regularization(0.0 if p >= 2 else 1e-3))
    options = SolveOptions(**{**options.__dict__, "pinned": ("left", "right")})
    w = well.without_trace()
    try:
        out, log = minimize(grid, ScalarField(grid, u0), w, options)
    except NumericalFailure as exc:
        raise NumericalFailure(f"heteroclinic solve diverged: {exc}", exc.last_field) from exc
    e = energy(grid, out, w).total
    return Profile1D(t, out.values, e, log)
