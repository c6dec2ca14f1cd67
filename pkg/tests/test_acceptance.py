"""Acceptance criteria AC-1 .. AC-9, one PASS/FAIL line each (repeated in the terminal summary)."""

import math
import time

import numpy as np
from scipy.integrate import quad

from conftest import record
from tracephase.domain import HalfSpaceGrid, ScalarField, half_ball_mask, reflect_even
from tracephase.energy import bulk_terms, energy, energy_ball, functional
from tracephase.estimates import (RecursionParams, barrier_truncation, epsilon_bound, k_threshold,
                                  recursion_check, sample_admissible_sequences, scan)
from tracephase.model import scaled_well, standard_well, validate_wells
from tracephase.solver import heteroclinic_1d, q_minimality_audit

O = (0.0, 0.0)
RADII = [8.0, 16.0, 32.0, 64.0]


def test_ac1_heteroclinic_oracle():
    start = time.perf_counter()
    prof = heteroclinic_1d(2.0, standard_well(2.0), L=10.0, h=0.05)
    elapsed = time.perf_counter() - start
    exact, _ = quad(lambda s: 2.0 / math.cosh(s) ** 4, -40.0, 40.0)
    sup = float(np.max(np.abs(prof.u - np.tanh(prof.t))))
    rel = abs(prof.energy - exact) / exact
    ok = sup <= 2e-2 and rel <= 0.01 and elapsed < 10
    assert record("AC-1", ok, f"sup|u-tanh|={sup:.2e} energy={prof.energy:.6f} "
                              f"(8/3 rel err {rel:.2e}) time={elapsed:.2f}s")


def test_ac2_gradient_exactness():
    rng = np.random.default_rng(2024)
    grid = HalfSpaceGrid(2, 1.0 / 31, (32, 32))
    cases = [(2.0, 0.0, 1e-5), (1.5, 1e-6, 1e-3), (3.0, 1e-6, 1e-3)]
    worst = {p: 0.0 for p, _, _ in cases}
    start = time.perf_counter()
    for _ in range(20):
        u = rng.uniform(-1.0, 1.0, grid.shape)
        d = rng.standard_normal(grid.shape)
        for p, delta, _ in cases:
            fun = functional(grid, standard_well(p), None, delta)
            _, g = fun.value_and_grad(u)
            e = 1e-6
            fd = (fun.value(u + e * d) - fun.value(u - e * d)) / (2 * e)
            an = float(np.sum(g * d))
            worst[p] = max(worst[p], abs(an - fd) / max(abs(fd), 1e-300))
    elapsed = time.perf_counter() - start
    ok = all(worst[p] <= tol for p, _, tol in cases) and elapsed < 30
    detail = " ".join(f"p={p}:{worst[p]:.1e}" for p, _, _ in cases)
    assert record("AC-2", ok, f"max rel err {detail} time={elapsed:.2f}s")


def test_ac3_energy_growth(planar_run):
    grid, well, field, log = planar_run
    rep = scan(grid, field, well, 0.0, O, RADII)
    a = rep.fitted_exponent_E
    e8, e16 = rep.E[0], rep.E[1]
    ok = (log.converged and a is not None and 0.85 <= a <= 1.15 and 1.6 <= e16 / e8 <= 2.4
          and log.elapsed < 180)
    energies = ", ".join(f"{e:.2f}" for e in rep.E)
    assert record("AC-3", ok, f"E_R=[{energies}] exponent={a:.4f} E16/E8={e16 / e8:.3f} "
                              f"iters={len(log.rows) - 1} time={log.elapsed:.1f}s")


def test_ac4_density_estimate(planar_run):
    grid, well, field, _ = planar_run
    parts = []
    ok = True
    for side in ("above", "below"):
        rep = scan(grid, field, well, 0.0, O, RADII, side=side)
        a, dr = rep.fitted_exponent_V, rep.density_ratio(8.0)
        ok &= a is not None and 1.9 <= a <= 2.1 and dr is not None and dr >= 0.4
        parts.append(f"{side}: V-exponent={a:.4f} density ratio={dr:.4f}")
    assert record("AC-4", ok, "; ".join(parts))


def test_ac5_q_minimality_audit(planar_run):
    grid, well, field, _ = planar_run
    start = time.perf_counter()
    good = q_minimality_audit(grid, field, well, 1.0 + 1e-3, 100, 0.05, 0,
                              pinned=("left", "right"))
    noisy = np.clip(field.values + np.random.default_rng(1).normal(0.0, 0.1, grid.shape), -1, 1)
    bad = q_minimality_audit(grid, ScalarField(grid, noisy), well, 1.0, 100, 0.05, 0,
                             pinned=("left", "right"))
    elapsed = time.perf_counter() - start
    ok = not good.violations and len(good.records) == 100 and bad.violations and elapsed < 60
    assert record("AC-5", ok, f"converged: {len(good.violations)} violations, worst ratio "
                              f"{good.worst_ratio:.6f}; corrupted at Q=1: {len(bad.violations)} "
                              f"violations; time={elapsed:.1f}s")


def brute_force_hypotheses(A, V, C, eps, n):
    """Direct scan of the lemma's hypotheses, written independently of the checker."""
    c = min(1.0 / C, (2.0 * C * math.factorial(n + 1)) ** (-n))
    bound = min(c / (4 * C), c ** (1 - 1 / n) * (2 ** (1 / n) - 1) / (2 * C))
    if eps > bound * (1 - 1e-12):
        return False
    for k in range(1, len(V) + 1):
        if V[k - 1] < 1 / C:
            return False
        if k < len(V):
            grow = (V[k] - V[k - 1]) + (A[k] - A[k - 1]) + eps * k ** (n - 1)
            if V[k - 1] ** (1 - 1 / n) + A[k - 1] > C * grow:
                return False
    return True


def test_ac6_recursion_fuzz():
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    accepted = rejected = violations = nonvacuous = disagreements = 0
    while accepted < 1000:
        n = int(rng.choice([2, 3]))
        C = float(rng.uniform(1.0, 4.0))
        eps = epsilon_bound(C, n) * float(rng.uniform(0.01, 1.0)) * (1 - 1e-9)
        length = k_threshold(C, n) + int(rng.integers(1, 60))
        A, V = sample_admissible_sequences(rng, n, C, eps, length)
        if not brute_force_hypotheses(A, V, C, eps, n):
            rejected += 1
            continue
        accepted += 1
        verdict = recursion_check(RecursionParams(C, eps, n, tuple(A), tuple(V)))
        disagreements += not verdict.hypotheses_hold
        c = min(1.0 / C, (2.0 * C * math.factorial(n + 1)) ** (-n))
        k0 = math.ceil(4 * C * math.factorial(n + 1))
        direct = all(A[k - 1] + V[k - 1] >= c * k ** n for k in range(k0, length + 1))
        violations += (verdict.conclusion_holds is not True) or not direct
        nonvacuous += not verdict.vacuous
    C = 2.0
    fixture = recursion_check(RecursionParams(C, epsilon_bound(C, 2) * 0.5, 2, (0.0,) * 20,
                                              (1.0 / C,) * 20))
    fixture_ok = (not fixture.hypotheses_hold and fixture.first_hypothesis_failure == 1
                  and fixture.conclusion_holds is None)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and disagreements == 0 and fixture_ok and elapsed < 10
    assert record("AC-6", ok, f"{accepted} instances ({rejected} rejected, {nonvacuous} "
                              f"non-vacuous), {violations} conclusion violations, V=1/C fixture "
                              f"flagged={fixture_ok}; time={elapsed:.2f}s")


def test_ac7_reflection_identity():
    rng = np.random.default_rng(7)
    grid = HalfSpaceGrid.from_bounds((-6.0, 0.0), (6.0, 6.0), 0.125)
    worst = 0.0
    for _ in range(10):
        f = ScalarField(grid, rng.uniform(-1.0, 1.0, grid.shape))
        R = float(rng.uniform(1.0, 5.5))
        x_o = (float(rng.uniform(-0.5, 0.5)), 0.0)
        well = standard_well(float(rng.choice([1.5, 2.0, 3.0])))
        delta = 1e-6 if well.p < 2 else 0.0
        half = energy(grid, f, well, half_ball_mask(grid, x_o, R), delta)
        m = reflect_even(f)
        full = bulk_terms(m.values, grid.h, m.ball_cells(x_o, R), well, delta)
        want = 2 * (half.bulk_gradient + half.bulk_potential)
        worst = max(worst, abs(full.bulk_gradient + full.bulk_potential - want) / want)
    assert record("AC-7", worst <= 1e-12, f"max rel err {worst:.2e} over 10 fields")


def test_ac8_truncation_locality(planar_run):
    grid, well, field, _ = planar_run
    inner, scaled = [], []
    for R in (8.0, 16.0, 32.0):
        tc = barrier_truncation(grid, field, well, O, R)
        inner.append(tc.inner_energy)
        scaled.append(energy_ball(grid, tc.field, well, O, R).total / R)
    band = max(scaled) / min(scaled)
    ok = max(inner) <= 1e-12 and band <= 2.0
    ratios = ", ".join(f"{s:.3f}" for s in scaled)
    assert record("AC-8", ok, f"max inner energy {max(inner):.1e}; E_R(w)/R=[{ratios}] "
                              f"band {band:.3f}")


def test_ac9_well_validation():
    std = [validate_wells(standard_well(p), 10_000).passed for p in (1.5, 2.0, 3.0)]
    fail1 = not validate_wells(scaled_well(2.0, g_scale=2.0, C_o=1.0), 10_000).passed
    pass2 = validate_wells(scaled_well(2.0, g_scale=2.0, C_o=2.0), 10_000).passed
    ok = all(std) and fail1 and pass2
    assert record("AC-9", ok, f"standard p=1.5,2,3 pass={std}; doubled G fails at C_o=1: "
                              f"{fail1}, passes at C_o=2: {pass2}")
