"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary of the pytest run.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from relinv import checks
from relinv.image_integral import (
    ImageGrid,
    IntegralSpec,
    blob_image,
    integral_invariant,
    invariance_experiment,
    warped_support_inside,
)
from relinv.invariants import (
    generator_rank,
    invariantized_jacobian_closed,
    invariantized_jacobian_direct,
)
from relinv.projective_core import Homography, PointConfig, delta
from relinv.sampling import DEFAULT_SEED, make_rng, random_config

from acceptance_log import record
from oracles import lattice_quadrature


def _summary(report):
    return f"{report.name}: {report.trials} trials, max residual {report.max_residual:.2e} (tol {report.tolerance:g})"


def test_criterion_01_cocycle_identity():
    start = time.perf_counter()
    report = checks.cocycle_identity(trials=1000, ns=(4, 5, 6), tol=1e-9)
    elapsed = time.perf_counter() - start
    ok = report.passed and elapsed < 5.0
    record(1, ok, f"{_summary(report)}, n in (4,5,6), {elapsed:.2f} s (limit 5 s)")
    assert ok, report.counterexample


def test_criterion_02_frame_equivariance_and_idempotence():
    eq = checks.frame_equivariance(trials=200, tol=1e-8)
    idem = checks.idempotence(trials=200, tol=1e-9)
    ok = eq.passed and idem.passed
    record(2, ok, f"{_summary(eq)}; {_summary(idem)}")
    assert ok, eq.counterexample or idem.counterexample


def test_criterion_03_weight_law():
    law = checks.weight_law(trials=200, tol=1e-8)
    again = checks.repeated_invariantization(trials=200, tol=1e-10)
    ok = law.passed and again.passed
    record(3, ok, f"{_summary(law)}; {_summary(again)}")
    assert ok, law.counterexample or again.counterexample


def test_criterion_04_closed_form_vs_direct():
    closed = checks.closed_vs_direct(trials=100, ns=(5, 6), tol=1e-8)
    rng = make_rng(DEFAULT_SEED + 4)
    worst4 = 0.0
    for _ in range(100):
        cfg = random_config(rng, 4)
        p = abs(delta(cfg, 1, 2, 3) * delta(cfg, 1, 2, 4) * delta(cfg, 1, 3, 4) * delta(cfg, 2, 3, 4))
        for value in (invariantized_jacobian_direct(cfg), invariantized_jacobian_closed(cfg)):
            worst4 = max(worst4, abs(abs(value) * p - 1))
    cross = PointConfig([[Fraction(a), Fraction(b)] for a, b in [(0, -1), (1, 1), (1, 0), (0, 0)]], exact=True)
    exact = (invariantized_jacobian_direct(cross), invariantized_jacobian_closed(cross))
    ok = closed.passed and worst4 < 1e-8 and exact == (1, 1)
    record(4, ok, f"{_summary(closed)}; n=4 vs |P|^-1 max rel err {worst4:.2e}; "
                  f"cross-section exact values {exact[0]}, {exact[1]}")
    assert ok


def test_criterion_05_fundamental_invariants():
    inv = checks.fundamental_invariance(trials=100, tol=1e-8)
    rng = make_rng(DEFAULT_SEED + 5)
    ranks_ok = True
    smallest = math.inf
    for k in range(20):
        n = (5, 6, 7)[k % 3]
        rank, sv = generator_rank(random_config(rng, n))
        ranks_ok &= rank == 2 * (n - 4) and sv > 1e-6
        smallest = min(smallest, sv)
    ok = inv.passed and ranks_ok
    record(5, ok, f"{_summary(inv)}; full rank at 20 points, smallest singular value {smallest:.2e}")
    assert ok


def test_criterion_06_transformation_laws():
    report = checks.transformation_laws(trials=200, tol=1e-9)
    record(6, report.passed, f"{_summary(report)} (delta, mixed sum, 3-point cubed law)")
    assert report.passed, report.counterexample


def test_criterion_07_normal_form():
    report = checks.normal_form(trials=100, tol=1e-7)
    record(7, report.passed, f"{_summary(report)}, weights -2..2 x {len(checks.EXPRESSIONS)} expressions")
    assert report.passed, report.counterexample


def test_criterion_08_classification_round_trip():
    report = checks.gauge_round_trip(trials=100, ns=(4, 5), tol=1e-8)
    record(8, report.passed, _summary(report))
    assert report.passed, report.counterexample


def _small_warp(img):
    rng = make_rng(DEFAULT_SEED)
    while True:
        g = Homography(np.eye(3) + rng.uniform(-0.1, 0.1, size=(3, 3)))
        if warped_support_inside(img, g):
            return g


def test_criterion_09_integral_invariance():
    img = blob_image(64)
    spec = IntegralSpec(4, samples=10**6, seed=DEFAULT_SEED)
    g = _small_warp(img)
    start = time.perf_counter()
    report = invariance_experiment(img, spec, g, workers=1)
    elapsed = time.perf_counter() - start
    single = integral_invariant(img, spec, workers=1)
    parallel = integral_invariant(img, spec, workers=4)
    same = single.value == parallel.value and single.stderr == parallel.stderr
    ok = report.passed and elapsed < 60 and same
    band = max(3 * report.combined_err, 0.05 * abs(report.value))
    record(9, ok, f"value {report.value:.4e} vs warped {report.warped_value:.4e}, |diff| {report.difference:.3e} "
                  f"< band {band:.3e} (3 x combined stderr {report.combined_err:.3e}); {elapsed:.1f} s "
                  f"single-threaded; 4 workers bitwise equal: {same}")
    assert ok


def synthetic_8x8():
    img = ImageGrid(np.zeros((8, 8)))
    xs, ys = img.pixel_centers()
    return ImageGrid(np.exp(-((xs - 0.5) ** 2 + (ys - 0.45) ** 2) / 0.08))


def test_criterion_10_quadrature_oracle():
    img = synthetic_8x8()
    est = integral_invariant(img, IntegralSpec(4, samples=10**6, seed=DEFAULT_SEED))
    full = lattice_quadrature(img.intensities, img.bounds)
    coarse = lattice_quadrature(img.intensities, img.bounds, stride=2)
    quad_err = abs(full - coarse)
    combined = math.hypot(est.stderr, quad_err)
    diff = abs(est.value - full)
    ok = diff < 3 * combined
    record(10, ok, f"MC {est.value:.4e} +/- {est.stderr:.3e} vs lattice {full:.4e} (+/- {quad_err:.3e}); "
                   f"|diff| = {diff / combined:.2f} combined error bars; MC/lattice ratio {est.value / full:.3g}")
    assert ok
