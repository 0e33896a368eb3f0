"""Seeded property suites behind ``relinv check``.

Each check draws ``trials`` random instances from its own seeded stream and
returns a :class:`PropertyReport` with the largest residual seen and the
first failing instance.  Suites are lists of checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import cocycle as co
from .moving_frame import (
    CROSS_SECTION,
    ExtendedPoint,
    extended_action,
    extended_frame,
    frame,
    frame_equivariance_check,
    invariantize_config,
    solve_frame,
)
from .projective_core import (
    PointConfig,
    apply_config,
    cubed_delta_check,
    delta_transform_check,
    mixed_transform_check,
    total_jacobian,
)
from .invariants import (
    compile_expression,
    fundamental_invariants,
    generator_rank,
    invariantized_jacobian_closed,
    invariantized_jacobian_direct,
    relative_invariant,
)
from .reports import PropertyReport
from .sampling import DEFAULT_SEED, make_rng, random_config, random_homography, random_pair

SUITES = ("cocycle", "frame", "weight", "extended", "all")

# Expression family used for the normal-form check.
EXPRESSIONS = ("1", "I1_5", "I2_5 + 2", "I1_5 * I2_5 - 0.5", "1 / (1 + I1_5 ** 2)")
WEIGHTS = (-2, -1, 0, 1, 2)


def _rel(a, b):
    a, b = float(a), float(b)
    return abs(a - b) / max(abs(b), 1e-300)


def _describe(g=None, cfg=None, **extra):
    parts = []
    if g is not None:
        parts.append(f"g={np.asarray(g.m, dtype=float).tolist()}")
    if cfg is not None:
        parts.append(f"x={np.asarray(cfg.pts, dtype=float).tolist()}")
    parts.extend(f"{k}={v}" for k, v in extra.items())
    return "; ".join(parts)


def run_property(name, trial, trials, seed, tol) -> PropertyReport:
    """Run ``trial(rng) -> (residual, description)`` exactly ``trials`` times."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    worst = 0.0
    counterexample = None
    for _ in range(trials):
        try:
            residual, where = trial(rng)
            residual = math.inf if math.isnan(residual) else float(residual)
        except ArithmeticError as exc:
            residual, where = math.inf, f"error={exc}"
        if not residual <= tol and counterexample is None:
            counterexample = f"{where}; residual={residual:.3e}"
        worst = max(worst, residual)
    return PropertyReport(name, trials, seed, worst, bool(worst <= tol), tol, counterexample)


# -- cocycle -----------------------------------------------------------------

def cocycle_identity(trials=1000, seed=DEFAULT_SEED, ns=(4, 5, 6), tol=1e-9, mu=None):
    """``d1(mu) = 1`` on random (g1, g2, x) with n cycling through ``ns``."""
    mu = co.jacobian_cochain() if mu is None else mu
    check = co.d1(mu)
    state = {"k": 0}

    def trial(rng):
        n = ns[state["k"] % len(ns)]
        state["k"] += 1
        g1, g2 = random_homography(rng), random_homography(rng)
        cfg = random_config(rng, n)
        where = _describe(cfg=cfg, g1=np.asarray(g1.m).tolist(), g2=np.asarray(g2.m).tolist())
        return abs(check(g1, g2, cfg) - 1.0), where

    return run_property(f"cocycle_identity({mu.name})", trial, trials, seed, tol)


def transformation_laws(trials=200, seed=DEFAULT_SEED, tol=1e-9):
    """Determinant, mixed-sum and 3-point cubed transformation laws."""

    def trial(rng):
        g, cfg = random_pair(rng, 5)
        _, tri = random_pair(rng, 3)
        r = max(delta_transform_check(g, cfg, 1, 2, 3), delta_transform_check(g, cfg, 2, 4, 5),
                mixed_transform_check(g, cfg, 5), cubed_delta_check(g, tri))
        return r, _describe(g, cfg)

    return run_property("transformation_laws", trial, trials, seed, tol)


def cocycle_suite(trials=None, seed=DEFAULT_SEED, mu=None):
    return [cocycle_identity(trials or 1000, seed, mu=mu),
            transformation_laws(trials or 200, seed + 1)]


# -- frame -------------------------------------------------------------------

def frame_equivariance(trials=200, seed=DEFAULT_SEED, n=5, tol=1e-8):
    def trial(rng):
        g, cfg = random_pair(rng, n)
        return frame_equivariance_check(cfg, g), _describe(g, cfg)

    return run_property("frame_equivariance", trial, trials, seed, tol)


def idempotence(trials=200, seed=DEFAULT_SEED, n=5, tol=1e-9):
    """``iota(iota(x)) = iota(x)`` coordinatewise."""

    def trial(rng):
        cfg = random_config(rng, n)
        once = invariantize_config(cfg)
        twice = invariantize_config(once)
        return float(np.max(np.abs(np.asarray(twice.pts) - np.asarray(once.pts)))), _describe(cfg=cfg)

    return run_property("invariantization_idempotence", trial, trials, seed, tol)


def frame_residual(trials=200, seed=DEFAULT_SEED, n=5, tol=1e-9):
    """The frame sends the first four points onto the cross-section."""

    def trial(rng):
        cfg = random_config(rng, n)
        return solve_frame(cfg).residual, _describe(cfg=cfg)

    return run_property("frame_residual", trial, trials, seed, tol)


def frame_suite(trials=None, seed=DEFAULT_SEED):
    t = trials or 200
    return [frame_equivariance(t, seed), idempotence(t, seed + 1), frame_residual(t, seed + 2)]


# -- weight ------------------------------------------------------------------

def weight_law(trials=200, seed=DEFAULT_SEED, n=5, tol=1e-8):
    """``mu(rho(gx), gx) * mu(g, x) = mu(rho(x), x)`` for the total Jacobian."""

    def trial(rng):
        g, cfg = random_pair(rng, n)
        moved = apply_config(g, cfg)
        lhs = invariantized_jacobian_direct(moved) * total_jacobian(g, cfg)
        return _rel(lhs, invariantized_jacobian_direct(cfg)), _describe(g, cfg)

    return run_property("weight_minus_one_law", trial, trials, seed, tol)


def repeated_invariantization(trials=200, seed=DEFAULT_SEED, n=5, tol=1e-10):
    """The invariantized Jacobian of a normalized configuration is 1."""

    def trial(rng):
        cfg = random_config(rng, n)
        return abs(invariantized_jacobian_direct(invariantize_config(cfg)) - 1.0), _describe(cfg=cfg)

    return run_property("repeated_invariantization", trial, trials, seed, tol)


def closed_vs_direct(trials=100, seed=DEFAULT_SEED, ns=(5, 6), tol=1e-8):
    def trial(rng):
        n = ns[int(rng.integers(len(ns)))]
        cfg = random_config(rng, n)
        return _rel(abs(invariantized_jacobian_closed(cfg)), abs(invariantized_jacobian_direct(cfg))), \
            _describe(cfg=cfg)

    return run_property("closed_vs_direct", trial, trials, seed, tol)


def fundamental_invariance(trials=100, seed=DEFAULT_SEED, n=6, tol=1e-8):
    def trial(rng):
        g, cfg = random_pair(rng, n)
        a1, a2 = fundamental_invariants(cfg)
        b1, b2 = fundamental_invariants(apply_config(g, cfg))
        return max(_rel(b, a) for a, b in zip(a1 + a2, b1 + b2)), _describe(g, cfg)

    return run_property("fundamental_invariance", trial, trials, seed, tol)


def generator_independence(trials=20, seed=DEFAULT_SEED, ns=(5, 6, 7), tol=1e-6):
    """Residual is ``max(rank deficit, tol - smallest singular value)`` clipped at 0."""

    def trial(rng):
        n = ns[int(rng.integers(len(ns)))]
        cfg = random_config(rng, n)
        rank, smallest = generator_rank(cfg)
        deficit = 2 * (n - 4) - rank
        return (float(deficit) if deficit else max(0.0, tol - smallest)), _describe(cfg=cfg, rank=rank)

    return run_property("generator_independence", trial, trials, seed, 0.0)


def normal_form(trials=100, seed=DEFAULT_SEED, n=5, tol=1e-7):
    """``A(g.x) = J(g, x)**w A(x)`` for ``A = J_inv**-w * F(I)``.

    Trials cycle through every pair of weight and expression.
    """
    funcs = [compile_expression(e) for e in EXPRESSIONS]
    state = {"k": 0}

    def trial(rng):
        k = state["k"]
        state["k"] += 1
        w = WEIGHTS[k % len(WEIGHTS)]
        e = (k // len(WEIGHTS)) % len(funcs)
        g, cfg = random_pair(rng, n)
        before = relative_invariant(w, funcs[e], cfg)
        after = relative_invariant(w, funcs[e], apply_config(g, cfg))
        return _rel(after, total_jacobian(g, cfg) ** w * before), \
            _describe(g, cfg, weight=w, expr=EXPRESSIONS[e])

    return run_property("relative_normal_form", trial, trials, seed, tol)


def cross_section_exact():
    """Exact-rational oracle: on the cross-section every invariantized value is 1."""
    cfg = PointConfig([[Fraction(a), Fraction(b)] for a, b in CROSS_SECTION], exact=True)
    values = (invariantized_jacobian_direct(cfg), invariantized_jacobian_closed(cfg))
    residual = max(abs(float(v - 1)) for v in values)
    return PropertyReport("cross_section_exact", 1, 0, residual, residual == 0, 0.0,
                          None if residual == 0 else f"values={values}")


def weight_suite(trials=None, seed=DEFAULT_SEED):
    return [weight_law(trials or 200, seed), repeated_invariantization(trials or 200, seed + 1),
            closed_vs_direct(trials or 100, seed + 2), fundamental_invariance(trials or 100, seed + 3),
            generator_independence(trials or 20, seed + 4), normal_form(trials or 100, seed + 5),
            cross_section_exact()]


# -- extended ----------------------------------------------------------------

def gauge_round_trip(trials=100, seed=DEFAULT_SEED, ns=(4, 5), tol=1e-8):
    """``d0(gauge_from_multiplier(mu)) = mu``; the residual allows one global sign."""
    mu = co.jacobian_cochain()
    rebuilt = co.d0(co.gauge_from_multiplier(mu))
    signs = set()

    def trial(rng):
        n = ns[int(rng.integers(len(ns)))]
        g, cfg = random_pair(rng, n)
        a, b = rebuilt(g, cfg), mu(g, cfg)
        signs.add(np.sign(a) == np.sign(b))
        r = _rel(abs(a), abs(b)) if len(signs) == 1 else math.inf
        return r, _describe(g, cfg)

    return run_property("gauge_round_trip", trial, trials, seed, tol)


def extended_gauge(trials=100, seed=DEFAULT_SEED, n=5, tol=1e-8):
    """The gauge value of the lifted frame is constant along twisted orbits."""
    mu = co.jacobian_cochain()

    def trial(rng):
        g, cfg = random_pair(rng, n)
        xp = ExtendedPoint(cfg, float(rng.uniform(0.5, 2.0)) * float(rng.choice([-1, 1])))
        before = extended_frame(xp, mu).gauge
        after = extended_frame(extended_action(g, xp, mu), mu).gauge
        return _rel(after, before), _describe(g, cfg, fiber=xp.fiber)

    return run_property("extended_gauge_invariance", trial, trials, seed, tol)


def lifted_cross_section(trials=100, seed=DEFAULT_SEED, n=5, tol=1e-9):
    """Normalizing with the gauge ``1 / mu(rho, x)`` lands on fiber value 1."""
    mu = co.jacobian_cochain()

    def trial(rng):
        cfg = random_config(rng, n)
        rho = frame(cfg)
        xp = ExtendedPoint(cfg, 1.0 / mu(rho, cfg))
        return abs(extended_frame(xp, mu).gauge - 1.0), _describe(cfg=cfg)

    return run_property("lifted_cross_section", trial, trials, seed, tol)


def extended_suite(trials=None, seed=DEFAULT_SEED):
    t = trials or 100
    return [gauge_round_trip(t, seed), extended_gauge(t, seed + 1), lifted_cross_section(t, seed + 2)]


def faulty_multiplier() -> co.Cochain:
    """A 1-cochain that is not a multiplier; used as a negative control."""
    return co.Cochain(1, lambda g, cfg: total_jacobian(g, cfg) * (1.0 + float(cfg.pts[0][0]) ** 2),
                      "faulty_multiplier")


def run_suite(name, trials=None, seed=DEFAULT_SEED, inject_fault=False):
    """Reports for one named suite (or all of them)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    mu = faulty_multiplier() if inject_fault else None
    reports = []
    if name in ("cocycle", "all"):
        reports += cocycle_suite(trials, seed, mu)
    if name in ("frame", "all"):
        reports += frame_suite(trials, seed)
    if name in ("weight", "all"):
        reports += weight_suite(trials, seed)
    if name in ("extended", "all"):
        reports += extended_suite(trials, seed)
    return reports
