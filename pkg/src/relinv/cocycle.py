"""Multiplicative bar complex of the action: cochains, coboundaries, multiplier checks.

A k-cochain is a nowhere-vanishing function of k group elements and a
configuration.  Cochains are plain callables, ``c(g1, ..., gk, cfg)``; the
identities of the complex are checked by seeded random evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivisionByZero, UnsupportedArity
from .projective_core import (
    Homography,
    PointConfig,
    apply_config,
    canonical,
    jacobian_point,
    total_jacobian,
)
from .reports import PropertyReport
from .sampling import DEFAULT_SEED, make_rng, random_config, random_homography

MULTIPLIER_TOL = 1e-9


@dataclass(frozen=True)
class Cochain:
    """A k-cochain: ``fn(g1, ..., gk, cfg)`` returns a nonzero real."""

    arity: int
    fn: Callable
    name: str = "cochain"

    def __call__(self, *args):
        if len(args) != self.arity + 1:
            raise TypeError(f"{self.name} takes {self.arity} group elements and a configuration")
        return self.fn(*args)


def _divide(num, den, what):
    if den == 0 or (isinstance(den, float) and not math.isfinite(den)):
        raise DivisionByZero(f"{what} vanishes at the evaluation point")
    return num / den


def gauge(func, name="gauge") -> Cochain:
    """Wrap a function of the configuration as a 0-cochain."""
    return Cochain(0, func, name)


def constant(value=1.0, arity=1) -> Cochain:
    return Cochain(arity, lambda *args: value, f"const({value})")


def jacobian_cochain() -> Cochain:
    """The total Jacobian multiplier ``det(g)**n / prod s_i**3``."""
    return Cochain(1, total_jacobian, "total_jacobian")


def point_jacobian_cochain() -> Cochain:
    """``det(g) / s**3`` at the single point of a 1-point configuration."""
    return Cochain(1, lambda g, cfg: jacobian_point(g, cfg.pts[0]), "jacobian_point")


def determinant_cochain() -> Cochain:
    """``det(g)`` in the c3 = 1 gauge; not a multiplier of the point action."""
    return Cochain(1, lambda g, cfg: canonical(g)[0].det, "det")


def d0(f: Cochain) -> Cochain:
    """``(g, x) -> f(g.x) / f(x)``."""
    if f.arity != 0:
        raise UnsupportedArity("d0 acts on 0-cochains")

    def fn(g, cfg):
        return _divide(f(apply_config(g, cfg)), f(cfg), f.name)

    return Cochain(1, fn, f"d0({f.name})")


multiplier_from_gauge = d0


def d1(c: Cochain) -> Cochain:
    """``(g1, g2, x) -> c(g1, g2.x) c(g2, x) / c(g1 g2, x)``."""
    if c.arity != 1:
        raise UnsupportedArity("d1 acts on 1-cochains")

    def fn(g1, g2, cfg):
        num = c(g1, apply_config(g2, cfg)) * c(g2, cfg)
        return _divide(num, c(g1 @ g2, cfg), c.name)

    return Cochain(2, fn, f"d1({c.name})")


def dn(c: Cochain) -> Cochain:
    """General coboundary of a k-cochain, 1 <= k <= 3.

    ``(d c)(g1..g_{k+1}; x) = c(g2..g_{k+1}; x)
    * prod_i c(g1.., g_i g_{i+1}, ..g_{k+1}; x)**(-1)**i
    * c(g1..g_k; g_{k+1}.x)**(-1)**(k+1)``.
    """
    k = c.arity
    if not 1 <= k <= 3:
        raise UnsupportedArity(f"dn is implemented for arities 1..3, got {k}")

    def fn(*args):
        gs, cfg = list(args[:-1]), args[-1]
        num = [c(*gs[1:], cfg)]
        den = []
        for i in range(1, k + 1):
            merged = gs[:i - 1] + [gs[i - 1] @ gs[i]] + gs[i + 1:]
            (num if i % 2 == 0 else den).append(c(*merged, cfg))
        (num if (k + 1) % 2 == 0 else den).append(c(*gs[:k], apply_config(gs[k], cfg)))
        return _divide(math.prod(num), math.prod(den), c.name)

    return Cochain(k + 1, fn, f"d{k}({c.name})")


def _describe(gs, cfg):
    parts = [f"g{i + 1}={np.asarray(g.m, dtype=float).tolist()}" for i, g in enumerate(gs)]
    parts.append(f"x={np.asarray(cfg.pts, dtype=float).tolist()}")
    return "; ".join(parts)


def is_multiplier(c: Cochain, trials=100, seed=DEFAULT_SEED, n_points=4,
                  tol=MULTIPLIER_TOL) -> PropertyReport:
    """Seeded check of ``d1 c = 1`` and ``c(e, x) = 1``.

    Residuals are relative to 1.  The first failing triple is recorded.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    cocycle = d1(c)
    e = Homography.identity()
    worst = 0.0
    counterexample = None
    for _ in range(trials):
        g1, g2 = random_homography(rng), random_homography(rng)
        cfg = random_config(rng, n_points)
        try:
            r = max(abs(cocycle(g1, g2, cfg) - 1.0), abs(c(e, cfg) - 1.0))
        except ArithmeticError as exc:
            r = math.inf
            note = f"error={exc}"
        else:
            r = math.inf if math.isnan(r) else float(r)
            note = f"residual={r:.3e}"
        if not r <= tol and counterexample is None:
            counterexample = _describe((g1, g2), cfg) + "; " + note
        worst = max(worst, r)
    return PropertyReport(f"is_multiplier({c.name})", trials, seed, float(worst),
                          bool(worst <= tol), tol, counterexample)


def gauge_from_multiplier(mu: Cochain, frame: Callable[[PointConfig], Homography] | None = None) -> Cochain:
    """Gauge ``f(x) = 1 / mu(rho(x), x)`` with ``d0 f = mu``.

    ``frame`` maps a configuration to its moving frame; the default is the
    projective frame from :mod:`relinv.moving_frame`.
    """
    if mu.arity != 1:
        raise UnsupportedArity("gauge_from_multiplier expects a 1-cochain")
    if frame is None:
        from .moving_frame import frame

    def fn(cfg):
        return _divide(1, mu(frame(cfg), cfg), mu.name)

    return Cochain(0, fn, f"gauge({mu.name})")
