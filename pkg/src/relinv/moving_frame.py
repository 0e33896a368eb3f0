"""Right moving frame for the diagonal PGL(3) action and its lift to M x R^*.

The cross-section fixes the first four points at (0,-1), (1,1), (1,0), (0,0).
The frame rho(x) is the homography sending the first four points of ``x``
there; it is obtained from the eight normalization equations, which are
linear in the matrix entries once denominators are cleared.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cocycle import Cochain, is_multiplier, jacobian_cochain
from .errors import DegenerateConfiguration, EvaluationError, RelinvError, SingularSystem
from .projective_core import (
    Homography,
    PointConfig,
    apply_config,
    canonical,
    delta,
    is_negligible,
    projective_distance,
)

CROSS_SECTION = ((0, -1), (1, 1), (1, 0), (0, 0))
FIBER_TARGET = 1
RANK_TOL = 1e-10


@dataclass(frozen=True)
class FrameResult:
    rho: Homography
    residual: float
    generic: bool = True


def _normalization_rows(cfg):
    rows = []
    for (x, y), (u, v) in zip(cfg.pts[:4], CROSS_SECTION):
        # unknowns ordered a1 a2 a3 b1 b2 b3 c1 c2 c3
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y, -u])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y, -v])
    return rows


def _null_vector(rows, exact):
    """One-dimensional kernel of an 8x9 system by Gauss-Jordan with partial pivoting."""
    a = [[Fraction(v) for v in r] if exact else [float(v) for v in r] for r in rows]
    nrows, ncols = len(a), len(a[0])
    largest = max(abs(v) for r in a for v in r)
    pivots = []
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        best = max(range(r, nrows), key=lambda i: abs(a[i][col]))
        p = a[best][col]
        if (p == 0) if exact else not abs(p) > RANK_TOL * largest:
            continue
        largest = max(largest, abs(p))
        a[r], a[best] = a[best], a[r]
        for i in range(nrows):
            if i != r and a[i][col] != 0:
                f = a[i][col] / p
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        raise SingularSystem(f"normalization system has rank {len(pivots)}, expected 8")
    f = free[0]
    one = Fraction(1) if exact else 1.0
    v = [0] * ncols
    v[f] = one
    for row, col in enumerate(pivots):
        v[col] = -a[row][f] / a[row][col]
    return v


def _require_frame_position(cfg):
    if cfg.n < 4:
        raise ValueError(f"a moving frame needs at least 4 points, got {cfg.n}")
    for t in ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)):
        if is_negligible(delta(cfg, *t), cfg, t, 2):
            name = "delta_" + "".join(map(str, t))
            raise DegenerateConfiguration(
                f"points {t} of the first four are collinear ({name} vanishes)", which=name)


def _residual(rho, cfg):
    moved = apply_config(rho, PointConfig(cfg.pts[:4], exact=cfg.exact))
    return max(abs(float(p - t)) for pt, tgt in zip(moved.pts, CROSS_SECTION)
               for p, t in zip(pt, tgt))


def solve_frame(cfg: PointConfig) -> FrameResult:
    """Moving frame of ``cfg``, returned in the c3 = 1 gauge when that is generic."""
    _require_frame_position(cfg)
    v = _null_vector(_normalization_rows(cfg), cfg.exact)
    rho, generic = canonical(Homography(np.reshape(np.array(v, dtype=object), (3, 3)),
                                        exact=cfg.exact))
    return FrameResult(rho, _residual(rho, cfg), generic)


def frame(cfg: PointConfig) -> Homography:
    """Shorthand for ``solve_frame(cfg).rho``."""
    return solve_frame(cfg).rho


def frame_closed_form(cfg: PointConfig, repeated_row_minor=False) -> Homography:
    """Frame from explicit rational formulas in the deltas (c3 = 1).

    The common denominator is
    ``d123 d234 |x1 y1; x4 y4| + d134 d124 |x2 y2; x3 y3|``.  With
    ``repeated_row_minor=True`` the second minor is taken as ``|x2 y2; x2 y2|``,
    which vanishes identically; the result is then not a frame, which the
    tests use as a negative control.
    """
    _require_frame_position(cfg)
    (x1, y1), (x2, y2), (x3, y3), (x4, y4) = cfg.pts[:4]
    d123, d124 = delta(cfg, 1, 2, 3), delta(cfg, 1, 2, 4)
    d134, d234 = delta(cfg, 1, 3, 4), delta(cfg, 2, 3, 4)
    m14 = x1 * y4 - x4 * y1
    m34 = x3 * y4 - x4 * y3
    second = 0 if repeated_row_minor else x2 * y3 - x3 * y2
    big = d123 * d234 * m14 + d134 * d124 * second
    p, q = d123 * d234, d123 * d124
    rows = [
        [(y1 - y4) * p / big, -(x1 - x4) * p / big, p * m14 / big],
        [-(y3 - y4) * q / big, (x3 - x4) * q / big, -q * m34 / big],
        [((y1 - y4) * p + (y2 - y3) * d124 * d134) / big,
         -((x1 - x4) * p + (x2 - x3) * d124 * d134) / big, 1],
    ]
    return Homography(rows, exact=cfg.exact)


def frame_equivariance_check(cfg: PointConfig, g: Homography) -> float:
    """Projective distance between rho(g.x) and rho(x) g^-1."""
    lhs = frame(apply_config(g, cfg))
    rhs = frame(cfg) @ g.inverse()
    return projective_distance(lhs, rhs)


def invariantize_config(cfg: PointConfig) -> PointConfig:
    """The normalization rho(x) . x of a configuration."""
    return apply_config(frame(cfg), cfg)


def invariantize_function(func, cfg: PointConfig):
    """Evaluate ``func`` at the normalized configuration; the result is an absolute invariant."""
    normalized = invariantize_config(cfg)
    try:
        return func(normalized)
    except RelinvError:
        raise
    except Exception as exc:
        raise EvaluationError(f"function failed at the normalized configuration: {exc}") from exc


# -- extended manifold --------------------------------------------------------

@dataclass(frozen=True)
class ExtendedPoint:
    """A configuration together with a nonzero fiber coordinate."""

    base: PointConfig
    fiber: float

    def __post_init__(self):
        if self.fiber == 0:
            raise ValueError("fiber coordinate must be nonzero")


@dataclass(frozen=True)
class ExtendedFrame:
    frame: FrameResult
    gauge: float


def extended_action(g: Homography, xp: ExtendedPoint, mu: Cochain, verify=False) -> ExtendedPoint:
    """Twisted action ``(g.x, fiber * mu(g, x))``.

    This is a group action only when ``mu`` is a multiplier; ``verify=True``
    runs a short seeded cocycle check on configurations of the same size first.
    """
    if verify:
        report = is_multiplier(mu, trials=10, n_points=xp.base.n)
        if not report.passed:
            raise ValueError(f"{mu.name} is not a multiplier: {report.counterexample}")
    return ExtendedPoint(apply_config(g, xp.base), xp.fiber * mu(g, xp.base))


def extended_frame(xp: ExtendedPoint, mu: Cochain | None = None) -> ExtendedFrame:
    """Frame of the lifted point (equal to the base frame) plus its gauge value.

    The gauge value ``fiber * mu(rho, base)`` is 1 exactly on the lifted
    cross-section and is constant along orbits of the twisted action.
    """
    mu = jacobian_cochain() if mu is None else mu
    result = solve_frame(xp.base)
    return ExtendedFrame(result, xp.fiber * mu(result.rho, xp.base))
