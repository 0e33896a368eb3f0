"""The planar projective group PGL(3, R) acting diagonally on point configurations.

Everything here is dtype-generic: a :class:`Homography` or :class:`PointConfig`
built with ``exact=True`` stores :class:`fractions.Fraction` entries in an
object array and every formula below then evaluates in exact rational
arithmetic.  That mode exists for oracle cross-checks on small inputs; the
main path is float64.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DegenerateConfiguration, ParseError, PointAtInfinity, SingularHomography

# Relative threshold used to decide that a determinant/denominator is zero.
ZERO_TOL = 1e-10
# |c3| above this (relative to the Frobenius norm) selects the c3 = 1 gauge.
GAUGE_TOL = 1e-9
INFINITY_TOL = 1e-12


def _as_array(values, exact, shape):
    if exact:
        arr = np.empty(shape, dtype=object)
        flat = np.asarray(values, dtype=object).reshape(-1)
        arr.reshape(-1)[:] = [Fraction(v) for v in flat]
    else:
        arr = np.array(values, dtype=float).reshape(shape)
    arr.flags.writeable = False
    return arr


def _is_exact(arr):
    return arr.dtype == object


def _norm(values):
    return math.sqrt(sum(float(v) ** 2 for v in np.asarray(values).reshape(-1)))


def det3(m):
    """Determinant of a 3x3 array by cofactor expansion (works on Fractions)."""
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


class Point2(NamedTuple):
    x: float
    y: float


class Homography:
    """A 3x3 matrix taken modulo nonzero scale.

    Rows are ``a = (a1, a2, a3)``, ``b = (b1, b2, b3)``, ``c = (c1, c2, c3)``
    and the point action is ``(x, y) -> (a.(x,y,1) / s, b.(x,y,1) / s)`` with
    ``s = c.(x,y,1)``.  Equality is projective: matrices that differ by a
    nonzero factor compare equal.
    """

    __slots__ = ("m",)

    def __init__(self, m, exact=None):
        if exact is None:
            exact = isinstance(m, np.ndarray) and m.dtype == object
        arr = _as_array(m, exact, (3, 3))
        d = det3(arr)
        if exact:
            if d == 0:
                raise SingularHomography("homography matrix is singular")
        elif not abs(d) > 1e-12 * _norm(arr) ** 3:
            raise SingularHomography(f"homography matrix is singular (det={d:.3e})")
        object.__setattr__(self, "m", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Homography is immutable")

    @classmethod
    def identity(cls, exact=False):
        return cls(np.eye(3), exact=exact)

    @property
    def exact(self):
        return _is_exact(self.m)

    @property
    def det(self):
        return det3(self.m)

    def __matmul__(self, other):
        if not isinstance(other, Homography):
            return NotImplemented
        return Homography(self.m @ other.m, exact=self.exact or other.exact)

    def inverse(self):
        m = self.m
        adj = [[m[(j + 1) % 3][(i + 1) % 3] * m[(j + 2) % 3][(i + 2) % 3]
                - m[(j + 1) % 3][(i + 2) % 3] * m[(j + 2) % 3][(i + 1) % 3]
                for j in range(3)] for i in range(3)]
        d = self.det
        return Homography([[v / d for v in row] for row in adj], exact=self.exact)

    def scaled(self, factor):
        return Homography(self.m * factor, exact=self.exact)

    def normalized(self):
        """Representative whose largest-magnitude entry equals 1."""
        flat = self.m.reshape(-1)
        pivot = max(flat, key=abs)
        return self.scaled(1 / pivot) if self.exact else self.scaled(1.0 / pivot)

    def __eq__(self, other):
        if not isinstance(other, Homography):
            return NotImplemented
        return bool(np.array_equal(self.normalized().m, other.normalized().m))

    def __hash__(self):
        return hash(tuple(self.normalized().m.reshape(-1).tolist()))

    def __repr__(self):
        rows = ", ".join("(" + ", ".join(str(v) for v in row) + ")" for row in self.m.tolist())
        return f"Homography({rows})"


def canonical(g: Homography):
    """Return ``(representative, generic)`` in the c3 = 1 gauge.

    When c3 is (relatively) tiny the element is flagged non-generic and row c
    is scaled so that its largest-magnitude entry is 1 instead.
    """
    m = g.m
    c3 = m[2][2]
    if g.exact:
        if c3 != 0:
            return g.scaled(1 / c3), True
    elif abs(c3) > GAUGE_TOL * _norm(m):
        return g.scaled(1.0 / c3), True
    pivot = max(m[2], key=abs)
    return (g.scaled(1 / pivot) if g.exact else g.scaled(1.0 / pivot)), False


def projective_distance(g: Homography, h: Homography) -> float:
    """Max-entry distance between unit-Frobenius representatives, minimized over sign."""
    a = np.asarray(g.m, dtype=float)
    b = np.asarray(h.m, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))


class PointConfig:
    """An ordered configuration of planar points, stored as an ``(n, 2)`` array.

    Indices in the public API (``delta`` and friends) are 1-based.
    """

    __slots__ = ("pts",)

    def __init__(self, pts, exact=None):
        if exact is None:
            exact = isinstance(pts, np.ndarray) and pts.dtype == object
        raw = np.asarray(pts, dtype=object if exact else float)
        if raw.ndim != 2 or raw.shape[1] != 2 or raw.shape[0] < 1:
            raise ValueError(f"expected an (n, 2) array of points, got shape {raw.shape}")
        arr = _as_array(raw, exact, raw.shape)
        if not exact and not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "pts", arr)

    def __setattr__(self, name, value):
        raise AttributeError("PointConfig is immutable")

    @property
    def n(self):
        return self.pts.shape[0]

    @property
    def exact(self):
        return _is_exact(self.pts)

    def __len__(self):
        return self.n

    def __getitem__(self, index):
        x, y = self.pts[index]
        return Point2(x, y)

    def __iter__(self):
        for x, y in self.pts:
            yield Point2(x, y)

    def replace(self, index, point):
        """Copy with the point at 0-based ``index`` replaced."""
        pts = self.pts.copy()
        pts[index] = point
        return PointConfig(pts, exact=self.exact)

    def permuted(self, order):
        return PointConfig(self.pts[list(order)], exact=self.exact)

    def as_float(self):
        return PointConfig(np.asarray(self.pts, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, PointConfig):
            return NotImplemented
        return bool(np.array_equal(self.pts, other.pts))

    def __hash__(self):
        return hash(tuple(self.pts.reshape(-1).tolist()))

    def __repr__(self):
        return f"PointConfig({self.pts.tolist()})"


def _denominator(g, x, y):
    c = g.m[2]
    return c[0] * x + c[1] * y + c[2]


def _check_finite_image(g, x, y, s, index=None):
    if g.exact or isinstance(s, Fraction):
        bad = s == 0
    else:
        bad = not abs(s) > INFINITY_TOL * math.sqrt(float(x) ** 2 + float(y) ** 2 + 1) * _norm(g.m[2])
    if bad:
        where = "" if index is None else f" (point {index + 1})"
        raise PointAtInfinity(f"point{where} is mapped to the line at infinity", index=index)


def apply_homography(g: Homography, p) -> Point2:
    """Image of one point, evaluated in the c3 = 1 representative of ``g``."""
    g, _ = canonical(g)
    x, y = p
    s = _denominator(g, x, y)
    _check_finite_image(g, x, y, s)
    a, b = g.m[0], g.m[1]
    return Point2((a[0] * x + a[1] * y + a[2]) / s, (b[0] * x + b[1] * y + b[2]) / s)


def apply_config(g: Homography, cfg: PointConfig) -> PointConfig:
    g, _ = canonical(g)
    out = []
    for i, (x, y) in enumerate(cfg.pts):
        s = _denominator(g, x, y)
        _check_finite_image(g, x, y, s, index=i)
        a, b = g.m[0], g.m[1]
        out.append(((a[0] * x + a[1] * y + a[2]) / s, (b[0] * x + b[1] * y + b[2]) / s))
    return PointConfig(out, exact=cfg.exact or g.exact)


def jacobian_point(g: Homography, p):
    """Jacobian determinant ``det(g) / s**3`` of the point map at ``p``."""
    g, _ = canonical(g)
    x, y = p
    s = _denominator(g, x, y)
    _check_finite_image(g, x, y, s)
    return g.det / s ** 3


def total_jacobian(g: Homography, cfg: PointConfig):
    """Product of the per-point Jacobians: ``det(g)**n / prod(s_i**3)``."""
    g, _ = canonical(g)
    d = g.det
    value = 1
    for i, (x, y) in enumerate(cfg.pts):
        s = _denominator(g, x, y)
        _check_finite_image(g, x, y, s, index=i)
        value = value * (d / s ** 3)
    return value


def _check_indices(n, *idx):
    if len(set(idx)) != len(idx):
        raise IndexError(f"indices must be distinct, got {idx}")
    for i in idx:
        if not 1 <= i <= n:
            raise IndexError(f"index {i} out of range 1..{n}")


def delta(cfg: PointConfig, i: int, j: int, k: int):
    """Determinant of the homogeneous coordinates of points i, j, k (1-based).

    Equals twice the signed area of the triangle.
    """
    _check_indices(cfg.n, i, j, k)
    (xi, yi), (xj, yj), (xk, yk) = cfg.pts[i - 1], cfg.pts[j - 1], cfg.pts[k - 1]
    return xi * (yj - yk) - xj * (yi - yk) + xk * (yi - yj)


def mixed_sum(cfg: PointConfig, i: int):
    """``d123*d234*d14i + d124*d134*d23i`` for a point index i >= 5."""
    return (delta(cfg, 1, 2, 3) * delta(cfg, 2, 3, 4) * delta(cfg, 1, 4, i)
            + delta(cfg, 1, 2, 4) * delta(cfg, 1, 3, 4) * delta(cfg, 2, 3, i))


def is_negligible(value, cfg: PointConfig, indices, degree, rel=ZERO_TOL):
    """Homogeneous zero test ``|value| < rel * scale**degree``.

    ``scale`` is the largest coordinate magnitude among the 1-based
    ``indices``; exact configurations test for exact zero.
    """
    if cfg.exact or isinstance(value, Fraction):
        return value == 0
    scale = max(float(np.max(np.abs(cfg.pts[i - 1]))) for i in indices)
    return not abs(value) >= rel * scale ** degree or scale == 0.0


def _denominators(cfg: PointConfig):
    """Yield ``(name, value, indices, degree)`` for every quantity that must not vanish."""
    n = min(cfg.n, 4)
    for t in itertools.combinations(range(1, n + 1), 3):
        yield "delta_" + "".join(map(str, t)), delta(cfg, *t), t, 2
    for i in range(5, cfg.n + 1):
        yield f"delta_14{i}", delta(cfg, 1, 4, i), (1, 4, i), 2
        yield f"delta_34{i}", delta(cfg, 3, 4, i), (3, 4, i), 2
        yield f"mixed_{i}", mixed_sum(cfg, i), (1, 2, 3, 4, i), 6


def degeneracy(cfg: PointConfig, rel=ZERO_TOL):
    """Name of the first vanishing determinant/denominator, or None."""
    if cfg.n < 3:
        return None
    for name, value, idx, degree in _denominators(cfg):
        if is_negligible(value, cfg, idx, degree, rel):
            return name
    return None


def general_position(cfg: PointConfig) -> bool:
    return degeneracy(cfg) is None


def require_general_position(cfg: PointConfig, rel=ZERO_TOL):
    which = degeneracy(cfg, rel)
    if which is not None:
        raise DegenerateConfiguration(f"configuration is degenerate: {which} vanishes", which=which)


def _s(g, cfg, i):
    x, y = cfg.pts[i - 1]
    return _denominator(g, x, y)


def delta_transform_check(g: Homography, cfg: PointConfig, i: int, j: int, k: int) -> float:
    """Relative residual of ``delta_ijk(g.x) = det(g) / (s_i s_j s_k) * delta_ijk(x)``."""
    require_general_position(cfg)
    g, _ = canonical(g)
    before = delta(cfg, i, j, k)
    after = delta(apply_config(g, cfg), i, j, k)
    predicted = g.det / (_s(g, cfg, i) * _s(g, cfg, j) * _s(g, cfg, k)) * before
    return float(abs(after - predicted) / abs(before))


def mixed_transform_check(g: Homography, cfg: PointConfig, i: int) -> float:
    """Relative residual of the mixed-sum law with factor ``det**3 / (s1..s4)**2 s_i``."""
    require_general_position(cfg)
    g, _ = canonical(g)
    before = mixed_sum(cfg, i)
    after = mixed_sum(apply_config(g, cfg), i)
    s = [_s(g, cfg, t) for t in (1, 2, 3, 4, i)]
    factor = g.det ** 3 / ((s[0] * s[1] * s[2] * s[3]) ** 2 * s[4])
    return float(abs(after - factor * before) / abs(before))


def cubed_delta_check(g: Homography, cfg: PointConfig) -> float:
    """Relative residual of ``delta_123(g.x)**3 = J(g, x) * delta_123(x)**3`` for 3 points.

    This is the weight 1/3 law of ``delta_123`` against the total Jacobian.
    """
    if cfg.n != 3:
        raise ValueError("the cubed law is stated for 3-point configurations")
    require_general_position(cfg)
    before = delta(cfg, 1, 2, 3) ** 3
    after = delta(apply_config(g, cfg), 1, 2, 3) ** 3
    return float(abs(after - total_jacobian(g, cfg) * before) / abs(before))


# -- plain-text formats ------------------------------------------------------

def parse_points(text: str) -> PointConfig:
    """Parse ``x y`` lines; blank lines and lines starting with '#' are skipped."""
    pts = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise ParseError(f"line {lineno}: expected 'x y', got {stripped!r}")
        try:
            pts.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise ParseError(f"line {lineno}: not a number in {stripped!r}") from None
    if not pts:
        raise ParseError("no points found")
    try:
        return PointConfig(pts)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_homography(text: str) -> Homography:
    """Parse 9 whitespace-separated floats in row-major order ('#' comments allowed)."""
    body = " ".join(line for line in text.splitlines() if not line.strip().startswith("#"))
    fields = body.split()
    if len(fields) != 9:
        raise ParseError(f"expected 9 numbers for a homography, got {len(fields)}")
    try:
        values = [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(f"bad homography entry: {exc}") from None
    return Homography(np.reshape(values, (3, 3)))


def read_points(path) -> PointConfig:
    return parse_points(Path(path).read_text())


def read_homography(path) -> Homography:
    return parse_homography(Path(path).read_text())


def format_points(cfg: PointConfig) -> str:
    return "".join(f"{float(x)!r} {float(y)!r}\n" for x, y in cfg.pts)


def format_homography(g: Homography) -> str:
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in g.m)
