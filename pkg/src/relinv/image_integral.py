"""Integral projective invariants of grayscale images by seeded Monte Carlo.

The integrand for an n-tuple of plane points is

    |J(rho(x), x)| * prod_i I1_i**alpha_i * I2_i**beta_i * prod_i u(x_i, y_i)

with the closed-form invariantized Jacobian.  Because it is a relative
invariant of weight -1 and intensities are carried along unchanged, the
integral over all tuples does not change when the image domain is deformed
by a homography.

Random numbers come from Philox streams keyed by the seed, one stream per
fixed-size block of samples (the block index sits in the high counter word).
Blocks are reduced pairwise in block order, so the estimate is bitwise
independent of how blocks are spread over worker processes.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HorizonCrossesSupport, InsufficientAcceptance, ParseError, UnsupportedFormat
from .projective_core import Homography
from .reports import format_kv

BLOCK_SIZE = 1 << 16
NEAR_SINGULAR_TOL = 1e-6
MIN_ACCEPTANCE = 0.5
MAX_EXPONENT = 2
_SEED_MASK = (1 << 64) - 1
# Offset between the seeds used for the original and the warped image.
WARP_SEED_OFFSET = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class ImageGrid:
    """Nonnegative intensities on a pixel grid embedded in the plane.

    ``intensities[j, i]`` is the pixel whose center sits at
    ``(origin[0] + (i + 0.5) * spacing[0], origin[1] + (j + 0.5) * spacing[1])``.
    The image is zero outside the grid rectangle.
    """

    intensities: np.ndarray
    origin: tuple = (0.0, 0.0)
    spacing: tuple = None

    def __post_init__(self):
        data = np.array(self.intensities, dtype=float)
        if data.ndim != 2 or data.size == 0:
            raise ValueError("intensities must be a nonempty 2-D array")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValueError("intensities must be finite and nonnegative")
        data.flags.writeable = False
        object.__setattr__(self, "intensities", data)
        spacing = self.spacing
        if spacing is None:
            spacing = (1.0 / data.shape[1], 1.0 / data.shape[0])
        object.__setattr__(self, "spacing", (float(spacing[0]), float(spacing[1])))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def width(self):
        return self.intensities.shape[1]

    @property
    def height(self):
        return self.intensities.shape[0]

    @property
    def bounds(self):
        """``(xmin, xmax, ymin, ymax)`` of the grid rectangle."""
        x0, y0 = self.origin
        return (x0, x0 + self.width * self.spacing[0], y0, y0 + self.height * self.spacing[1])

    @property
    def area(self):
        xmin, xmax, ymin, ymax = self.bounds
        return (xmax - xmin) * (ymax - ymin)

    def pixel_centers(self):
        """Arrays ``(xs, ys)`` of pixel-center coordinates, shaped like the image."""
        x0, y0 = self.origin
        i = np.arange(self.width)
        j = np.arange(self.height)
        xs = x0 + (i + 0.5) * self.spacing[0]
        ys = y0 + (j + 0.5) * self.spacing[1]
        return np.meshgrid(xs, ys)

    def scaled(self, factor):
        return ImageGrid(self.intensities * factor, self.origin, self.spacing)


# -- PGM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*")


def _header_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens (comments skipped)."""
    pos = 0
    tokens = []
    while len(tokens) < count:
        pos = _TOKEN.match(data, pos).end()
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header", offset=start)
        tokens.append((data[start:pos], start))
    return tokens, pos


def parse_pgm(data: bytes, origin=(0.0, 0.0), spacing=None) -> ImageGrid:
    """Decode a P2 (ASCII) or P5 (binary) PGM; intensities are scaled to [0, 1]."""
    if len(data) < 2:
        raise ParseError("truncated PGM header", offset=len(data))
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormat(f"unsupported magic number {magic!r}; expected P2 or P5")
    tokens, pos = _header_tokens(data[2:], 3)
    values = []
    for raw, off in tokens:
        try:
            values.append(int(raw))
        except ValueError:
            raise ParseError(f"bad header field {raw!r}", offset=off + 2) from None
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise ParseError("image dimensions must be positive", offset=tokens[0][1] + 2)
    if not 0 < maxval <= 65535:
        raise UnsupportedFormat(f"maxval {maxval} outside 1..65535")
    pos += 2
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise ParseError("missing whitespace after maxval", offset=pos)
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - pos < need:
            raise ParseError(f"raster needs {need} bytes, found {len(data) - pos}", offset=len(data))
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(float)
    else:
        fields = data[pos:].split()
        if len(fields) < count:
            raise ParseError(f"expected {count} samples, found {len(fields)}", offset=len(data))
        try:
            pixels = np.array([int(f) for f in fields[:count]], dtype=float)
        except ValueError as exc:
            raise ParseError(f"bad sample: {exc}", offset=pos) from None
    if np.any(pixels > maxval):
        raise ParseError("sample exceeds maxval", offset=pos)
    return ImageGrid(pixels.reshape(height, width) / maxval, origin, spacing)


def load_pgm(path, origin=(0.0, 0.0), spacing=None) -> ImageGrid:
    """Load a PGM file; by default the image occupies the unit square."""
    return parse_pgm(Path(path).read_bytes(), origin, spacing)


def encode_pgm(img: ImageGrid, maxval=255, binary=True) -> bytes:
    """Encode intensities (clipped to [0, 1]) as P5 or P2."""
    q = np.rint(np.clip(img.intensities, 0.0, 1.0) * maxval).astype(int)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{maxval}\n".encode()
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return header + q.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in q)
    return header + rows.encode() + b"\n"


def save_pgm(path, img: ImageGrid, maxval=255, binary=True):
    Path(path).write_bytes(encode_pgm(img, maxval, binary))


# -- sampling and warping ----------------------------------------------------

def sample_intensities(img: ImageGrid, xs, ys):
    """Vectorized bilinear interpolation between pixel centers; 0 outside the grid."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xmin, xmax, ymin, ymax = img.bounds
    inside = (xs >= xmin) & (xs <= xmax) & (ys >= ymin) & (ys <= ymax)
    u = np.clip((np.where(inside, xs, xmin) - xmin) / img.spacing[0] - 0.5, 0, img.width - 1)
    v = np.clip((np.where(inside, ys, ymin) - ymin) / img.spacing[1] - 0.5, 0, img.height - 1)
    i0 = np.minimum(np.floor(u).astype(int), max(img.width - 2, 0))
    j0 = np.minimum(np.floor(v).astype(int), max(img.height - 2, 0))
    i1 = np.minimum(i0 + 1, img.width - 1)
    j1 = np.minimum(j0 + 1, img.height - 1)
    fu = u - i0
    fv = v - j0
    a = img.intensities
    top = a[j0, i0] * (1 - fu) + a[j0, i1] * fu
    bottom = a[j1, i0] * (1 - fu) + a[j1, i1] * fu
    return np.where(inside, top * (1 - fv) + bottom * fv, 0.0)


def sample_intensity(img: ImageGrid, p) -> float:
    return float(sample_intensities(img, p[0], p[1]))


def support_rectangle(img: ImageGrid):
    """Bounding rectangle of the nonzero pixels, padded by one pixel, clipped to the grid."""
    rows, cols = np.nonzero(img.intensities)
    xmin, xmax, ymin, ymax = img.bounds
    if rows.size == 0:
        return xmin, xmin, ymin, ymin
    dx, dy = img.spacing
    x0, y0 = img.origin
    return (max(xmin, x0 + (cols.min() - 0.5) * dx), min(xmax, x0 + (cols.max() + 1.5) * dx),
            max(ymin, y0 + (rows.min() - 0.5) * dy), min(ymax, y0 + (rows.max() + 1.5) * dy))


def _apply_h(m, xs, ys):
    s = m[2, 0] * xs + m[2, 1] * ys + m[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        return ((m[0, 0] * xs + m[0, 1] * ys + m[0, 2]) / s,
                (m[1, 0] * xs + m[1, 1] * ys + m[1, 2]) / s, s)


def _check_horizon(g: Homography, rect):
    m = np.asarray(g.m, dtype=float)
    xmin, xmax, ymin, ymax = rect
    cx = np.array([xmin, xmax, xmax, xmin])
    cy = np.array([ymin, ymin, ymax, ymax])
    _, _, s = _apply_h(m, cx, cy)
    if not (np.all(s > 0) or np.all(s < 0)):
        raise HorizonCrossesSupport("the line mapped to infinity crosses the image support")
    return cx, cy


def warp_image(img: ImageGrid, g: Homography, out_dims=None, origin=None, spacing=None) -> ImageGrid:
    """Push the image forward by ``g``: output(q) = input(g^-1 q).

    The output grid covers the input rectangle unless ``origin``/``spacing``
    say otherwise; ``out_dims`` is ``(width, height)``.
    """
    _check_horizon(g, support_rectangle(img))
    width, height = out_dims if out_dims is not None else (img.width, img.height)
    if origin is None:
        origin = img.origin
    if spacing is None:
        xmin, xmax, ymin, ymax = img.bounds
        spacing = ((xmax - xmin) / width, (ymax - ymin) / height)
    out = ImageGrid(np.zeros((height, width)), origin, spacing)
    qx, qy = out.pixel_centers()
    px, py, _ = _apply_h(np.asarray(g.inverse().m, dtype=float), qx, qy)
    ok = np.isfinite(px) & np.isfinite(py)
    values = np.zeros_like(qx)
    values[ok] = sample_intensities(img, px[ok], py[ok])
    return ImageGrid(values, origin, spacing)


def warped_support_inside(img: ImageGrid, g: Homography, out: ImageGrid | None = None) -> bool:
    """Whether ``g`` maps the nonzero support of ``img`` inside the output rectangle."""
    cx, cy = _check_horizon(g, support_rectangle(img))
    wx, wy, _ = _apply_h(np.asarray(g.m, dtype=float), cx, cy)
    xmin, xmax, ymin, ymax = (out or img).bounds
    return bool(np.all((wx >= xmin) & (wx <= xmax) & (wy >= ymin) & (wy <= ymax)))


# -- the estimator -----------------------------------------------------------

@dataclass(frozen=True)
class IntegralSpec:
    """Which integral invariant to estimate and how.

    Exponents of the first four points must be zero (their fundamental
    invariants are defined as 1).  ``signed=True`` keeps the sign of the
    invariantized Jacobian instead of taking its absolute value.
    """

    n: int = 4
    alpha: tuple = None
    beta: tuple = None
    samples: int = 100_000
    seed: int = 0xC0FFEE
    signed: bool = False
    max_exponent: int = MAX_EXPONENT

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("integral invariants need n >= 4")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            value = (0,) * self.n if value is None else tuple(int(v) for v in value)
            if len(value) != self.n:
                raise ValueError(f"{name} must have length n={self.n}")
            if any(value[:4]):
                raise ValueError(f"{name} entries for the first four points must be 0")
            if any(abs(v) > self.max_exponent for v in value):
                raise ValueError(f"{name} exponents exceed {self.max_exponent} in magnitude")
            object.__setattr__(self, name, value)
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0 <= self.seed <= _SEED_MASK:
            raise ValueError("seed must be a 64-bit unsigned value")

    @property
    def sign_policy(self):
        return "signed" if self.signed else "absolute"


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    accepted_fraction: float
    samples: int = 0
    seed: int = 0
    sign_policy: str = "absolute"
    rejection_threshold: float = NEAR_SINGULAR_TOL
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples,
                "accepted_fraction": self.accepted_fraction, "seed": self.seed,
                "sign_policy": self.sign_policy, "rejection_threshold": self.rejection_threshold}

    def to_text(self) -> str:
        return format_kv(self.to_dict())


def _deltas(pts, i, j, k):
    (xi, yi), (xj, yj), (xk, yk) = (pts[:, i - 1].T, pts[:, j - 1].T, pts[:, k - 1].T)
    return xi * (yj - yk) - xj * (yi - yk) + xk * (yi - yj)


def integrand(img: ImageGrid, spec: IntegralSpec, pts, tol=NEAR_SINGULAR_TOL):
    """Integrand values and acceptance mask for a batch of tuples ``pts`` of shape (B, n, 2).

    Rejected tuples (any guarded denominator below ``tol * scale**degree``,
    with ``scale`` the largest coordinate magnitude in the tuple) get 0.
    """
    n = spec.n
    scale = np.max(np.abs(pts.reshape(pts.shape[0], -1)), axis=1)
    s2, s6 = scale ** 2, scale ** 6
    d123, d124 = _deltas(pts, 1, 2, 3), _deltas(pts, 1, 2, 4)
    d134, d234 = _deltas(pts, 1, 3, 4), _deltas(pts, 2, 3, 4)
    ok = np.ones(pts.shape[0], dtype=bool)
    for d in (d123, d124, d134, d234):
        ok &= np.abs(d) >= tol * s2
    p = d123 * d124 * d134 * d234
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if n == 4:
            jac = 1.0 / p
        else:
            jac = p ** (2 * n - 9)
        factor = np.ones(pts.shape[0])
        for i in range(5, n + 1):
            d14i, d23i, d34i = _deltas(pts, 1, 4, i), _deltas(pts, 2, 3, i), _deltas(pts, 3, 4, i)
            mixed = d123 * d234 * d14i + d124 * d134 * d23i
            ok &= (np.abs(d14i) >= tol * s2) & (np.abs(d34i) >= tol * s2) & (np.abs(mixed) >= tol * s6)
            a, b = spec.alpha[i - 1], spec.beta[i - 1]
            if a < 0:
                ok &= np.abs(d23i) >= tol * s2
            jac = jac / mixed ** 3
            if a:
                factor = factor * (d134 * d124 * d23i / (d234 * d123 * d14i)) ** a
            if b:
                factor = factor * (d234 * d14i / (d124 * d34i)) ** b
        jac = jac * (-1) ** n if spec.signed else np.abs(jac)
        values = jac * factor
    u = np.ones(pts.shape[0])
    for i in range(n):
        u = u * sample_intensities(img, pts[:, i, 0], pts[:, i, 1])
    ok &= np.isfinite(values)
    return np.where(ok, values * u, 0.0), ok


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of samples."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, block, 0, 0]))


def _block_points(img, spec, block):
    start = block * BLOCK_SIZE
    count = min(BLOCK_SIZE, spec.samples - start)
    xmin, xmax, ymin, ymax = img.bounds
    rng = block_generator(spec.seed, block)
    unit = rng.random((count, spec.n, 2))
    pts = np.empty_like(unit)
    pts[..., 0] = xmin + (xmax - xmin) * unit[..., 0]
    pts[..., 1] = ymin + (ymax - ymin) * unit[..., 1]
    return pts


def _block_stats(args):
    img, spec, block, tol = args
    values, ok = integrand(img, spec, _block_points(img, spec, block), tol)
    mean = float(np.mean(values))
    m2 = float(np.sum((values - mean) ** 2))
    return values.size, mean, m2, int(np.count_nonzero(ok))


def _merge(a, b):
    """Chan et al. pairwise merge of (count, mean, M2, accepted)."""
    na, ma, qa, ka = a
    nb, mb, qb, kb = b
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, qa + qb + d * d * na * nb / n, ka + kb


def _tree_reduce(stats):
    while len(stats) > 1:
        merged = [_merge(stats[k], stats[k + 1]) for k in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            merged.append(stats[-1])
        stats = merged
    return stats[0]


def integral_invariant(img: ImageGrid, spec: IntegralSpec, workers=1, tol=NEAR_SINGULAR_TOL,
                       min_acceptance=MIN_ACCEPTANCE) -> Estimate:
    """Monte-Carlo estimate of the integral invariant over n-tuples in the image rectangle.

    Rejected tuples count as zero.  The result is a deterministic function of
    ``(img, spec, tol)``; ``workers`` only changes how blocks are scheduled.
    """
    blocks = math.ceil(spec.samples / BLOCK_SIZE)
    jobs = [(img, spec, b, tol) for b in range(blocks)]
    if workers > 1 and blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_block_stats, jobs))
    else:
        stats = [_block_stats(job) for job in jobs]
    count, mean, m2, accepted = _tree_reduce(stats)
    volume = img.area ** spec.n
    std = math.sqrt(m2 / (count - 1)) if count > 1 else 0.0
    fraction = accepted / count
    if fraction < min_acceptance:
        raise InsufficientAcceptance(
            f"only {fraction:.1%} of tuples passed the degeneracy guards (threshold {tol:g})")
    return Estimate(volume * mean, volume * std / math.sqrt(count), fraction,
                    spec.samples, spec.seed, spec.sign_policy, tol)


def threshold_sensitivity(img: ImageGrid, spec: IntegralSpec, tols=(1e-6, 1e-5, 1e-4, 1e-3, 1e-2)):
    """Estimates on the same sample stream for several rejection thresholds.

    With the absolute sign policy the integrand is nonnegative, so the value
    can only shrink as the threshold grows.  A strong dependence on the
    threshold means the trimmed integral is dominated by near-degenerate
    tuples.
    """
    return [integral_invariant(img, spec, tol=t, min_acceptance=0.0) for t in tols]


@dataclass(frozen=True)
class InvarianceReport:
    value: float
    warped_value: float
    stderr: float
    warped_stderr: float
    combined_err: float
    difference: float
    passed: bool
    sign_policy: str = "absolute"

    def to_dict(self):
        return {"value": self.value, "warped_value": self.warped_value, "stderr": self.stderr,
                "warped_stderr": self.warped_stderr, "combined_err": self.combined_err,
                "difference": self.difference, "pass": self.passed, "sign_policy": self.sign_policy}

    def to_text(self) -> str:
        return format_kv(self.to_dict())


def invariance_experiment(img: ImageGrid, spec: IntegralSpec, g: Homography, workers=1,
                          rel_tol=0.05, tol=NEAR_SINGULAR_TOL) -> InvarianceReport:
    """Compare the estimate on ``img`` with the one on its warp by ``g``.

    The warped run uses an independent seed.  It passes when the difference
    is below ``max(3 * combined stderr, rel_tol * |value|)``.
    """
    if not warped_support_inside(img, g):
        raise ValueError("the warped image support leaves the output rectangle")
    warped = warp_image(img, g)
    first = integral_invariant(img, spec, workers, tol)
    other = IntegralSpec(spec.n, spec.alpha, spec.beta, spec.samples,
                         (spec.seed + WARP_SEED_OFFSET) & _SEED_MASK, spec.signed, spec.max_exponent)
    second = integral_invariant(warped, other, workers, tol)
    combined = math.hypot(first.stderr, second.stderr)
    diff = abs(first.value - second.value)
    passed = diff < max(3 * combined, rel_tol * abs(first.value))
    return InvarianceReport(first.value, second.value, first.stderr, second.stderr,
                            combined, diff, bool(passed), spec.sign_policy)


def blob_image(size=64, radius=0.3, center=(0.5, 0.5)) -> ImageGrid:
    """Smooth compactly supported bump ``(1 - r^2/R^2)^2`` on the unit square."""
    img = ImageGrid(np.zeros((size, size)))
    xs, ys = img.pixel_centers()
    r2 = ((xs - center[0]) ** 2 + (ys - center[1]) ** 2) / radius ** 2
    return ImageGrid(np.where(r2 < 1, (1 - r2) ** 2, 0.0))
