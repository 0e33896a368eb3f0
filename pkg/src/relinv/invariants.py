"""Joint invariants of planar point configurations under PGL(3).

For n points the absolute invariants are generated by the ``2(n-4)``
functions ``I1_i``, ``I2_i`` (i = 5..n) and the relative ones additionally by
the invariantized Jacobian ``J(rho(x), x)``, which has weight -1 with respect
to the total Jacobian multiplier.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FractionalPowerOfNegative, ParseError
from .moving_frame import frame
from .projective_core import PointConfig, delta, mixed_sum, require_general_position, total_jacobian


@dataclass(frozen=True)
class InvariantVector:
    n: int
    i1: tuple
    i2: tuple
    jinv: float

    def __post_init__(self):
        if len(self.i1) != self.n - 4 or len(self.i2) != self.n - 4:
            raise ValueError("expected n - 4 values of each fundamental invariant")
        if self.jinv == 0:
            raise ValueError("invariantized Jacobian must be nonzero")

    def generators(self) -> dict:
        """Named generators: ``I1_i``, ``I2_i`` for i = 5..n, then ``J``."""
        out = {}
        for k, (a, b) in enumerate(zip(self.i1, self.i2), start=5):
            out[f"I1_{k}"] = a
            out[f"I2_{k}"] = b
        out["J"] = self.jinv
        return out

    def to_text(self) -> str:
        lines = [f"n: {self.n}"]
        for k, (a, b) in enumerate(zip(self.i1, self.i2), start=5):
            lines.append(f"I1_{k}: {float(a):.17g}")
            lines.append(f"I2_{k}: {float(b):.17g}")
        lines.append(f"jinv: {float(self.jinv):.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "InvariantVector":
        fields = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.partition(":")
                fields[key.strip()] = value.strip()
        try:
            n = int(fields["n"])
            i1 = tuple(float(fields[f"I1_{k}"]) for k in range(5, n + 1))
            i2 = tuple(float(fields[f"I2_{k}"]) for k in range(5, n + 1))
            return cls(n, i1, i2, float(fields["jinv"]))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"malformed invariant vector: {exc}") from None


def _base_deltas(cfg):
    return (delta(cfg, 1, 2, 3), delta(cfg, 1, 2, 4),
            delta(cfg, 1, 3, 4), delta(cfg, 2, 3, 4))


def fundamental_invariants(cfg: PointConfig):
    """Return ``(i1, i2)``, the lists of ``I1_i`` and ``I2_i`` for i = 5..n.

    ``I1_i = d134 d124 d23i / (d234 d123 d14i)`` and
    ``I2_i = d234 d14i / (d124 d34i)``.  Both lists are empty for n = 4.
    """
    if cfg.n < 4:
        raise ValueError("fundamental invariants need at least 4 points")
    require_general_position(cfg)
    d123, d124, d134, d234 = _base_deltas(cfg)
    i1, i2 = [], []
    for i in range(5, cfg.n + 1):
        d14i, d23i, d34i = delta(cfg, 1, 4, i), delta(cfg, 2, 3, i), delta(cfg, 3, 4, i)
        i1.append(d134 * d124 * d23i / (d234 * d123 * d14i))
        i2.append(d234 * d14i / (d124 * d34i))
    return i1, i2


def invariantized_jacobian_direct(cfg: PointConfig):
    """``J(rho(x), x)``: the total Jacobian evaluated at the moving frame."""
    return total_jacobian(frame(cfg), cfg)


def invariantized_jacobian_closed(cfg: PointConfig, exponent=None):
    """Closed form of the invariantized Jacobian, defined up to sign.

    n = 4 gives ``1 / P`` with ``P = d123 d124 d134 d234``; n > 4 gives
    ``P**(2n - 9) * prod_{i>=5} M_i**-3`` with
    ``M_i = d123 d234 d14i + d124 d134 d23i``.  The exponent ``2n - 9`` is
    what the product of the per-point forms reduces to; it also matches
    n = 4.  ``exponent`` overrides ``2n - 9`` for n > 4; any other value
    breaks the weight -1 law.

    The direct value equals ``(-1)**n`` times this closed form.
    """
    if cfg.n < 4:
        raise ValueError("the invariantized Jacobian needs at least 4 points")
    require_general_position(cfg)
    p = math.prod(_base_deltas(cfg))
    if cfg.n == 4:
        return 1 / p
    power = 2 * cfg.n - 9 if exponent is None else exponent
    value = p ** power
    for i in range(5, cfg.n + 1):
        value = value / mixed_sum(cfg, i) ** 3
    return value


def closed_form_sign(n: int) -> int:
    """Sign ``direct / closed`` of the invariantized Jacobian for n points."""
    return -1 if n % 2 else 1


def per_point_invariantized_multipliers(cfg: PointConfig) -> list:
    """``det(g) / s_i**3`` evaluated at the moving frame, one entry per point."""
    require_general_position(cfg)
    d123, d124, d134, d234 = _base_deltas(cfg)
    out = [
        -d234 ** 2 / (d123 * d124 * d134),
        d134 ** 2 / (d123 * d124 * d234),
        d124 ** 2 / (d123 * d234 * d134),
        -d123 ** 2 / (d124 * d134 * d234),
    ]
    p2 = (d123 * d124 * d134 * d234) ** 2
    for i in range(5, cfg.n + 1):
        out.append(-p2 / mixed_sum(cfg, i) ** 3)
    return out


def invariant_vector(cfg: PointConfig) -> InvariantVector:
    i1, i2 = fundamental_invariants(cfg)
    return InvariantVector(cfg.n, tuple(i1), tuple(i2), invariantized_jacobian_direct(cfg))


def relative_invariant(weight, func, cfg: PointConfig, jinv=None):
    """Relative invariant of the given weight in normal form.

    Returns ``J**(-weight) * func(i1, i2)``, where ``J`` is the
    invariantized Jacobian (computed from the frame unless ``jinv`` is
    given).  Under ``x -> g.x`` the value picks up ``J(g, x)**weight``.
    Non-integer weights require ``J > 0``.
    """
    weight = Fraction(weight).limit_denominator(10**6)
    i1, i2 = fundamental_invariants(cfg)
    if jinv is None:
        jinv = invariantized_jacobian_direct(cfg)
    if weight.denominator == 1:
        scale = jinv ** (-int(weight))
    elif jinv > 0:
        scale = float(jinv) ** (-float(weight))
    else:
        raise FractionalPowerOfNegative(
            f"weight {weight} needs a positive invariantized Jacobian, got {float(jinv):.6g}")
    return scale * func(tuple(i1), tuple(i2))


def generator_rank(cfg: PointConfig, step=1e-6, tol=1e-6):
    """Numerical rank of the fundamental invariants as functions of all 2n coordinates.

    Central differences give the ``2(n-4) x 2n`` Jacobian; rows are
    normalized to unit length before the SVD.  Returns
    ``(rank, smallest_singular_value)``.
    """
    base = np.asarray(cfg.pts, dtype=float)

    def values(pts):
        i1, i2 = fundamental_invariants(PointConfig(pts))
        return np.array(i1 + i2, dtype=float)

    rows = []
    for k in range(base.size):
        plus, minus = base.copy(), base.copy()
        plus.flat[k] += step
        minus.flat[k] -= step
        rows.append((values(plus) - values(minus)) / (2 * step))
    jac = np.array(rows).T
    if jac.size == 0:
        return 0, float("inf")
    jac = jac / np.linalg.norm(jac, axis=1, keepdims=True)
    sv = np.linalg.svd(jac, compute_uv=False)
    return int(np.sum(sv > tol)), float(sv[-1])


# -- expressions over generator names ----------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def compile_expression(text: str):
    """Turn an arithmetic expression over ``I1_5``, ``I2_5``, ... into ``func(i1, i2)``.

    Only numbers, names, ``+ - * / **`` and parentheses are accepted.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"bad expression {text!r}: {exc.msg}") from None

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise ParseError(f"unknown name {node.id!r} in expression")
            return env[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand, env))
        raise ParseError(f"unsupported syntax in expression {text!r}")

    def func(i1, i2):
        env = {}
        for k, (a, b) in enumerate(zip(i1, i2), start=5):
            env[f"I1_{k}"] = a
            env[f"I2_{k}"] = b
        return ev(tree, env)

    return func
