"""Area 2-cocycle, magnetic multiplier, period maps and the coboundary solver.

The area cocycle is c(x, y) = Area(o, x.o, xy.o), the signed area of the
geodesic triangle with vertices at the basepoint and two orbit points.  The
multiplier is sigma = exp(i * theta_tilde * c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from . import hypgeom as hg
from ._validation import NumericalFailure, ValidationError, check_int, check_real
from .groups import OUT, CayleyBall, Realization, fundamental_class_area, symplectic_class
from .signatures import HYPERBOLIC, Signature, normalize_theta, phi


def _resolve(ball: CayleyBall, x, y) -> np.ndarray:
    xy = ball.multiply_many(x, y)
    if np.any(xy == OUT):
        raise ValidationError("product leaves the ball")
    return xy


def area_cocycle(ball: CayleyBall, x: int, y: int) -> float:
    """Signed area of the triangle (o, x.o, xy.o)."""
    return float(area_cocycle_many(ball, [x], [y])[0])


def area_cocycle_many(ball: CayleyBall, xs, ys, xys=None) -> np.ndarray:
    xs = np.asarray(xs)
    if xys is None:
        xys = _resolve(ball, xs, ys)
    return ball.geometry.areas_from_origin(ball.points[xs], ball.points[xys])


@dataclass(frozen=True)
class MagneticMultiplier:
    ball: CayleyBall
    theta_tilde: float

    def __post_init__(self):
        object.__setattr__(self, "theta_tilde", check_real(self.theta_tilde, "theta_tilde"))

    def __call__(self, x: int, y: int) -> complex:
        return complex(self.many([x], [y])[0])

    def many(self, xs, ys, xys=None) -> np.ndarray:
        return np.exp(1j * self.theta_tilde * area_cocycle_many(self.ball, xs, ys, xys))


def sigma(mult: MagneticMultiplier, x: int, y: int) -> complex:
    return mult(x, y)


def flux_theta(sig: Signature, theta_tilde):
    """Flux per fundamental domain in units of 2*pi, reduced into (0, 1].

    Exact (a Fraction) when both theta_tilde and the area ratio are rational,
    i.e. on hyperbolic signatures with rational theta_tilde.
    """
    if sig.geometry_class == HYPERBOLIC:
        if isinstance(theta_tilde, (int, Fraction)):
            return normalize_theta(Fraction(theta_tilde) * phi(sig))
        value = check_real(theta_tilde, "theta_tilde") * float(phi(sig))
    elif sig.genus == 1 and not sig.cone_orders:
        value = check_real(theta_tilde, "theta_tilde") / (2 * math.pi)  # unit cell area 1
    else:
        raise ValidationError(f"flux is defined here for hyperbolic signatures and (1;), not {sig}")
    value = value % 1.0
    return 1.0 if value == 0.0 or math.isclose(value, 1.0, abs_tol=1e-15) else value


def omega(ball: CayleyBall, j: int, x: int) -> int:
    """j-th period (1-based) of x: its j-th abelianization coordinate."""
    j = check_int(j, "j", 1)
    if j > 2 * ball.genus:
        raise ValidationError(f"period index {j} out of range 1..{2 * ball.genus}")
    return int(ball.abelian[x, j - 1])


def symplectic_form(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """sum_j u_j v_{j+g} - u_{j+g} v_j, broadcasting over leading axes."""
    g = u.shape[-1] // 2
    return (u[..., :g] * v[..., g:] - u[..., g:] * v[..., :g]).sum(axis=-1)


def psi_sum(ball: CayleyBall, x, y):
    out = symplectic_form(ball.abelian[np.asarray(x)], ball.abelian[np.asarray(y)])
    return int(out) if np.ndim(out) == 0 else out


def period_scale(real: Realization) -> float:
    """Factor turning the integer symplectic cocycle into the area class.

    The area cocycle integrates to the (signed) fundamental-domain area on the
    fundamental class, while psi_sum integrates to +-2g there.  Their ratio is
    the factor; it is 0 when g = 0 (no periods at all).
    """
    if real.genus == 0:
        return 0.0
    return fundamental_class_area(real) / symplectic_class(real)


def kubo_cocycle(ball: CayleyBall, x, y, scale: float | None = None):
    k = period_scale(ball.realization) if scale is None else scale
    return k * np.asarray(psi_sum(ball, x, y), dtype=float)


@dataclass
class CoboundaryFit:
    k: np.ndarray  # 1-cochain on the ball, k(e) = 0
    residual: float  # RMS of D - dk over the equations
    defect_rms: float  # RMS of D itself, for scale
    equations: int
    scale: float


def coboundary_equations(ball: CayleyBall, scale: float):
    """Rows (x, y, xy, D) for every pair with |x| + |y| <= radius."""
    xs, ys = [], []
    for a in range(ball.radius + 1):
        X, Y = np.flatnonzero(ball.lengths == a), ball.within(ball.radius - a)
        xs.append(np.repeat(X, len(Y)))
        ys.append(np.tile(Y, len(X)))
    xs, ys = np.concatenate(xs), np.concatenate(ys)
    xys = ball.multiply_many(xs, ys)
    if np.any(xys == OUT):
        raise NumericalFailure("short product missing from ball")
    D = scale * psi_sum(ball, xs, ys) - area_cocycle_many(ball, xs, ys, xys)
    return xs, ys, xys, D


def solve_coboundary_defect(ball: CayleyBall, scale: float | None = None,
                            tol: float = 1e-14) -> CoboundaryFit:
    """Least-squares 1-cochain k with k(x) - k(xy) + k(y) ~ D(x, y).

    D = scale * psi_sum - area_cocycle, where ``scale`` defaults to
    ``period_scale``.  The minimum-norm solution is taken, so the homomorphism
    directions (which dk cannot see) and the gauge k(e) = 0 are both fixed.
    """
    if ball.radius < 3:
        raise ValidationError("coboundary solve needs radius >= 3")
    if scale is None:
        scale = period_scale(ball.realization)
    xs, ys, xys, D = coboundary_equations(ball, scale)
    m, n = len(D), len(ball)
    rows = np.concatenate([np.arange(m)] * 3 + [[m]])
    cols = np.concatenate([xs, xys, ys, [0]])
    vals = np.concatenate([np.ones(m), -np.ones(m), np.ones(m), [1.0]])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m + 1, n))
    A.sum_duplicates()
    b = np.append(D, 0.0)
    if not np.any(D):
        return CoboundaryFit(np.zeros(n), 0.0, 0.0, m, scale)
    k = lsqr(A, b, atol=tol, btol=tol, iter_lim=20 * n)[0]
    r = (A @ k - b)[:m]
    return CoboundaryFit(k, float(np.sqrt(np.mean(r ** 2))), float(np.sqrt(np.mean(D ** 2))), m, scale)


@dataclass
class PairTable:
    """Products, areas and psi values on support x support, cached per ball and radius."""

    support: np.ndarray
    product: np.ndarray  # support x support -> id or OUT
    area: np.ndarray
    psi: np.ndarray
    inside: np.ndarray  # product resolved and within the support radius


def pair_table(ball: CayleyBall, radius: int) -> PairTable:
    key = ("pairs", radius)
    if key not in ball.cache:
        sup = ball.within(radius)
        prod = ball.product_table(sup, sup)
        ok = prod != OUT
        inside = ok.copy()
        inside[ok] = ball.lengths[prod[ok]] <= radius
        safe = np.where(ok, prod, 0)
        area = ball.geometry.areas_from_origin(ball.points[sup][:, None], ball.points[safe])
        area = np.where(ok, area, 0.0)
        psi = symplectic_form(ball.abelian[sup][:, None, :], ball.abelian[sup][None, :, :])
        ball.cache[key] = PairTable(sup, prod, area, psi, inside)
    return ball.cache[key]
