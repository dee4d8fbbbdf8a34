"""Finitely supported elements of the twisted group algebra and Harper operators.

Product rule: delta_x * delta_y = sigma(x, y) delta_{xy}.  The left regular
representation that follows from it has matrix entries

    M(a)[x', x] = a(x' x^-1) * sigma(x' x^-1, x),

i.e. M(a) f = a * f for f supported on the ball.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._validation import NumericalFailure, ValidationError, check_hermitian, check_int
from .cocycles import MagneticMultiplier, flux_theta
from .groups import OUT, CayleyBall, Realization, cayley_ball, realize
from .signatures import Signature


@dataclass
class AlgebraElement:
    multiplier: MagneticMultiplier
    coeffs: np.ndarray  # dense over ball ids
    truncated: bool = False  # set when a product dropped terms outside the ball

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (len(self.ball),):
            raise ValidationError("coefficient vector must cover the ball")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValidationError("coefficients must be finite")

    @property
    def ball(self) -> CayleyBall:
        return self.multiplier.ball

    @classmethod
    def zero(cls, mult: MagneticMultiplier) -> "AlgebraElement":
        return cls(mult, np.zeros(len(mult.ball), complex))

    @classmethod
    def delta(cls, mult: MagneticMultiplier, x: int, value: complex = 1.0) -> "AlgebraElement":
        a = cls.zero(mult)
        a.coeffs[x] = value
        return a

    @classmethod
    def from_dict(cls, mult: MagneticMultiplier, values: dict) -> "AlgebraElement":
        a = cls.zero(mult)
        for x, v in values.items():
            a.coeffs[x] += v
        return a

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs)

    def radius(self) -> int:
        s = self.support()
        return int(self.ball.lengths[s].max()) if len(s) else 0

    def trace(self) -> complex:
        return complex(self.coeffs[0])

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.multiplier, self.coeffs + other.coeffs, self.truncated or other.truncated)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.multiplier, self.coeffs - other.coeffs, self.truncated or other.truncated)

    def __rmul__(self, scalar: complex) -> "AlgebraElement":
        return AlgebraElement(self.multiplier, scalar * self.coeffs, self.truncated)

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return convolve(self, other)

    def norm1(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def restrict(self, radius: int) -> "AlgebraElement":
        c = np.where(self.ball.lengths <= radius, self.coeffs, 0)
        return AlgebraElement(self.multiplier, c, self.truncated)


def convolve(a: AlgebraElement, b: AlgebraElement, truncate: bool = False) -> AlgebraElement:
    """(a*b)(x) = sum over x1 x2 = x of a(x1) b(x2) sigma(x1, x2)."""
    if a.multiplier is not b.multiplier:
        raise ValidationError("elements live over different multipliers")
    sa, sb = a.support(), b.support()
    out = AlgebraElement.zero(a.multiplier)
    if len(sa) == 0 or len(sb) == 0:
        return out
    prod = a.ball.product_table(sa, sb)
    ok = prod != OUT
    if not ok.all() and not truncate:
        raise ValidationError("support product leaves the ball")
    i, j = np.nonzero(ok)
    xs, ys, xys = sa[i], sb[j], prod[i, j]
    vals = a.coeffs[xs] * b.coeffs[ys] * a.multiplier.many(xs, ys, xys)
    np.add.at(out.coeffs, xys, vals)
    out.truncated = bool(a.truncated or b.truncated or not ok.all())
    return out


def star(a: AlgebraElement) -> AlgebraElement:
    """a*(x) = conj(a(x^-1)) conj(sigma(x, x^-1)); the sigma factor is 1 here."""
    ball = a.ball
    s = a.support()
    out = AlgebraElement.zero(a.multiplier)
    inv = ball.inverse[s]
    out.coeffs[inv] = np.conj(a.coeffs[s]) * np.conj(a.multiplier.many(inv, s, np.zeros(len(s), int)))
    out.truncated = a.truncated
    return out


@dataclass
class HarperOperator:
    """Sum of the generator deltas, split into handle (free) and cone (interaction) parts."""

    element: AlgebraElement
    free: AlgebraElement
    interaction: AlgebraElement
    letters: list[int]

    @property
    def multiplier(self) -> MagneticMultiplier:
        return self.element.multiplier

    @property
    def ball(self) -> CayleyBall:
        return self.element.ball


def harper(mult: MagneticMultiplier, multiplicity: bool = False) -> HarperOperator:
    """Coefficient 1 on each element of S (or on each letter when ``multiplicity``)."""
    ball = mult.ball
    if ball.radius < 1:
        raise ValidationError("Harper operator needs a ball of radius >= 1")
    real = ball.realization
    letters = real.symmetric_generators(multiplicity)
    handles = 2 * real.genus
    free, inter = AlgebraElement.zero(mult), AlgebraElement.zero(mult)
    for k in letters:
        x = ball.element((k,))
        (free if abs(k) <= handles else inter).coeffs[x] += 1
    H = free + inter
    if np.abs(star(H).coeffs - H.coeffs).max() > 1e-12:
        raise NumericalFailure("Harper element is not self-adjoint")
    return HarperOperator(H, free, inter, letters)


@dataclass
class TruncatedMatrix:
    matrix: sp.csr_matrix
    ball: CayleyBall
    radius: int

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def shape(self):
        return self.matrix.shape

    def hermiticity_residual(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0


def matrix_on_ball(a: AlgebraElement | HarperOperator, ball: CayleyBall | None = None) -> TruncatedMatrix:
    """Finite section of left multiplication by ``a`` on functions supported in the ball."""
    if isinstance(a, HarperOperator):
        a = a.element
    ball = a.ball if ball is None else ball
    if ball is not a.ball:
        raise ValidationError("element and ball do not match")
    mult, n = a.multiplier, len(ball)
    rows, cols, vals = [], [], []
    everyone = np.arange(n)
    for s in a.support():
        j = np.flatnonzero(ball.left[0] == s)  # left[e, j] is the j-th generator
        targets = ball.left[:, j[0]] if len(j) else ball.multiply_many(s, everyone)
        ok = targets != OUT
        cols.append(everyone[ok])
        rows.append(targets[ok])
        vals.append(a.coeffs[s] * mult.many(np.full(ok.sum(), s), everyone[ok], targets[ok]))
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return TruncatedMatrix(M, ball, ball.radius)


def spectrum(M: TruncatedMatrix | np.ndarray) -> np.ndarray:
    dense = M.dense() if isinstance(M, TruncatedMatrix) else np.asarray(M)
    return np.linalg.eigvalsh(check_hermitian(dense))


def bulk_weights(vectors: np.ndarray, ball: CayleyBall, inner_radius: int) -> np.ndarray:
    """Weight of each eigenvector on the inner region relative to a uniform spread.

    Values near 1 mean bulk states; edge states sit near 0.
    """
    inner = ball.lengths <= inner_radius
    return (np.abs(vectors[inner]) ** 2).sum(axis=0) * len(ball) / inner.sum()


@dataclass
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray  # bulk weights
    inner_radius: int

    def bulk_values(self, threshold: float = 0.2) -> np.ndarray:
        return self.values[self.weights > threshold]


def default_inner_radius(ball: CayleyBall) -> int:
    """R - 2 on hyperbolic balls, R // 2 on flat ones (whose boundary is a larger share)."""
    return max(ball.radius - 2, 0) if ball.geometry.name == "hyperbolic" else ball.radius // 2


def eigensystem(M: TruncatedMatrix, inner_radius: int | None = None) -> Eigensystem:
    r = default_inner_radius(M.ball) if inner_radius is None else inner_radius
    w, v = np.linalg.eigh(check_hermitian(M.dense()))
    return Eigensystem(w, v, bulk_weights(v, M.ball, r), r)


def gaps(values, min_width: float) -> list[tuple[float, float]]:
    """Maximal eigenvalue-free open intervals of width >= min_width inside the spectrum's hull."""
    s = np.asarray(values, dtype=float)
    if len(s) < 2:
        return []
    if np.any(np.diff(s) < 0):
        raise ValidationError("spectrum must be sorted")
    d = np.diff(s)
    return [(float(s[i]), float(s[i + 1])) for i in np.flatnonzero((d >= min_width) & (d > 0))]


def stable_gaps(current, previous, min_width: float = 0.0) -> list[tuple[float, float]]:
    """Intersections of gaps found at two truncation radii (width >= min_width)."""
    out = []
    for lo, hi in current:
        for plo, phi_ in previous:
            a, b = max(lo, plo), min(hi, phi_)
            if b - a >= max(min_width, 0.0) and b > a:
                out.append((a, b))
    return out


@dataclass
class SpectrumDataset:
    """Eigenvalue rows for a sweep of flux values, with optional bulk gaps."""

    signature: str
    radius: int
    rows: list[tuple[float, float, int, float]] = field(default_factory=list)
    gaps: dict = field(default_factory=dict)

    header = ("theta_tilde", "theta", "index", "eigenvalue")

    def spectrum_at(self, theta_tilde: float) -> np.ndarray:
        return np.array([r[3] for r in self.rows if r[0] == theta_tilde])

    def to_csv(self, fh) -> None:
        fh.write(",".join(self.header) + "\n")
        for tt, th, i, e in self.rows:
            fh.write(f"{tt:.12g},{th:.12g},{i},{e:.12g}\n")


def harper_matrix(real: Realization, radius: int, theta_tilde: float,
                  multiplicity: bool = False, ball: CayleyBall | None = None) -> TruncatedMatrix:
    ball = cayley_ball(real, radius) if ball is None else ball
    return matrix_on_ball(harper(MagneticMultiplier(ball, theta_tilde), multiplicity))


def butterfly(sig: Signature, theta_tilde_grid, R: int, seed: int = 0, min_width: float = 0.0,
              bulk_threshold: float | None = None, workers: int = 1) -> SpectrumDataset:
    """Harper spectra for every flux in the grid; row order is independent of ``workers``."""
    grid = [float(t) for t in theta_tilde_grid]
    if not grid:
        raise ValidationError("flux grid is empty")
    R = check_int(R, "radius", 1)
    ball = cayley_ball(realize(sig, seed), R)

    def one(tt):
        M = harper_matrix(ball.realization, R, tt, ball=ball)
        if bulk_threshold is None:
            return spectrum(M), None
        es = eigensystem(M)
        bulk = es.bulk_values(bulk_threshold)
        return es.values, gaps(bulk, min_width)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(tt) for tt in grid]
    data = SpectrumDataset(str(sig), R)
    for tt, (values, gp) in zip(grid, results):
        th = float(flux_theta(sig, tt))
        data.rows += [(tt, th, i, float(e)) for i, e in enumerate(values)]
        if gp is not None:
            data.gaps[tt] = gp
    return data
