"""Spectral projections, the two cyclic pairings, and Hall-conductance diagnostics.

Both pairings are sums over triples x0 x1 x2 = e of a0(x0) a1(x1) a2(x2)
sigma(x1, x2) w(x1, x2), with weight w = area cocycle (``pair_trc``) or the
scaled symplectic period cocycle (``pair_trK``).  Only triples whose three
elements lie within a chosen radius are summed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import ValidationError, check_int, check_real
from .cocycles import MagneticMultiplier, flux_theta, pair_table, period_scale
from .groups import CayleyBall, Realization, cayley_ball, realize
from .signatures import EUCLIDEAN, Irrational, Signature, phi, trace_range
from .twistedalg import (
    AlgebraElement, Eigensystem, HarperOperator, convolve, eigensystem, harper, matrix_on_ball, star,
)


@dataclass
class ProjectionApprox:
    p: AlgebraElement
    E: float
    inner_radius: int
    method: str
    defect: float  # l1 norm of p*p - p on the inner region
    decay: list[float]  # max |p| per word length
    occupied: int | None = None  # number of eigenvalues <= E (eigen method)

    @property
    def trace(self) -> float:
        return float(self.p.coeffs[0].real)


def _symmetrize(col: np.ndarray, ball: CayleyBall, mult: MagneticMultiplier) -> AlgebraElement:
    a = AlgebraElement(mult, col)
    return 0.5 * (a + star(a))


def _finish(p: AlgebraElement, E: float, r: int, method: str, occupied=None) -> ProjectionApprox:
    ball = p.ball
    p = p.restrict(r)
    pp = _pair_convolve(p, r)
    defect = float(np.abs(pp - p.coeffs).sum())
    decay = [float(np.abs(p.coeffs[ball.lengths == k]).max(initial=0.0)) for k in range(r + 1)]
    return ProjectionApprox(p, E, r, method, defect, decay, occupied)


def _pair_convolve(p: AlgebraElement, r: int) -> np.ndarray:
    """p*p on the radius-r region, using only factors inside that region."""
    t = pair_table(p.ball, r)
    out = np.zeros(len(p.ball), complex)
    i, j = np.nonzero(t.inside)
    sig = np.exp(1j * p.multiplier.theta_tilde * t.area[i, j])
    np.add.at(out, t.product[i, j], p.coeffs[t.support[i]] * p.coeffs[t.support[j]] * sig)
    return out


def check_energy(eig: Eigensystem, E: float, min_width: float, bulk_threshold: float) -> None:
    bulk = eig.bulk_values(bulk_threshold)
    if len(bulk) and np.min(np.abs(bulk - E)) < min_width:
        raise ValidationError(f"E = {E} lies within {min_width} of the bulk spectrum")


def spectral_projection(H: HarperOperator, E: float, inner_radius: int | None = None,
                        method: str = "eigh", min_width: float = 1e-3, bulk_threshold: float = 0.2,
                        eig: Eigensystem | None = None, smoothing: float = 0.05,
                        degree: int | None = None) -> ProjectionApprox:
    """Coefficients of the spectral projection onto energies <= E.

    ``eigh`` diagonalises the truncated matrix and reads the basepoint column of
    the projector.  ``chebyshev`` applies a smoothed step (Fermi function of
    width ``smoothing``) to the basepoint delta with a Jackson-damped
    Chebyshev series, which only needs sparse products.
    """
    E = check_real(E, "E")
    ball, mult = H.ball, H.multiplier
    r = max(ball.radius - 2, 0) if inner_radius is None else check_int(inner_radius, "inner_radius", 0)
    M = matrix_on_ball(H)
    if method == "eigh":
        eig = eigensystem(M) if eig is None else eig
        check_energy(eig, E, min_width, bulk_threshold)
        occ = eig.values <= E
        col = eig.vectors[:, occ] @ np.conj(eig.vectors[0, occ])
        return _finish(_symmetrize(col, ball, mult), E, r, method, int(occ.sum()))
    if method == "chebyshev":
        col = chebyshev_step(M.matrix, E, smoothing, degree)
        return _finish(_symmetrize(col, ball, mult), E, r, method)
    raise ValidationError(f"unknown projection method {method!r}")


def chebyshev_step(A, E: float, smoothing: float, degree: int | None = None) -> np.ndarray:
    """Column of f(A) at the basepoint for f = 1/(1 + exp((x - E)/smoothing))."""
    bound = float(abs(A).sum(axis=1).max()) * 1.01 + 1e-12  # Gershgorin
    if degree is None:
        degree = int(min(4000, max(50, 8 * bound / smoothing)))
    n = np.arange(degree)
    nodes = np.cos(np.pi * (np.arange(2 * degree) + 0.5) / (2 * degree))
    f = 0.5 * (1 - np.tanh((nodes * bound - E) / (2 * smoothing)))
    c = np.cos(np.outer(n, np.pi * (np.arange(2 * degree) + 0.5) / (2 * degree))) @ f / degree
    c[0] /= 2
    jackson = ((degree - n + 1) * np.cos(np.pi * n / (degree + 1))
               + np.sin(np.pi * n / (degree + 1)) / np.tan(np.pi / (degree + 1))) / (degree + 1)
    c *= jackson
    v0 = np.zeros(A.shape[0], complex)
    v0[0] = 1
    As = A / bound
    t0, t1 = v0, As @ v0
    out = c[0] * t0 + c[1] * t1
    for k in range(2, degree):
        t0, t1 = t1, 2 * (As @ t1) - t0
        out += c[k] * t1
    return out


# --------------------------------------------------------------------------
# pairings


def _pairing(a0, a1, a2, weight: str, radius: int | None, scale: float | None) -> complex:
    ball, mult = a0.ball, a0.multiplier
    if radius is None:
        radius = max(a.radius() for a in (a0, a1, a2))
    t = pair_table(ball, radius)
    if weight == "area":
        w = t.area
    else:
        if ball.genus == 0:
            return 0j
        w = (period_scale(ball.realization) if scale is None else scale) * t.psi
    sup = t.support
    prod = np.where(t.inside, t.product, 0)
    x0 = ball.inverse[prod]
    sig = np.exp(1j * mult.theta_tilde * t.area)
    terms = a0.coeffs[x0] * a1.coeffs[sup][:, None] * a2.coeffs[sup][None, :] * sig * w
    return complex(np.where(t.inside, terms, 0).sum())


def pair_trc(a0: AlgebraElement, a1: AlgebraElement, a2: AlgebraElement, radius: int | None = None) -> complex:
    """Area-cocycle pairing over triples inside ``radius`` (default: largest support radius)."""
    return _pairing(a0, a1, a2, "area", radius, None)


def pair_trK(a0: AlgebraElement, a1: AlgebraElement, a2: AlgebraElement, radius: int | None = None,
             scale: float | None = None) -> complex:
    """Period (Connes-Kubo) pairing in collapsed form; 0 when g = 0.

    ``scale`` multiplies the integer symplectic weight; it defaults to
    ``period_scale`` so that the result is comparable with ``pair_trc``.
    Pass ``scale=1`` for the bare integer-period cocycle.
    """
    return _pairing(a0, a1, a2, "period", radius, scale)


def derivation(a: AlgebraElement, j: int) -> AlgebraElement:
    """(delta_j a)(x) = Omega_j(x) a(x), with j 1-based."""
    return AlgebraElement(a.multiplier, a.ball.abelian[:, j - 1] * a.coeffs, a.truncated)


def pair_trK_literal(a0: AlgebraElement, a1: AlgebraElement, a2: AlgebraElement,
                     scale: float | None = None) -> complex:
    """sum_j tr(a0 (d_j a1 d_{j+g} a2 - d_{j+g} a1 d_j a2)) with explicit convolutions."""
    g = a0.ball.genus
    if g == 0:
        return 0j
    total = AlgebraElement.zero(a0.multiplier)
    for j in range(1, g + 1):
        total = total + convolve(derivation(a1, j), derivation(a2, j + g))
        total = total - convolve(derivation(a1, j + g), derivation(a2, j))
    k = period_scale(a0.ball.realization) if scale is None else scale
    return k * convolve(a0, total).trace()


# --------------------------------------------------------------------------
# conductance


def conductance_quantum(sig: Signature) -> Fraction:
    """phi for hyperbolic signatures; 1 (the integer Chern quantum) for the flat lattice."""
    return Fraction(1) if sig.geometry_class == EUCLIDEAN else phi(sig)


def conductance_from_pairing(value: complex, sig: Signature, real: Realization) -> complex:
    """Hall conductance in units where the plateaus are integer multiples of the quantum.

    For a projection, -4 pi i tr(P,P,P) / (fundamental area) is the integer
    plateau index; multiplying by the quantum gives the conductance.
    """
    return -4j * math.pi * float(conductance_quantum(sig)) * value / real.fundamental_area


def rational_theta(sig: Signature, theta_tilde) -> Fraction | Irrational:
    th = flux_theta(sig, theta_tilde)
    if isinstance(th, Fraction):
        return th
    q = Fraction(th).limit_denominator(1000)
    return q if abs(float(q) - th) < 1e-9 else Irrational(f"{th:.12g}")


def gap_label(sig: Signature, theta, trace_value: float) -> tuple[Fraction, float]:
    """Nearest trace-lattice point to ``trace_value`` and its distance."""
    return trace_range(sig, theta).nearest(trace_value)


@dataclass
class ConductanceReport:
    signature: str
    theta_tilde: float
    theta: str
    energy: float
    radius: int
    inner_radius: int
    method: str
    trace: float
    trc: complex
    trK: complex
    sigma_c: complex
    sigma_K: complex
    phi: str
    quantum: str
    nearest_k: int
    nearest_multiple: float
    deviation: float
    comparison: float
    relative_comparison: float
    idempotency_defect: float
    decay: list[float]
    gap_label: str | None = None
    gap_label_distance: float | None = None
    tolerance: float = 1e-9

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("trc", "trK", "sigma_c", "sigma_K"):
            z = out.pop(k)
            out[k] = {"re": z.real, "im": z.imag}
        return out


def conductance_report(sig: Signature, H: HarperOperator, proj: ProjectionApprox,
                       radius: int | None = None) -> ConductanceReport:
    ball, real = H.ball, H.ball.realization
    p, r = proj.p, proj.inner_radius
    trc = pair_trc(p, p, p, r)
    trK = pair_trK(p, p, p, r)
    s_c = conductance_from_pairing(trc, sig, real)
    s_K = conductance_from_pairing(trK, sig, real)
    quantum = conductance_quantum(sig)
    k = int(round(s_c.real / float(quantum))) if quantum else 0
    theta = rational_theta(sig, H.multiplier.theta_tilde)
    label = dist = None
    if isinstance(theta, Fraction):
        point, dist = gap_label(sig, theta, proj.trace)
        label = f"{point.numerator}/{point.denominator}"
    comp = abs(trK - trc)
    return ConductanceReport(
        str(sig), H.multiplier.theta_tilde, str(theta), proj.E, ball.radius, r, proj.method, proj.trace,
        trc, trK, s_c, s_K, f"{phi(sig).numerator}/{phi(sig).denominator}",
        f"{quantum.numerator}/{quantum.denominator}", k, k * float(quantum), abs(s_c.real - k * float(quantum)),
        comp, comp / abs(trc) if abs(trc) > 0 else (0.0 if comp == 0 else math.inf),
        proj.defect, proj.decay, label, dist)


def hall_conductance(sig: Signature, theta_tilde: float, E: float, R: int, inner_radius: int | None = None,
                     seed: int = 0, method: str = "eigh", multiplicity: bool = False,
                     min_width: float = 1e-3, **projection_options) -> ConductanceReport:
    ball = cayley_ball(realize(sig, seed), check_int(R, "radius", 1))
    H = harper(MagneticMultiplier(ball, theta_tilde), multiplicity)
    proj = spectral_projection(H, E, inner_radius, method, min_width, **projection_options)
    return conductance_report(sig, H, proj)


@dataclass
class PlateauRow:
    E: float
    trace: float
    trc: float
    trK: float
    nearest_k: int
    deviation: float
    occupied: int
    in_spectrum: bool = False

    header = ("E", "trace", "trc", "trK", "nearest_k", "deviation")

    def csv(self) -> str:
        vals = [self.E, self.trace, self.trc, self.trK, self.nearest_k, self.deviation]
        return ",".join("nan" if isinstance(v, float) and math.isnan(v) else f"{v:.12g}" for v in vals)


def plateau_scan(sig: Signature, theta_tilde: float, E_grid, R: int, inner_radius: int | None = None,
                 seed: int = 0, min_width: float = 1e-3, bulk_threshold: float = 0.2) -> list[PlateauRow]:
    """Conductance along an energy grid, one diagonalisation for the whole grid.

    Grid points with the same set of occupied eigenvalues share one projector,
    so their rows are identical.  Points inside the bulk spectrum get NaN rows.
    """
    grid = [check_real(e, "E") for e in E_grid]
    if grid != sorted(grid):
        raise ValidationError("energy grid must be sorted")
    if not grid:
        return []
    ball = cayley_ball(realize(sig, seed), check_int(R, "radius", 1))
    H = harper(MagneticMultiplier(ball, theta_tilde))
    r = max(ball.radius - 2, 0) if inner_radius is None else inner_radius
    eig = eigensystem(matrix_on_ball(H))
    rows, cache = [], {}
    for E in grid:
        occ = int((eig.values <= E).sum())
        try:
            check_energy(eig, E, min_width, bulk_threshold)
        except ValidationError:
            nan = float("nan")
            rows.append(PlateauRow(E, nan, nan, nan, 0, nan, occ, True))
            continue
        if occ not in cache:
            rep = conductance_report(sig, H, spectral_projection(H, E, r, "eigh", min_width, bulk_threshold, eig))
            cache[occ] = rep
        rep = cache[occ]
        rows.append(PlateauRow(E, rep.trace, rep.sigma_c.real, rep.sigma_K.real, rep.nearest_k, rep.deviation, occ))
    return rows
