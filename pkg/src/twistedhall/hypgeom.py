"""Hyperbolic plane in the Poincare disk model, plus a flat stand-in.

Isometries are stored as real SL(2,R) matrices acting on the upper half
plane; points live in the unit disk and are moved back and forth through the
Cayley map w = i(1+z)/(1-z).  The basepoint o is the disk origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import NumericalFailure, ValidationError


@dataclass(frozen=True)
class Tolerances:
    boundary_guard: float = 1e-12  # points must satisfy |z| < 1 - guard
    determinant: float = 1e-12
    classify: float = 1e-9  # |trace| within this of 2 counts as parabolic
    degenerate: float = 1e-9  # angle sum within this of pi -> zero area
    coincident: float = 1e-14  # vertices closer than this are the same point
    quantization: float = 1e-6  # relative grid used to hash group elements
    relator: float = 1e-9


TOL = Tolerances()

_CAYLEY = np.array([[1, -1j], [1, 1j]])  # H -> D
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def to_half_plane(z):
    return 1j * (1 + z) / (1 - z)


def to_disk(w):
    return (w - 1j) / (w + 1j)


def canonical_sign(m: np.ndarray) -> np.ndarray:
    """Flip sign so the first entry that is not ~0 is positive."""
    flat = m.ravel()
    i = int(np.argmax(np.abs(flat) > 1e-12))
    return m if flat[i].real > 0 else -m


class Isometry:
    """Element of PSL(2,R), a unit-determinant real matrix up to sign."""

    __slots__ = ("matrix",)

    def __init__(self, a, b=None, c=None, d=None, tol: Tolerances = TOL):
        m = np.array(a, dtype=float).reshape(2, 2) if b is None else np.array([[a, b], [c, d]], dtype=float)
        det = np.linalg.det(m)
        if det <= 0:
            raise ValidationError("isometry matrix must have positive determinant")
        if abs(det - 1) > tol.determinant:
            m = m / math.sqrt(det)
        self.matrix = canonical_sign(m)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2))

    @classmethod
    def from_disk_matrix(cls, U: np.ndarray) -> "Isometry":
        """Convert an SU(1,1) matrix acting on the disk."""
        M = _CAYLEY_INV @ np.asarray(U, dtype=complex) @ _CAYLEY
        M = M / np.sqrt(np.linalg.det(M))
        if np.abs(M.imag).max() > 1e-9:
            raise ValidationError("matrix is not a disk isometry")
        return cls(M.real)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        (a, b), (c, d) = self.matrix
        return Isometry(np.array([[d, -b], [-c, a]]))

    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def quadruple(self) -> tuple[float, float, float, float]:
        return tuple(float(x) for x in self.matrix.ravel())

    def close_to(self, other: "Isometry", tol: float = 1e-9) -> bool:
        return np.abs(self.matrix - other.matrix).max() < tol

    def __repr__(self) -> str:
        a, b, c, d = self.quadruple()
        return f"Isometry({a:.6g}, {b:.6g}, {c:.6g}, {d:.6g})"


def check_point(z: complex, tol: Tolerances = TOL) -> complex:
    z = complex(z)
    if not abs(z) < 1 - tol.boundary_guard:
        raise NumericalFailure(f"point {z} is outside the disk guard")
    return z


def apply(iso: Isometry, p: complex, tol: Tolerances = TOL) -> complex:
    (a, b), (c, d) = iso.matrix
    w = to_half_plane(check_point(p, tol))
    return check_point(to_disk((a * w + b) / (c * w + d)), tol)


def orbit_points(mats: np.ndarray) -> np.ndarray:
    """Images of the origin under a stack of SL(2,R) matrices."""
    mats = np.asarray(mats)
    w = (mats[..., 0, 0] * 1j + mats[..., 0, 1]) / (mats[..., 1, 0] * 1j + mats[..., 1, 1])
    return to_disk(w)


def rotation_about(p: complex, angle: float) -> Isometry:
    """Counterclockwise rotation by ``angle`` about the disk point ``p``."""
    if abs(angle) > 2 * math.pi + 1e-12:
        raise ValidationError("rotation angle must satisfy |angle| <= 2*pi")
    w = to_half_plane(check_point(p))
    x, y = w.real, w.imag
    T = np.array([[math.sqrt(y), x / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])  # i -> w
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return Isometry(T @ np.array([[c, s], [-s, c]]) @ np.linalg.inv(T))


def translation_along_real_axis(d: float) -> Isometry:
    """Hyperbolic translation by distance ``d`` along the disk diameter [-1, 1]."""
    ch, sh = math.cosh(d / 2), math.sinh(d / 2)
    return Isometry.from_disk_matrix(np.array([[ch, sh], [sh, ch]]))


def rotation_about_origin(angle: float) -> Isometry:
    return Isometry.from_disk_matrix(np.diag([np.exp(0.5j * angle), np.exp(-0.5j * angle)]))


def segment_frame(p: complex, q: complex) -> Isometry:
    """The isometry taking 0 to ``p`` and the positive real axis towards ``q``."""
    p, q = check_point(p), check_point(q)
    direction = np.angle((q - p) / (1 - np.conj(p) * q))
    e = np.exp(0.5j * direction)
    U = np.array([[e, p / e], [np.conj(p) * e, 1 / e]]) / math.sqrt(1 - abs(p) ** 2)
    return Isometry.from_disk_matrix(U)


def distance(p: complex, q: complex) -> float:
    p, q = check_point(p), check_point(q)
    r = abs((p - q) / (1 - np.conj(q) * p))
    return 2 * math.atanh(min(r, 1.0))


def _direction(v: complex, u: complex) -> complex:
    # moving v to 0 by a disk automorphism keeps tangent directions at v
    return (u - v) / (1 - np.conj(v) * u)


def vertex_angle(v: complex, a: complex, b: complex) -> float:
    """Signed angle at ``v`` turning from the geodesic towards a to the one towards b."""
    return float(np.angle(_direction(v, b) / _direction(v, a)))


def signed_triangle_area(p1: complex, p2: complex, p3: complex, tol: Tolerances = TOL) -> float:
    """Area pi - (angle sum), positive for counterclockwise vertex order."""
    pts = [check_point(p, tol) for p in (p1, p2, p3)]
    if min(abs(pts[0] - pts[1]), abs(pts[1] - pts[2]), abs(pts[2] - pts[0])) < tol.coincident:
        return 0.0
    a1 = vertex_angle(pts[0], pts[1], pts[2])
    a2 = vertex_angle(pts[1], pts[2], pts[0])
    a3 = vertex_angle(pts[2], pts[0], pts[1])
    deficit = math.pi - abs(a1) - abs(a2) - abs(a3)
    if abs(deficit) < tol.degenerate:  # collinear along one geodesic
        return 0.0
    return math.copysign(deficit, a1)


def areas_from_origin(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised signed area of the triangles (0, a, b): 2*arg(1 - a*conj(b))."""
    return 2 * np.angle(1 - np.asarray(a) * np.conj(b))


def areas(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Vectorised signed areas of (p, q, r), via moving p to the origin."""
    p = np.asarray(p)
    q2 = (q - p) / (1 - np.conj(p) * q)
    r2 = (r - p) / (1 - np.conj(p) * r)
    return areas_from_origin(q2, r2)


def classify(iso: Isometry, tol: Tolerances = TOL) -> str:
    if np.abs(iso.matrix - np.eye(2)).max() < tol.classify:
        return "identity"
    t = abs(iso.trace())
    if abs(t - 2) <= tol.classify:
        return "parabolic"
    return "elliptic" if t < 2 else "hyperbolic"


def polygon_area(vertices) -> float:
    """Signed area of a geodesic polygon by fanning triangles from the first vertex."""
    v = [complex(z) for z in vertices]
    return sum(signed_triangle_area(v[0], v[k], v[k + 1]) for k in range(1, len(v) - 1))


class PoincareDisk:
    """Geometry hooks used by group realizations on the hyperbolic plane."""

    name = "hyperbolic"
    dtype = float

    @staticmethod
    def orbit_points(mats: np.ndarray) -> np.ndarray:
        return orbit_points(mats)

    @staticmethod
    def areas(p, q, r) -> np.ndarray:
        return areas(p, q, r)

    @staticmethod
    def areas_from_origin(a, b) -> np.ndarray:
        return areas_from_origin(a, b)


class EuclideanPlane:
    """Flat plane; group elements are complex matrices [[1, t], [0, 1]] acting as z -> z + t."""

    name = "euclidean"
    dtype = complex

    @staticmethod
    def orbit_points(mats: np.ndarray) -> np.ndarray:
        mats = np.asarray(mats)
        return mats[..., 0, 1] / mats[..., 1, 1]

    @staticmethod
    def areas_from_origin(a, b) -> np.ndarray:
        return 0.5 * np.imag(np.conj(a) * b)

    @classmethod
    def areas(cls, p, q, r) -> np.ndarray:
        return cls.areas_from_origin(np.asarray(q) - p, np.asarray(r) - p)

    @staticmethod
    def translation(t: complex) -> np.ndarray:
        return np.array([[1, t], [0, 1]], dtype=complex)
