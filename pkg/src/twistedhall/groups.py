"""Matrix realizations of signature groups and their Cayley balls.

Generators are indexed A_1..A_g, B_1..B_g, C_1..C_n (0-based internally).
A word is a tuple of nonzero ints: letter ``k`` means generator ``k-1`` and
``-k`` its inverse.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import hypgeom as hg
from ._validation import NumericalFailure, ValidationError, check_int
from .signatures import EUCLIDEAN, HYPERBOLIC, Signature, phi

OUT = -1  # product left the ball


# --------------------------------------------------------------------------
# presentations and words


@dataclass(frozen=True)
class Presentation:
    genus: int
    cone_orders: tuple[int, ...] = ()

    @classmethod
    def of(cls, sig: Signature) -> "Presentation":
        return cls(sig.genus, sig.cone_orders)

    @property
    def num_generators(self) -> int:
        return 2 * self.genus + len(self.cone_orders)

    @property
    def generator_names(self) -> list[str]:
        g = self.genus
        return ([f"A{i + 1}" for i in range(g)] + [f"B{i + 1}" for i in range(g)]
                + [f"C{j + 1}" for j in range(len(self.cone_orders))])

    def letter(self, name: str) -> int:
        return self.generator_names.index(name) + 1

    def long_relator(self) -> tuple[int, ...]:
        g, word = self.genus, []
        for i in range(g):
            a, b = i + 1, g + i + 1
            word += [a, b, -a, -b]
        word += [2 * g + j + 1 for j in range(len(self.cone_orders))]
        return tuple(word)

    def relators(self) -> list[tuple[int, ...]]:
        g = self.genus
        cones = [(2 * g + j + 1,) * v for j, v in enumerate(self.cone_orders)]
        return [self.long_relator()] + cones

    def abelian_image(self, letter: int) -> np.ndarray:
        """Image of a letter in Z^{2g}; cone generators map to 0."""
        v = np.zeros(2 * self.genus, dtype=np.int64)
        k = abs(letter) - 1
        if k < 2 * self.genus:
            v[k] = 1 if letter > 0 else -1
        return v

    def format_word(self, word) -> str:
        if not word:
            return "e"
        names = self.generator_names
        return ".".join(names[abs(k) - 1] + ("" if k > 0 else "^-1") for k in word)

    def parse_word(self, text: str) -> tuple[int, ...]:
        text = text.strip()
        if text in ("", "e"):
            return ()
        word = []
        for tok in re.split(r"[.\s*]+", text):
            m = re.fullmatch(r"([ABC]\d+)(\^(-?\d+))?", tok)
            if not m or m.group(1) not in self.generator_names:
                raise ValidationError(f"bad word token {tok!r}; use names like A1, B2^-1, C1^3")
            k = self.letter(m.group(1))
            p = int(m.group(3) or 1)
            word += [k if p > 0 else -k] * abs(p)
        return free_reduce(word)


def free_reduce(word) -> tuple[int, ...]:
    out: list[int] = []
    for k in word:
        if out and out[-1] == -k:
            out.pop()
        else:
            out.append(k)
    return tuple(out)


def canonical(m: np.ndarray) -> np.ndarray:
    return hg.canonical_sign(m)


def canonical_stack(M: np.ndarray) -> np.ndarray:
    flat = M.reshape(len(M), -1)
    first = np.argmax(np.abs(flat) > 1e-12, axis=1)
    lead = flat[np.arange(len(flat)), first]
    s = np.where(np.real(lead) < 0, -1, 1)
    return M * s[:, None, None]


def matrix_distance_to_identity(m: np.ndarray) -> float:
    return float(np.abs(canonical(m) - np.eye(2)).max())


# --------------------------------------------------------------------------
# realizations


@dataclass
class Realization:
    presentation: Presentation
    generators: list[np.ndarray]
    geometry: object = hg.PoincareDisk
    diagnostics: dict = field(default_factory=dict)

    @property
    def genus(self) -> int:
        return self.presentation.genus

    @property
    def fundamental_area(self) -> float:
        """Area of a fundamental domain: 2*pi*phi, or 1 for the unit square lattice."""
        if self.geometry is hg.EuclideanPlane:
            return 1.0
        p = self.presentation
        return 2 * math.pi * float(phi(Signature(p.genus, p.cone_orders)))

    def letter_matrix(self, k: int) -> np.ndarray:
        m = self.generators[abs(k) - 1]
        return m if k > 0 else np.linalg.inv(m)

    def word_matrix(self, word) -> np.ndarray:
        m = np.eye(2, dtype=self.geometry.dtype)
        for k in word:
            m = m @ self.letter_matrix(k)
        return m

    def relator_residuals(self) -> list[float]:
        return [matrix_distance_to_identity(self.word_matrix(r)) for r in self.presentation.relators()]

    @property
    def residual(self) -> float:
        return max(self.relator_residuals())

    def symmetric_generators(self, multiplicity: bool = False) -> list[int]:
        """Letters of S.  An involution C with C = C^-1 appears once unless ``multiplicity``."""
        letters = []
        for k in range(1, self.presentation.num_generators + 1):
            letters.append(k)
            m = self.generators[k - 1]
            same = np.abs(canonical(np.linalg.inv(m)) - canonical(m)).max() < 1e-9
            if multiplicity or not same:
                letters.append(-k)
        return letters

    def validate(self, tol: hg.Tolerances = hg.TOL) -> "Realization":
        """Relators, generator types and a stabilizer-free basepoint; raises on failure."""
        res = self.residual
        if res > tol.relator:
            raise NumericalFailure(f"relator residual {res:.3e} exceeds {tol.relator:g}")
        g = self.genus
        if self.geometry is hg.PoincareDisk:
            for k, m in enumerate(self.generators):
                kind = hg.classify(hg.Isometry(m))
                if k < 2 * g and kind != "hyperbolic":
                    raise NumericalFailure(f"handle generator {k + 1} is {kind}")
                if k >= 2 * g:
                    v = self.presentation.cone_orders[k - 2 * g]
                    if abs(abs(np.trace(m)) - 2 * abs(math.cos(math.pi / v))) > tol.classify:
                        raise NumericalFailure(f"cone generator {k + 1} is not a rotation by 2pi/{v}")
        pts = self.geometry.orbit_points(np.array(self.generators))
        if np.min(np.abs(pts)) < 1e-6:
            raise NumericalFailure("basepoint is fixed by a generator")
        return self


def euclidean_lattice_realization() -> Realization:
    """Z^2 acting on the plane by unit translations (signature (1;))."""
    E = hg.EuclideanPlane
    real = Realization(Presentation(1), [E.translation(1.0), E.translation(1j)], E)
    real.diagnostics["kind"] = "euclidean lattice"
    return real.validate()


def _regular_polygon_radius(N: int, angle: float) -> float:
    """Disk radius of the vertices of a regular N-gon with interior angle ``angle``."""
    cosh_r = 1 / (math.tan(math.pi / N) * math.tan(angle / 2))
    if cosh_r <= 1:
        raise ValidationError("no hyperbolic regular polygon with these angles")
    return math.tanh(math.acosh(cosh_r) / 2)


def surface_group_realization(g: int) -> Realization:
    """Closed-form side pairings of the regular 4g-gon with all angles 2pi/4g."""
    g = check_int(g, "g", 2)
    N = 4 * g
    rho = math.acosh(1 / math.tan(math.pi / N))  # center to side midpoint
    th = [2 * math.pi * k / N for k in range(N)]

    def pair(a, b):  # maps side a onto side b
        return (hg.rotation_about_origin(th[b]) @ hg.translation_along_real_axis(2 * rho)
                @ hg.rotation_about_origin(math.pi - th[a])).matrix

    A = [pair(4 * i + 2, 4 * i) for i in range(g)]
    B = [np.linalg.inv(pair(4 * i + 3, 4 * i + 1)) for i in range(g)]
    real = Realization(Presentation(g), A + B)
    r = _regular_polygon_radius(N, 2 * math.pi / N)
    verts = [r * np.exp(1j * (t + math.pi / N)) for t in th]
    real.diagnostics.update(kind="regular polygon", polygon_area=hg.polygon_area(verts))
    return real.validate()


def _hyperbolic_triangle_sides(p: int, q: int, r: int) -> tuple[float, float]:
    a, b, c = math.pi / p, math.pi / q, math.pi / r
    l_pq = math.acosh((math.cos(c) + math.cos(a) * math.cos(b)) / (math.sin(a) * math.sin(b)))
    l_pr = math.acosh((math.cos(b) + math.cos(a) * math.cos(c)) / (math.sin(a) * math.sin(c)))
    return l_pq, l_pr


def _move_to_origin(mats: list[np.ndarray], z: complex) -> list[np.ndarray]:
    """Conjugate so that the disk point z becomes the basepoint."""
    w = hg.to_half_plane(z)
    T = np.array([[math.sqrt(w.imag), w.real / math.sqrt(w.imag)], [0, 1 / math.sqrt(w.imag)]])
    Ti = np.linalg.inv(T)
    return [canonical(Ti @ m @ T) for m in mats]


def triangle_rotation_group(p: int, q: int, r: int) -> Realization:
    """Rotations by 2pi/p, 2pi/q, 2pi/r about the vertices of the (pi/p, pi/q, pi/r) triangle."""
    p, q, r = (check_int(x, "order", 2) for x in (p, q, r))
    if Signature(0, (p, q, r)).geometry_class != HYPERBOLIC:
        raise ValidationError(f"triangle ({p},{q},{r}) is not hyperbolic")
    l_pq, l_pr = _hyperbolic_triangle_sides(p, q, r)
    P, Q, R = 0j, math.tanh(l_pq / 2) + 0j, math.tanh(l_pr / 2) * np.exp(1j * math.pi / p)
    best = None
    for signs in itertools.product((1, -1), repeat=3):
        C = [hg.rotation_about(P, signs[0] * 2 * math.pi / p).matrix,
             hg.rotation_about(Q, signs[1] * 2 * math.pi / q).matrix,
             hg.rotation_about(R, signs[2] * 2 * math.pi / r).matrix]
        res = matrix_distance_to_identity(C[0] @ C[1] @ C[2])
        if best is None or res < best[0]:
            best = (res, C)
    gens = _move_to_origin(best[1], (P + Q + R) / 3)
    real = Realization(Presentation(0, (p, q, r)), gens)
    real.diagnostics["kind"] = "triangle rotations"
    return real.validate()


# ---- general signatures: solve for a fundamental polygon

def _interior_angles(V: np.ndarray) -> np.ndarray:
    nxt, prv = np.roll(V, -1), np.roll(V, 1)
    d_next = (nxt - V) / (1 - np.conj(V) * nxt)
    d_prev = (prv - V) / (1 - np.conj(V) * prv)
    return np.mod(np.angle(d_prev) - np.angle(d_next), 2 * math.pi)


def _lengths(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2 * np.arctanh(np.abs((a - b) / (1 - np.conj(b) * a)))


class _PolygonModel:
    """Vertex layout a1 b1 a1' b1' ... c1 c1' ... of the canonical fundamental polygon."""

    def __init__(self, genus: int, cone_orders: tuple[int, ...]):
        self.g, self.orders = genus, cone_orders
        self.N = 4 * genus + 2 * len(cone_orders)
        self.cone_vertices = [4 * genus + 2 * j + 1 for j in range(len(cone_orders))]
        # (side k, partner side) pairs; side k runs from V_k to V_{k+1}
        self.pairs = []
        for i in range(genus):
            self.pairs += [(4 * i, 4 * i + 2), (4 * i + 1, 4 * i + 3)]
        self.pairs = self.pairs[0::2] + self.pairs[1::2]  # A's first, then B's
        self.pairs += [(4 * genus + 2 * j, 4 * genus + 2 * j + 1) for j in range(len(cone_orders))]

    def residual(self, x: np.ndarray) -> np.ndarray:
        N = self.N
        V = x[:N] + 1j * x[N:]
        if np.any(np.abs(V) >= 1 - 1e-9):
            return np.full(len(self.pairs) + len(self.orders) + 1, 1e3)
        nxt = np.roll(V, -1)
        side = _lengths(V, nxt)
        ang = _interior_angles(V)
        out = [side[a] - side[b] for a, b in self.pairs]
        out += [ang[k] - 2 * math.pi / v for k, v in zip(self.cone_vertices, self.orders)]
        accidental = np.ones(N, bool)
        accidental[self.cone_vertices] = False
        out.append(ang[accidental].sum() - 2 * math.pi)
        return np.array(out)

    def initial(self, rng: np.random.Generator, jitter: float) -> np.ndarray:
        total = 2 * math.pi + sum(2 * math.pi / v for v in self.orders)
        r = _regular_polygon_radius(self.N, total / self.N)
        V = r * np.exp(2j * math.pi * np.arange(self.N) / self.N)
        V = V * (1 + jitter * rng.standard_normal(self.N)) * np.exp(1j * jitter * rng.standard_normal(self.N))
        return np.concatenate([V.real, V.imag])


def _gauss_newton(fun, x0: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, float, int]:
    x = x0.copy()
    F = fun(x)
    h = 1e-7
    for it in range(max_iter):
        norm = np.abs(F).max()
        if norm < tol:
            return x, norm, it
        J = np.empty((len(F), len(x)))
        for k in range(len(x)):
            e = np.zeros_like(x)
            e[k] = h
            J[:, k] = (fun(x + e) - fun(x - e)) / (2 * h)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t > 1e-6:  # backtracking keeps the polygon inside the disk
            F_new = fun(x + t * step)
            if np.abs(F_new).max() < norm:
                break
            t /= 2
        x, F = x + t * step, F_new
    return x, np.abs(F).max(), max_iter


def _inside(V: np.ndarray, z: complex) -> bool:
    nxt = np.roll(V, -1)
    return bool(np.all(hg.areas(np.full(len(V), z), V, nxt) > 0))


def signature_group_realization(sig: Signature, seed: int = 0, max_iter: int = 200,
                                jitter: float = 0.02) -> Realization:
    """Solve for a fundamental polygon, then read the generators off its side pairings.

    Unknowns are the polygon vertices; constraints are equal lengths on paired
    sides, cone angles 2pi/nu and total angle 2pi around the accidental vertex.
    Least-squares (minimum-norm) Gauss-Newton steps absorb the gauge and
    Teichmuller freedom.  The run is deterministic for a given seed.
    """
    if sig.geometry_class != HYPERBOLIC:
        raise ValidationError(f"signature {sig} is not hyperbolic")
    model = _PolygonModel(sig.genus, sig.cone_orders)
    rng = np.random.default_rng(check_int(seed, "seed", 0))
    x, res, iters = _gauss_newton(model.residual, model.initial(rng, jitter), max_iter, 1e-13)
    if res > 1e-11:
        raise NumericalFailure(f"polygon solver did not converge: residual {res:.3e} after {iters} steps")
    N = model.N
    V = x[:N] + 1j * x[N:]
    if not _inside(V, 0j):
        raise NumericalFailure("basepoint left the fundamental polygon")

    def pairing(a, b):  # maps side b (reversed) onto side a
        sa = hg.segment_frame(V[a], V[(a + 1) % N])
        sb = hg.segment_frame(V[(b + 1) % N], V[b])
        return (sa @ sb.inverse()).matrix

    cand = [pairing(a, b) for a, b in model.pairs]
    pres = Presentation.of(sig)
    best = None
    for signs in itertools.product((1, -1), repeat=len(cand)):
        gens = [m if s > 0 else np.linalg.inv(m) for m, s in zip(cand, signs)]
        real = Realization(pres, [canonical(m) for m in gens])
        r = real.residual
        if best is None or r < best[0]:
            best = (r, real)
        if r < 1e-10:
            break
    real = best[1]
    real.diagnostics.update(kind="polygon solve", seed=seed, iterations=iters,
                            constraint_residual=float(res), polygon_area=hg.polygon_area(V),
                            polygon_vertices=[complex(v) for v in V])
    return real.validate()


def realize(sig: Signature, seed: int = 0) -> Realization:
    """Pick the construction for a signature: lattice, regular polygon, triangle, or solver."""
    if sig.geometry_class == EUCLIDEAN:
        if sig.genus == 1 and not sig.cone_orders:
            return euclidean_lattice_realization()
        raise ValidationError(f"euclidean signature {sig} is only supported as (1;)")
    if sig.geometry_class != HYPERBOLIC:
        raise ValidationError(f"signature {sig} is spherical")
    if sig.genus >= 2 and not sig.cone_orders:
        return surface_group_realization(sig.genus)
    if sig.genus == 0 and len(sig.cone_orders) == 3:
        return triangle_rotation_group(*sig.cone_orders)
    return signature_group_realization(sig, seed)


def fundamental_class_area(real: Realization) -> float:
    """Signed area swept by the long relator's orbit path, net of the cone loops.

    Each cone loop C_j^nu_j contributes 1/nu_j of its own fan area with opposite
    sign, which turns the relator into a rational 2-cycle.  The magnitude is the
    fundamental-domain area; the sign records the orientation of the relator.
    """
    geom = real.geometry

    def fan(word):
        pts, m = [0j], np.eye(2, dtype=geom.dtype)
        for k in word:
            m = m @ real.letter_matrix(k)
            pts.append(complex(geom.orbit_points(m[None])[0]))
        pts = np.array(pts)
        return float(geom.areas_from_origin(pts[:-1], pts[1:]).sum())

    pres = real.presentation
    total = fan(pres.long_relator())
    for word, v in zip(pres.relators()[1:], pres.cone_orders):
        total -= fan(word) / v
    return total


def symplectic_class(real: Realization) -> int:
    """Symplectic area of the long relator's path in Z^{2g} (2 per commutator)."""
    pres, g = real.presentation, real.genus
    v = np.zeros(2 * g, dtype=np.int64)
    total = 0
    for k in pres.long_relator():
        w = v + pres.abelian_image(k)
        total += int(v[:g] @ w[g:] - v[g:] @ w[:g])
        v = w
    return total


# --------------------------------------------------------------------------
# Cayley balls


class CollisionError(NumericalFailure):
    """Two distinct group elements landed in the same hash cell."""


def _scales(M: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.abs(M).reshape(len(M), -1).max(1))


def _quantize(M: np.ndarray, q: float) -> tuple[np.ndarray, np.ndarray]:
    flat = M.reshape(len(M), -1)
    if np.iscomplexobj(flat):
        flat = np.concatenate([flat.real, flat.imag], axis=1)
    scaled = flat / (q * _scales(M))[:, None]
    return np.round(scaled).astype(np.int64), scaled


_HASH_WEIGHTS = np.array([0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9, 0xD6E8FEB86659FD93,
                          0xFF51AFD7ED558CCD, 0xC4CEB9FE1A85EC53, 0x94D049BB133111EB, 0xBF58476D1CE4E5B9],
                         dtype=np.uint64).view(np.int64)


class MatrixIndex:
    """Hash index from quantized canonical matrices to ids, with vectorised lookup.

    A matrix is quantized on a grid of ``q`` times its largest entry (at least
    1).  Lookups that miss retry the neighbouring grid cell on any coordinate
    that sits within rounding noise of a cell edge.
    """

    def __init__(self, q: float):
        self.q = q
        self._hash = np.empty(0, dtype=np.int64)
        self._keys = np.empty((0, 0), dtype=np.int64)
        self._ids = np.empty(0, dtype=np.int64)

    def __len__(self) -> int:
        return len(self._ids)

    def _hashes(self, keys: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return (keys * _HASH_WEIGHTS[: keys.shape[1]]).sum(axis=1)

    def add(self, mats: np.ndarray, ids: np.ndarray) -> None:
        keys, _ = _quantize(mats, self.q)
        allkeys = keys if len(self._ids) == 0 else np.concatenate([self._keys, keys])
        h = np.concatenate([self._hash, self._hashes(keys)])
        ids = np.concatenate([self._ids, np.asarray(ids, dtype=np.int64)])
        order = np.argsort(h, kind="stable")
        self._hash, self._keys, self._ids = h[order], allkeys[order], ids[order]
        if np.any((np.diff(self._hash) == 0) & np.any(np.diff(self._keys, axis=0) != 0, axis=1)):
            raise CollisionError("hash collision between distinct quantized matrices")

    def _find(self, keys: np.ndarray) -> np.ndarray:
        out = np.full(len(keys), OUT, dtype=np.int64)
        if len(self._ids) == 0 or len(keys) == 0:
            return out
        h = self._hashes(keys)
        pos = np.minimum(np.searchsorted(self._hash, h), len(self._hash) - 1)
        hit = (self._hash[pos] == h) & np.all(self._keys[pos] == keys, axis=1)
        out[hit] = self._ids[pos[hit]]
        return out

    def lookup(self, mats: np.ndarray, chunk: int = 1 << 20) -> np.ndarray:
        if len(mats) > chunk:
            return np.concatenate([self.lookup(mats[i:i + chunk]) for i in range(0, len(mats), chunk)])
        keys, scaled = _quantize(mats, self.q)
        out = self._find(keys)
        frac = scaled - keys
        edge = np.abs(frac) > 0.5 - 1e-4
        for i in np.flatnonzero((out == OUT) & edge.any(axis=1)):
            cols = np.flatnonzero(edge[i])
            for r in range(1, len(cols) + 1):
                alts = []
                for combo in itertools.combinations(cols, r):
                    alt = keys[i].copy()
                    alt[list(combo)] += np.sign(frac[i, list(combo)]).astype(np.int64)
                    alts.append(alt)
                found = self._find(np.array(alts))
                if np.any(found != OUT):
                    out[i] = found[found != OUT][0]
                    break
            else:
                continue
        return out


@dataclass
class CayleyBall:
    """Group elements of word length <= radius, found by breadth-first search.

    ``right[x, s]`` and ``left[x, s]`` hold the ids of x*S[s] and S[s]*x (or OUT).
    ``words[x]`` is the first word that reached x, so its length is the BFS depth.
    """

    realization: Realization
    radius: int
    letters: list[int]
    matrices: np.ndarray
    words: list[tuple[int, ...]]
    lengths: np.ndarray
    parents: np.ndarray
    last_letter: np.ndarray
    points: np.ndarray
    abelian: np.ndarray
    index: MatrixIndex
    right: np.ndarray
    left: np.ndarray
    inverse: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.words)

    @property
    def genus(self) -> int:
        return self.realization.genus

    @property
    def geometry(self):
        return self.realization.geometry

    @property
    def quantization(self) -> float:
        return self.index.q

    def lookup(self, mats: np.ndarray) -> np.ndarray:
        """Ids of the given matrices (OUT when absent)."""
        return self.index.lookup(canonical_stack(np.asarray(mats)))

    def multiply(self, x: int, y: int) -> int:
        return int(self.multiply_many([x], [y])[0])

    def multiply_many(self, xs, ys) -> np.ndarray:
        xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64))
        shape = xs.shape
        xs, ys = xs.ravel(), ys.ravel()
        out = np.full(len(xs), OUT, dtype=np.int64)
        ok = (xs >= 0) & (ys >= 0)
        out[ok] = self.lookup(self.matrices[xs[ok]] @ self.matrices[ys[ok]])
        return out.reshape(shape)

    def product_table(self, xs, ys) -> np.ndarray:
        """table[i, j] = id of xs[i] * ys[j] (OUT when it leaves the ball)."""
        xs, ys = np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)
        table = np.empty((len(xs), len(ys)), dtype=np.int64)
        step = max(1, (1 << 20) // max(1, len(xs)))
        for j in range(0, len(ys), step):
            cols = ys[j:j + step]
            prods = np.einsum("aij,bjk->abik", self.matrices[xs], self.matrices[cols]).reshape(-1, 2, 2)
            table[:, j:j + step] = self.lookup(prods).reshape(len(xs), len(cols))
        return table

    def abelianization(self, x: int) -> np.ndarray:
        return self.abelian[x].copy()

    def element(self, word) -> int:
        return int(self.lookup(self.realization.word_matrix(word)[None])[0])

    def word_string(self, x: int) -> str:
        return self.realization.presentation.format_word(self.words[x])

    def within(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.lengths <= r)

    def audit(self, min_separation: float | None = None) -> float:
        """Smallest distance between distinct orbit points.

        Raises CollisionError when two ids sit closer than ``10 * quantization``;
        the basepoint has trivial stabilizer, so distinct elements must have
        distinct orbit points.
        """
        sep = 10 * self.quantization if min_separation is None else min_separation
        if len(self) < 2:
            return math.inf
        pts = self.points
        xy = np.column_stack([pts.real, pts.imag])
        _, nn = cKDTree(xy).query(xy, k=2)
        a, b = pts, pts[nn[:, 1]]
        if self.geometry is hg.PoincareDisk:
            dist = 2 * np.arctanh(np.minimum(np.abs((a - b) / (1 - np.conj(b) * a)), 1 - 1e-16))
        else:
            dist = np.abs(a - b)
        worst = float(dist.min())
        if worst <= sep:
            i = int(np.argmin(dist))
            raise CollisionError(f"elements {i} and {int(nn[i, 1])} have orbit points {worst:.2e} apart")
        return worst


def cayley_ball(real: Realization, R: int, multiplicity: bool = False,
                quantization: float = hg.TOL.quantization, audit: bool = True) -> CayleyBall:
    """Breadth-first enumeration of the elements of word length <= R.

    ``multiplicity`` keeps both C and C^-1 for involutions in the generator
    list (the ball itself does not change).
    """
    R = check_int(R, "radius", 0)
    bfs_letters = real.symmetric_generators(multiplicity=False)
    S = np.array([real.letter_matrix(k) for k in bfs_letters])
    S_ab = np.array([real.presentation.abelian_image(k) for k in bfs_letters]).reshape(len(bfs_letters), -1)
    eye = np.eye(2, dtype=real.geometry.dtype)[None]
    index = MatrixIndex(quantization)
    index.add(eye, [0])
    mats, lengths = [eye], [np.zeros(1, np.int64)]
    parents, last = [np.array([OUT])], [np.array([0])]
    frontier, n = np.array([0]), 1
    all_mats = eye
    for r in range(1, R + 1):
        cand = canonical_stack(np.einsum("fij,sjk->fsik", all_mats[frontier], S).reshape(-1, 2, 2))
        miss = np.flatnonzero(index.lookup(cand) == OUT)
        if len(miss) == 0:
            break
        keys, _ = _quantize(cand[miss], quantization)
        _, first = np.unique(keys, axis=0, return_index=True)
        fresh = miss[np.sort(first)]  # keep discovery order
        ids = np.arange(n, n + len(fresh))
        index.add(cand[fresh], ids)
        mats.append(cand[fresh])
        lengths.append(np.full(len(fresh), r))
        parents.append(frontier[fresh // len(bfs_letters)])
        last.append(fresh % len(bfs_letters))
        all_mats = np.concatenate([all_mats, cand[fresh]])
        frontier, n = ids, n + len(fresh)
    matrices = all_mats
    parents, last = np.concatenate(parents), np.concatenate(last)
    words: list[tuple[int, ...]] = [()]
    abel = np.zeros((n, 2 * real.genus), dtype=np.int64)
    for x in range(1, n):
        words.append(words[parents[x]] + (bfs_letters[last[x]],))
        abel[x] = abel[parents[x]] + S_ab[last[x]]
    letters = real.symmetric_generators(multiplicity=multiplicity)
    S = np.array([real.letter_matrix(k) for k in letters])
    right = index.lookup(canonical_stack(np.einsum("nij,sjk->nsik", matrices, S).reshape(-1, 2, 2)))
    left = index.lookup(canonical_stack(np.einsum("sij,njk->nsik", S, matrices).reshape(-1, 2, 2)))
    inverse = index.lookup(canonical_stack(np.linalg.inv(matrices)))
    if np.any(inverse == OUT):
        raise CollisionError("ball is not closed under inverses")
    letter_pos = {k: i for i, k in enumerate(letters)}
    ball = CayleyBall(real, R, letters, matrices, words, np.concatenate(lengths), parents,
                      np.array([letter_pos.get(bfs_letters[s], OUT) for s in last]),
                      real.geometry.orbit_points(matrices), abel, index,
                      right.reshape(n, len(letters)), left.reshape(n, len(letters)), inverse)
    if audit:
        ball.audit()
    return ball
