"""Closed discrete curves and circumradius kernel primitives.

Curves are closed polygons with a uniform parameter grid: vertex ``i``
sits at parameter ``u = i/N`` on the circle R/Z.  All kernel algebra is
dimension-agnostic (2D and 3D) through the Gram identity
``|a wedge b|^2 = |a|^2 |b|^2 - <a,b>^2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import BadPreset, DegenerateTriple, ResampleFailure, SelfIntersection

# Relative edge-length spread below which a polygon counts as arc-length
# parametrized (equal edges on the uniform grid).
ARCLENGTH_RTOL = 1e-8

_SUPPORTED_DIMS = (2, 3)


def circle_distance(x, y=0.0):
    """Distance d(x, y) = min_k |x - y - k| on R/Z, in [0, 1/2]."""
    d = np.abs(np.mod(np.asarray(x, dtype=float) - y, 1.0))
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class PeriodicOffset:
    """A parameter offset reduced to the fundamental interval (-1/2, 1/2]."""

    value: float

    def __post_init__(self):
        if not (-0.5 < self.value <= 0.5):
            raise ValueError(f"offset {self.value} outside (-1/2, 1/2]")

    @classmethod
    def reduce(cls, x: float) -> "PeriodicOffset":
        v = x - round(x)
        if v <= -0.5:
            v += 1.0
        return cls(v)

    @property
    def distance(self) -> float:
        """Distance to zero on R/Z."""
        return abs(self.value)


@dataclass(frozen=True)
class TriplePoint:
    """Three points in R^dim feeding the circumradius kernel."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim != 1 or v.shape[0] not in _SUPPORTED_DIMS:
                raise ValueError(f"point {name} must be a vector in R^2 or R^3")
            object.__setattr__(self, name, v)
        if not (self.x.shape == self.y.shape == self.z.shape):
            raise ValueError("points must share one dimension")

    @property
    def dim(self) -> int:
        return self.x.shape[0]


class ClosedCurve:
    """Uniformly indexed closed polygon in R^2 or R^3.

    Parameters
    ----------
    vertices : (N, dim) array_like
        Ordered vertex list; vertex ``i`` corresponds to parameter ``i/N``.
    is_arclength : bool
        Asserts that all edge lengths agree within ``ARCLENGTH_RTOL``.
        The flag is verified on construction.
    """

    __slots__ = ("vertices", "is_arclength")

    def __init__(self, vertices, is_arclength: bool = False):
        verts = np.array(vertices, dtype=float)
        if verts.ndim != 2:
            raise ValueError("vertices must be an (N, dim) array")
        n, dim = verts.shape
        if dim not in _SUPPORTED_DIMS:
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if n < 3:
            raise ValueError(f"need at least 3 vertices, got {n}")
        edges = np.roll(verts, -1, axis=0) - verts
        ell = np.linalg.norm(edges, axis=1)
        if np.min(ell) <= 0.0:
            raise ValueError("consecutive vertices must be distinct")
        if is_arclength and np.max(ell) / np.min(ell) > 1.0 + ARCLENGTH_RTOL:
            raise ValueError(
                "is_arclength set but edge lengths spread by "
                f"{np.max(ell) / np.min(ell) - 1.0:.3e} (> {ARCLENGTH_RTOL})"
            )
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "is_arclength", bool(is_arclength))

    def __setattr__(self, name, value):
        raise AttributeError("ClosedCurve is immutable")

    # -- basic descriptors -------------------------------------------------

    @property
    def N(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors, axis=1)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.edge_lengths))

    @property
    def tangents(self) -> np.ndarray:
        """Unit tangent of edge i, attached to the midpoint (i + 1/2)/N."""
        e = self.edge_vectors
        return e / np.linalg.norm(e, axis=1, keepdims=True)

    @property
    def mean_edge_length(self) -> float:
        return self.total_length / self.N

    def with_vertices(self, vertices, is_arclength=None) -> "ClosedCurve":
        if is_arclength is None:
            ell = np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1)
            is_arclength = np.max(ell) / np.min(ell) <= 1.0 + ARCLENGTH_RTOL
        return ClosedCurve(vertices, is_arclength=is_arclength)

    def scaled_to_length(self, target: float = 1.0) -> "ClosedCurve":
        """Dilate about the centroid so the polygon length equals ``target``."""
        c = self.vertices.mean(axis=0)
        factor = target / self.total_length
        return ClosedCurve(c + (self.vertices - c) * factor, self.is_arclength)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "vertices": self.vertices.tolist(),
                "is_arclength": self.is_arclength,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ClosedCurve":
        data = json.loads(text)
        verts = np.asarray(data["vertices"], dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 3:
            raise ValueError("curve JSON needs at least 3 vertices")
        if verts.shape[1] != int(data["dim"]):
            raise ValueError("dim field disagrees with vertex width")
        return cls(verts, is_arclength=bool(data["is_arclength"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        for row in self.vertices:
            writer.writerow([repr(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ClosedCurve":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        verts = np.asarray([[float(v) for v in r] for r in rows])
        if verts.ndim != 2 or verts.shape[0] < 3:
            raise ValueError("curve CSV needs at least 3 vertices")
        # arc-length status is not stored in CSV; measure it
        ell = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
        flag = bool(np.max(ell) / np.min(ell) <= 1.0 + ARCLENGTH_RTOL)
        return cls(verts, is_arclength=flag)


def load_curve(path: str) -> ClosedCurve:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return ClosedCurve.from_csv(text)
    return ClosedCurve.from_json(text)


def save_curve(curve: ClosedCurve, path: str) -> None:
    text = curve.to_csv() if str(path).endswith(".csv") else curve.to_json()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- kernel primitives -----------------------------------------------------


def wedge_norm(a, b) -> float:
    """|a wedge b| via the Gram identity, clamped at zero.

    Equals the area of the parallelogram spanned by ``a`` and ``b``;
    in 2D this is the absolute determinant |a1 b2 - a2 b1|.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g = np.dot(a, a) * np.dot(b, b) - np.dot(a, b) ** 2
    return math.sqrt(max(g, 0.0))


def _triple_arrays(t):
    if isinstance(t, TriplePoint):
        return t.x, t.y, t.z
    x, y, z = (np.asarray(v, dtype=float) for v in t)
    return x, y, z


def circumradius(t) -> float:
    """Radius of the circle through three points; +inf when collinear.

    R(x, y, z) = |y-z| |y-x| |z-x| / (2 |(y-x) wedge (z-x)|).

    Raises
    ------
    DegenerateTriple
        If any two of the points coincide.
    """
    x, y, z = _triple_arrays(t)
    a = np.linalg.norm(y - z)
    b = np.linalg.norm(y - x)
    c = np.linalg.norm(z - x)
    if min(a, b, c) == 0.0:
        raise DegenerateTriple("two points of the triple coincide")
    w = wedge_norm(y - x, z - x)
    if w == 0.0:
        return math.inf
    return a * b * c / (2.0 * w)


def rpq_kernel(t, params) -> float:
    """Integrand factor 1/R^{p,q} = |(y-x) wedge (z-x)|^q / (|y-z||y-x||z-x|)^p.

    Collinear triples give 0 (infinite circumradius); coincident points
    raise :class:`DegenerateTriple` since the 0/0 limit does not exist.
    """
    x, y, z = _triple_arrays(t)
    a = np.linalg.norm(y - z)
    b = np.linalg.norm(y - x)
    c = np.linalg.norm(z - x)
    if min(a, b, c) == 0.0:
        raise DegenerateTriple("two points of the triple coincide")
    w = wedge_norm(y - x, z - x)
    if w == 0.0:
        return 0.0
    return w ** params.q / (a * b * c) ** params.p


# -- resampling ------------------------------------------------------------


def _interpolant_points(vertices, cum, seg, ell, s):
    """Points on the periodic piecewise-linear interpolant at arc positions s."""
    total = cum[-1]
    s = np.mod(s, total)
    idx = np.searchsorted(cum, s, side="right") - 1
    idx = np.clip(idx, 0, len(ell) - 1)
    t = (s - cum[idx]) / ell[idx]
    return vertices[idx] + t[:, None] * seg[idx]


def resample_arclength(curve: ClosedCurve, M: int, *, max_iter: int = 200) -> ClosedCurve:
    """Redistribute M vertices at equal intervals along the polygon.

    Points start at equal cumulative chord-length (= arc along the
    piecewise-linear interpolant) positions and are then relaxed *on the
    interpolant* until the output chords agree to ~1e-11 relative, so the
    arc-length invariant of :class:`ClosedCurve` holds exactly.  A final
    dilation restores the input polygon length (chords of an inscribed
    polygon are slightly shorter than the arcs they subtend).
    """
    if M < 3:
        raise ValueError("M must be at least 3")
    X = curve.vertices
    seg = curve.edge_vectors
    ell = curve.edge_lengths
    L = curve.total_length
    cum = np.concatenate(([0.0], np.cumsum(ell)))

    s = L * np.arange(M) / M
    P = _interpolant_points(X, cum, seg, ell, s)
    for _ in range(max_iter):
        chords = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        target = chords.sum() / M
        dev = np.max(np.abs(chords - target)) / target
        if dev <= 1e-11:
            break
        # cumulative chord surplus before each point; move points back by it
        corr = np.concatenate(([0.0], np.cumsum(chords - target)[:-1]))
        omega = 1.0
        while omega > 1e-4:
            s_new = s - omega * corr
            if np.all(np.diff(s_new) > 0) and s_new[-1] - s_new[0] < L:
                break
            omega *= 0.5
        s = s_new
        P = _interpolant_points(X, cum, seg, ell, s)
    else:
        chords = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        dev = np.max(np.abs(chords - chords.mean())) / chords.mean()
        if dev > ARCLENGTH_RTOL:
            raise ResampleFailure(
                f"equal-chord relaxation stalled at spread {dev:.2e} for M={M}"
            )

    centroid = P.mean(axis=0)
    chord_total = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1).sum()
    P = centroid + (P - centroid) * (L / chord_total)
    return ClosedCurve(P, is_arclength=True)


# -- embeddedness metrics ----------------------------------------------------


def bilipschitz_constant(curve: ClosedCurve) -> float:
    """max over vertex pairs of d_{R/Z}(i/N, j/N) / |gamma_i - gamma_j|.

    Finite for embedded curves; blows up as distant strands approach.
    """
    X = curve.vertices
    N = curve.N
    worst = 0.0
    for off in range(1, N // 2 + 1):
        chords = np.linalg.norm(np.roll(X, -off, axis=0) - X, axis=1)
        if np.min(chords) == 0.0:
            raise SelfIntersection(f"vertices {np.argmin(chords)} and +{off} coincide")
        worst = max(worst, (off / N) / np.min(chords))
    return worst


def _segment_pair_distance(p1, q1, p2, q2):
    """Vectorized closest distance between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    b = np.einsum("ij,ij->i", d1, d2)
    c = np.einsum("ij,ij->i", d1, r)
    f = np.einsum("ij,ij->i", d2, r)
    denom = a * e - b * b
    s = np.where(denom > 0.0, np.clip((b * f - c * e) / np.where(denom > 0, denom, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / e
    t_clamped = np.clip(t, 0.0, 1.0)
    s = np.where(t != t_clamped, np.clip((b * t_clamped - c) / a, 0.0, 1.0), s)
    closest1 = p1 + s[:, None] * d1
    closest2 = p2 + t_clamped[:, None] * d2
    return np.linalg.norm(closest1 - closest2, axis=1)


def min_segment_distance(curve: ClosedCurve) -> float:
    """Minimum distance between non-adjacent edges (adjacent = share a vertex).

    Edges i and (i + off) mod N are adjacent exactly for off in {0, 1, N-1},
    so cyclic offsets 2 .. N//2 cover every non-adjacent unordered pair.
    """
    if curve.N < 4:
        raise ValueError("need at least 4 vertices for non-adjacent edge pairs")
    X = curve.vertices
    N = curve.N
    Xn = np.roll(X, -1, axis=0)
    best = math.inf
    for off in range(2, N // 2 + 1):
        p2 = np.roll(X, -off, axis=0)
        q2 = np.roll(Xn, -off, axis=0)
        d = _segment_pair_distance(X, Xn, p2, q2)
        best = min(best, float(np.min(d)))
    return best


# -- presets -----------------------------------------------------------------

_PRESET_NAMES = ("circle", "ellipse", "torus_knot", "polygon", "perturbed_circle")


def _pad_dim(P, dim):
    if P.shape[1] == dim:
        return P
    if P.shape[1] == 2 and dim == 3:
        return np.column_stack([P, np.zeros(len(P))])
    raise BadPreset(f"cannot embed a {P.shape[1]}D preset in dimension {dim}")


def _from_samples(P, N, dim):
    """Arc-length resample a finely sampled closed loop and scale to length 1."""
    fine = ClosedCurve(_pad_dim(P, dim))
    return resample_arclength(fine, N).scaled_to_length(1.0)


def make_preset(name: str, N: int, dim: int = 2, **kwargs) -> ClosedCurve:
    """Build a named curve with N vertices, arc-length parametrized, length 1.

    Names: ``circle``, ``ellipse``, ``torus_knot`` (a, b), ``polygon`` (k),
    ``perturbed_circle`` (eps, seed).  All presets are normalized to unit
    polygon length so that energies and seminorms are comparable across the
    family.
    """
    if N < 3:
        raise BadPreset(f"N must be at least 3, got {N}")
    if dim not in _SUPPORTED_DIMS:
        raise BadPreset(f"dim must be 2 or 3, got {dim}")

    if name == "circle":
        r = 1.0 / (2.0 * N * math.sin(math.pi / N))  # unit polygon perimeter
        theta = 2.0 * math.pi * np.arange(N) / N
        P = r * np.column_stack([np.cos(theta), np.sin(theta)])
        return ClosedCurve(_pad_dim(P, dim), is_arclength=True)

    if name == "ellipse":
        aspect = float(kwargs.pop("aspect", 2.0))
        if kwargs:
            raise BadPreset(f"unknown ellipse arguments {sorted(kwargs)}")
        K = max(2048, 8 * N)
        theta = 2.0 * math.pi * np.arange(K) / K
        P = np.column_stack([aspect * np.cos(theta), np.sin(theta)])
        return _from_samples(P, N, dim)

    if name == "torus_knot":
        a = int(kwargs.pop("a", 2))
        b = int(kwargs.pop("b", 3))
        if kwargs:
            raise BadPreset(f"unknown torus_knot arguments {sorted(kwargs)}")
        if dim != 3:
            raise BadPreset("torus_knot requires dim=3")
        if a < 1 or b < 1 or math.gcd(a, b) != 1:
            raise BadPreset(f"torus_knot needs coprime positive (a, b), got ({a}, {b})")
        K = max(4096, 16 * N)
        phi = 2.0 * math.pi * np.arange(K) / K
        rad = 2.0 + np.cos(b * phi)
        P = np.column_stack([rad * np.cos(a * phi), rad * np.sin(a * phi), np.sin(b * phi)])
        curve = _from_samples(P, N, 3)
        if min_segment_distance(curve) <= 0.0:
            raise BadPreset(f"torus_knot({a},{b}) not embedded at N={N}")
        return curve

    if name == "polygon":
        k = int(kwargs.pop("k", 4))
        if kwargs:
            raise BadPreset(f"unknown polygon arguments {sorted(kwargs)}")
        if k < 3:
            raise BadPreset(f"polygon needs k >= 3, got {k}")
        theta = 2.0 * math.pi * (np.arange(k) + 0.5) / k
        corners = np.column_stack([np.cos(theta), np.sin(theta)])
        base = ClosedCurve(_pad_dim(corners, dim))
        return resample_arclength(base, N).scaled_to_length(1.0)

    if name == "perturbed_circle":
        eps = float(kwargs.pop("eps", 0.05))
        seed = int(kwargs.pop("seed", 0))
        modes = tuple(kwargs.pop("modes", (2, 3, 4, 5)))
        if kwargs:
            raise BadPreset(f"unknown perturbed_circle arguments {sorted(kwargs)}")
        if eps < 0:
            raise BadPreset("eps must be nonnegative")
        rng = np.random.default_rng(seed)
        K = max(2048, 8 * N)
        t = np.arange(K) / K
        radial = np.zeros(K)
        for m in modes:
            radial += rng.uniform(-1, 1) * np.cos(2 * math.pi * m * t)
            radial += rng.uniform(-1, 1) * np.sin(2 * math.pi * m * t)
        if eps > 0 and np.max(np.abs(radial)) > 0:
            radial *= eps / np.max(np.abs(radial))
        else:
            radial[:] = 0.0
        r = (1.0 + radial) / (2.0 * math.pi)
        theta = 2.0 * math.pi * t
        P = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        if dim == 3:
            vertical = np.zeros(K)
            for m in modes:
                vertical += rng.uniform(-1, 1) * np.cos(2 * math.pi * m * t)
                vertical += rng.uniform(-1, 1) * np.sin(2 * math.pi * m * t)
            if eps > 0 and np.max(np.abs(vertical)) > 0:
                vertical *= eps / (2.0 * math.pi) / np.max(np.abs(vertical))
            P = np.column_stack([P, vertical])
        curve = _from_samples(P, N, dim)
        if min_segment_distance(curve) <= 0.0:
            raise BadPreset(f"perturbed_circle(eps={eps}, seed={seed}) self-intersects")
        return curve

    raise BadPreset(f"unknown preset {name!r}; choose from {_PRESET_NAMES}")


_PRESET_SPEC_RE = re.compile(r"^([a-z_]+)(?:[:(]([^)]*)\)?)?$")


def parse_preset(spec: str, N: int, dim: int = 2) -> ClosedCurve:
    """Build a preset from a CLI spec like ``circle`` or ``torus_knot:2,3``."""
    m = _PRESET_SPEC_RE.match(spec.strip())
    if not m:
        raise BadPreset(f"cannot parse preset spec {spec!r}")
    name, argtext = m.group(1), m.group(2)
    args = []
    if argtext:
        for tok in argtext.split(","):
            tok = tok.strip()
            if tok:
                args.append(float(tok))
    kwargs = {}
    if name == "torus_knot" and args:
        kwargs = {"a": int(args[0]), "b": int(args[1]) if len(args) > 1 else 3}
    elif name == "polygon" and args:
        kwargs = {"k": int(args[0])}
    elif name == "perturbed_circle" and args:
        kwargs = {"eps": args[0]}
        if len(args) > 1:
            kwargs["seed"] = int(args[1])
    elif name == "ellipse" and args:
        kwargs = {"aspect": args[0]}
    elif args:
        raise BadPreset(f"preset {name!r} takes no arguments")
    return make_preset(name, N, dim, **kwargs)
