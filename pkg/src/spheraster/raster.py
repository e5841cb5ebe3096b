"""Rasterization against baked perspective maps.

Instead of projecting geometry to a flat screen, every primitive is
tested directly on the visual sphere: a polygon edge spans a great
circle, so one signed dot product per edge against the per-pixel map
direction decides sidedness, and the one-pixel linear step turns that
into analytically anti-aliased coverage. The same machinery covers
wireframe lines (a band around a great circle clipped to the segment)
and spherical particles (a cap test).

Modes: "pixel" uses the map's reciprocal-derivative plane for the
anti-aliasing ramp; "binary" is the hard step, used by oracles and
depth-test fallbacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import bstep, fwidth_grid, gpstep, pstep
from .projections import PerspectiveMap, orientation_matrix

_TINY = 1e-12

MODES = ("pixel", "binary")


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n < _TINY):
        raise ValueError("cannot normalize a near-zero vector")
    return v / n


@dataclass(frozen=True)
class CameraVertex:
    """A vertex already transformed into camera space."""

    position: tuple[float, float, float]
    uv: tuple[float, float] = (0.0, 0.0)
    normal: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class CameraTriangle:
    a: CameraVertex
    b: CameraVertex
    c: CameraVertex
    # Triangles cut out of larger polygons share interior edges; the
    # enclosing-circle row would notch the shared corners, so it is
    # disabled for them.
    miter: bool = True

    @property
    def positions(self) -> np.ndarray:
        return np.array(
            [self.a.position, self.b.position, self.c.position], dtype=np.float64
        )

    @property
    def uvs(self) -> np.ndarray:
        return np.array([self.a.uv, self.b.uv, self.c.uv], dtype=np.float64)

    def normals(self) -> np.ndarray:
        """Vertex normals, falling back to the eye-facing face normal."""
        if all(v.normal is not None for v in (self.a, self.b, self.c)):
            return np.array(
                [self.a.normal, self.b.normal, self.c.normal], dtype=np.float64
            )
        p = self.positions
        n = np.cross(p[0] - p[1], p[2] - p[1])
        ln = np.linalg.norm(n)
        if ln < _TINY:
            n, ln = np.array([0.0, 0.0, -1.0]), 1.0
        n = n / ln
        if np.dot(n, p.mean(axis=0)) > 0.0:
            n = -n
        return np.tile(n, (3, 1))


@dataclass(frozen=True)
class Particle:
    """A camera-space sphere, rendered as a filled disc with polar uv."""

    position: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        if not self.radius > 0.0:
            raise ValueError("particle radius must be positive")
        if self.radius >= np.linalg.norm(p):
            raise ValueError("particle must not contain the eye")


@dataclass(frozen=True)
class ParallaxProfile:
    """Piecewise-linear z offset as a function of off-axis angle."""

    samples: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        thetas = [t for t, _ in self.samples]
        if any(not np.isfinite(t) or not 0.0 <= t <= math.pi for t in thetas):
            raise ValueError("profile angles must be in [0, pi]")
        if thetas != sorted(thetas):
            raise ValueError("profile angles must be ascending")

    def offsets_for(self, theta: np.ndarray) -> np.ndarray:
        if not self.samples:
            return np.zeros_like(theta)
        xs = np.array([t for t, _ in self.samples])
        ys = np.array([o for _, o in self.samples])
        return np.interp(theta, xs, ys)


def apply_parallax(positions: np.ndarray, profile: ParallaxProfile) -> np.ndarray:
    """Shift camera-space z by the profile value at each vertex's angle."""
    p = np.asarray(positions, dtype=np.float64)
    r = np.linalg.norm(p, axis=-1)
    safe = np.where(r < _TINY, 1.0, r)
    theta = np.arccos(np.clip(p[..., 2] / safe, -1.0, 1.0))
    out = p.copy()
    out[..., 2] = p[..., 2] - profile.offsets_for(theta)
    return out


# ---------------------------------------------------------------------------
# edge setup
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallestCircle:
    """Smallest spherical cap enclosing three unit vertices.

    ``center`` is the in-sphere chordal center; its norm is the cosine
    of the cap's angular radius, so testing g . center_hat > |center|
    keeps exactly the cap interior.
    """

    center: np.ndarray
    degenerate: bool = False

    @property
    def threshold(self) -> float:
        return float(np.linalg.norm(self.center))


def smallest_circle(positions: np.ndarray) -> SmallestCircle:
    """Smallest enclosing cap of a triangle, from its unit vertices.

    Uses squared chord lengths: when a weight goes non-positive the cap
    is pinned on the opposite edge's midpoint, otherwise it is the
    weighted circumcenter. All three weights vanishing (collinear
    through the center) is degenerate.
    """
    p = _unit(np.asarray(positions, dtype=np.float64))
    a, b, c = p[0], p[1], p[2]
    aa = float(np.sum((b - c) ** 2))
    bb = float(np.sum((c - a) ** 2))
    cc = float(np.sum((a - b) ** 2))
    ws = aa * (bb + cc - aa)
    wt = bb * (cc + aa - bb)
    wp = cc * (aa + bb - cc)
    total = ws + wt + wp
    if abs(total) < _TINY:
        return SmallestCircle(np.zeros(3), degenerate=True)
    if ws <= 0.0:
        center = 0.5 * (b + c)
    elif wt <= 0.0:
        center = 0.5 * (c + a)
    elif wp <= 0.0:
        center = 0.5 * (a + b)
    else:
        center = (ws * a + wt * b + wp * c) / total
    if np.linalg.norm(center) < _TINY:
        return SmallestCircle(np.zeros(3), degenerate=True)
    return SmallestCircle(center)


@dataclass(frozen=True)
class EdgeMatrix:
    """Per-edge great-circle normals plus optional enclosing-cap row.

    rows[i] is the unit normal of the great circle through consecutive
    vertices i, i+1 (wrapping), oriented so the polygon interior gets a
    positive dot product. offsets[i] shifts the step threshold; it is 0
    for edges and cos(cap radius) for the cap row.
    """

    rows: np.ndarray
    offsets: np.ndarray

    @property
    def nrows(self) -> int:
        return self.rows.shape[0]


def polygon_edge_rows(positions: np.ndarray) -> np.ndarray:
    p = np.asarray(positions, dtype=np.float64)
    nxt = np.roll(p, -1, axis=0)
    rows = np.cross(p, nxt)
    return _unit(rows)


def edge_matrix(positions: np.ndarray, miter: bool = True) -> EdgeMatrix:
    """Edge rows for a polygon, plus the cap row when requested (triangles).

    Degenerate edges (repeated or antipodal vertices) are an error, as
    is a degenerate enclosing cap.
    """
    p = np.asarray(positions, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 3 or p.shape[1] != 3:
        raise ValueError("edge_matrix expects (n>=3, 3) positions")
    rows = polygon_edge_rows(p)
    offsets = np.zeros(rows.shape[0])
    if miter and p.shape[0] == 3:
        cap = smallest_circle(p)
        if cap.degenerate:
            raise ValueError("triangle is degenerate (collinear with the eye)")
        rows = np.vstack([rows, cap.center / cap.threshold])
        offsets = np.append(offsets, cap.threshold)
    return EdgeMatrix(rows=rows, offsets=offsets)


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

def _edge_field(pmap: PerspectiveMap, row: np.ndarray, offset: float) -> np.ndarray:
    # Plain elementwise arithmetic, upcast to float64: the result is a
    # reproducible left-to-right sum, independent of BLAS kernels.
    v = pmap.vectors
    g = (
        v[..., 0].astype(np.float64) * row[0]
        + v[..., 1].astype(np.float64) * row[1]
        + v[..., 2].astype(np.float64) * row[2]
    )
    if offset != 0.0:
        g = g - offset
    return g


def rasterize_edges(pmap: PerspectiveMap, em: EdgeMatrix, mode: str = "pixel",
                    fragment_delta: bool = False) -> np.ndarray:
    """Coverage = min over rows of the per-row step. Masked pixels get 0."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    cov = None
    delta = pmap.ensure_delta() if mode == "pixel" and not fragment_delta else None
    for i in range(em.nrows):
        g = _edge_field(pmap, em.rows[i], float(em.offsets[i]))
        if mode == "binary":
            step = bstep(g)
        elif fragment_delta:
            step = pstep(g, fwidth_grid(g))
        else:
            step = gpstep(g, delta)
        cov = step if cov is None else np.minimum(cov, step)
    if pmap.valid is not None:
        cov = np.where(pmap.valid, cov, 0.0)
    return cov


def rasterize_triangle(pmap: PerspectiveMap, tri: CameraTriangle, mode: str = "pixel",
                       fragment_delta: bool = False) -> np.ndarray:
    em = edge_matrix(tri.positions, miter=tri.miter)
    return rasterize_edges(pmap, em, mode, fragment_delta)


def rasterize_polygon(pmap: PerspectiveMap, positions: np.ndarray, mode: str = "pixel",
                      planarity_tol: float = 1e-6) -> np.ndarray:
    """Coverage of a convex planar polygon (one row per edge, no cap row)."""
    p = np.asarray(positions, dtype=np.float64)
    if p.shape[0] > 3:
        n = np.cross(p[1] - p[0], p[2] - p[0])
        ln = np.linalg.norm(n)
        if ln < _TINY:
            raise ValueError("polygon base triangle is degenerate")
        n = n / ln
        span = np.abs((p - p[0]) @ n)
        scale = max(np.linalg.norm(p - p.mean(axis=0), axis=1).max(), 1.0)
        if span.max() > planarity_tol * scale:
            raise ValueError("polygon vertices are not coplanar")
    return rasterize_edges(pmap, edge_matrix(p, miter=False), mode)


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def barycentric(g: np.ndarray, positions: np.ndarray):
    """Perspective-correct barycentrics for view directions (..., 3).

    Returns (b, r, ok): weights summing to 1, the hit distance along
    each direction, and a validity mask that is False where the ray
    grazes the triangle plane or hits it behind the eye.
    """
    g = np.asarray(g, dtype=np.float64)
    p = np.asarray(positions, dtype=np.float64)
    a, b3, c = p[0], p[1], p[2]
    n = np.cross(a - b3, c - b3)
    nn = float(np.dot(n, n))
    if nn < _TINY:
        raise ValueError("degenerate triangle")
    gn = g @ n
    ok = np.abs(gn) > _TINY
    r = np.where(ok, np.dot(a, n) / np.where(ok, gn, 1.0), 0.0)
    ok &= r > 0.0
    hit = r[..., None] * g
    bs = np.einsum("...i,i->...", np.cross(c - hit, b3 - hit), n) / nn
    bt = np.einsum("...i,i->...", np.cross(a - hit, c - hit), n) / nn
    bp = np.einsum("...i,i->...", np.cross(b3 - hit, a - hit), n) / nn
    bary = np.stack([bs, bt, bp], axis=-1)
    return np.where(ok[..., None], bary, 0.0), r, ok


def interpolate_fragment(bary: np.ndarray, r: np.ndarray, tri: CameraTriangle):
    """Fragment attributes from barycentrics: depth, uv, unit normal."""
    uv = bary @ tri.uvs
    n = bary @ tri.normals()
    ln = np.linalg.norm(n, axis=-1, keepdims=True)
    n = np.where(ln > _TINY, n / np.where(ln > _TINY, ln, 1.0), 0.0)
    return r, uv, n


# ---------------------------------------------------------------------------
# lines and particles
# ---------------------------------------------------------------------------

def rasterize_line(pmap: PerspectiveMap, a, b, mode: str = "pixel") -> np.ndarray:
    """Hairline coverage of the segment a-b (camera space).

    A one-pixel band around the great circle through the endpoints,
    clipped to the segment by a cap around the chord midpoint.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ah, bh = _unit(a), _unit(b)
    n = np.cross(ah, bh)
    ln = np.linalg.norm(n)
    if ln < _TINY:
        raise ValueError("line endpoints are collinear with the eye")
    n = n / ln
    gz = _edge_field(pmap, n, 0.0)

    mid = 0.5 * (ah + bh)
    mid_len = np.linalg.norm(mid)
    seg = _edge_field(pmap, mid / mid_len, 0.0) - mid_len

    delta = pmap.ensure_delta().astype(np.float64)
    if mode == "pixel":
        band = 1.0 - np.minimum(np.abs(gz) * delta, 1.0)
        clip = gpstep(seg, delta)
    else:
        band = np.where(1.0 - 2.0 * np.abs(gz) * delta > 0.0, 1.0, 0.0)
        clip = bstep(seg)
    cov = np.minimum(band, clip)
    if pmap.valid is not None:
        cov = np.where(pmap.valid, cov, 0.0)
    return cov


def line_depths(pmap: PerspectiveMap, a, b, cov: np.ndarray) -> np.ndarray:
    """Distance to the 3D chord for covered pixels (0 elsewhere)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = np.cross(a, b)
    g = pmap.vectors.astype(np.float64)
    # project each direction into the plane of the segment's circle
    nn = n / max(np.linalg.norm(n), _TINY)
    gp = g - (g @ nn)[..., None] * nn
    # intersection parameter of ray with the chord a + u (b - a)
    denom = np.cross(gp, b - a) @ nn
    numer = np.cross(a, gp) @ nn
    safe = np.where(np.abs(denom) < _TINY, 1.0, denom)
    u = np.clip(np.where(np.abs(denom) < _TINY, 0.5, numer / safe), 0.0, 1.0)
    q = a + u[..., None] * (b - a)
    return np.where(cov > 0.0, np.linalg.norm(q, axis=-1), 0.0)


def particle_rows(particle: Particle) -> np.ndarray:
    """Orthonormal frame rows for a particle: right, down, toward it."""
    p = np.asarray(particle.position, dtype=np.float64)
    x = np.array([p[2], 0.0, -p[0]])
    nx = np.linalg.norm(x)
    if nx < _TINY:
        x = np.array([1.0, 0.0, 0.0])  # particle on the y axis
    else:
        x = x / nx
    ph = p / np.linalg.norm(p)
    y = np.cross(x, ph)
    return np.stack([x, y, ph])


def rasterize_particle(pmap: PerspectiveMap, particle: Particle, mode: str = "pixel"):
    """Coverage and billboard uv of a spherical particle.

    Returns (coverage, uv, depth, normal): uv spans [0,1]^2 over the
    silhouette disc, depth is the distance to the sphere's near
    surface, normal the outward surface normal at that point.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    p = np.asarray(particle.position, dtype=np.float64)
    rows = particle_rows(particle)
    dist = np.linalg.norm(p)
    g1 = _edge_field(pmap, rows[0], 0.0)
    g2 = _edge_field(pmap, rows[1], 0.0)
    g3 = _edge_field(pmap, rows[2], 0.0)
    thr = math.sqrt(1.0 - particle.radius ** 2 / float(p @ p))

    if mode == "pixel":
        # The cap field flattens toward the particle center (its
        # gradient scales with the sine of the angular distance to the
        # rim axis), so the shared map delta would widen the rim ramp
        # by the reciprocal of that sine. Divide by the field's own
        # per-pixel footprint to keep the partial ring ~1 pixel wide
        # at every radius.
        field = g3 - thr
        cov = pstep(field, fwidth_grid(field))
    else:
        cov = bstep(g3 - thr)
    if pmap.valid is not None:
        cov = np.where(pmap.valid, cov, 0.0)

    uv = np.stack([g1, g2], axis=-1) * (dist / (2.0 * particle.radius)) + 0.5

    beam = dist * g3
    disc = beam * beam - (float(p @ p) - particle.radius ** 2)
    depth = beam - np.sqrt(np.maximum(disc, 0.0))
    inside = cov > 0.0
    depth = np.where(inside, depth, 0.0)
    g = pmap.vectors.astype(np.float64)
    normal = (depth[..., None] * g - p) / particle.radius
    ln = np.linalg.norm(normal, axis=-1, keepdims=True)
    normal = np.where(inside[..., None], normal / np.where(ln > _TINY, ln, 1.0), 0.0)
    return cov, uv, depth, normal


# ---------------------------------------------------------------------------
# compositing
# ---------------------------------------------------------------------------

@dataclass
class FragmentBuffers:
    """Front-to-back accumulation targets; normals renormalize on read."""

    m: np.ndarray
    depth: np.ndarray
    uv: np.ndarray
    normal: np.ndarray

    @classmethod
    def zeros(cls, height: int, width: int) -> "FragmentBuffers":
        return cls(
            m=np.zeros((height, width)),
            depth=np.zeros((height, width)),
            uv=np.zeros((height, width, 2)),
            normal=np.zeros((height, width, 3)),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.m.shape

    def normal_unit(self) -> np.ndarray:
        ln = np.linalg.norm(self.normal, axis=-1, keepdims=True)
        return np.where(ln > _TINY, self.normal / np.where(ln > _TINY, ln, 1.0), 0.0)


def composite_fragment(buffers: FragmentBuffers, m_f, depth_f=None, uv_f=None, normal_f=None):
    """Paint-once blend: a new fragment only fills still-uncovered mass.

    m_fc = min(m_front, 1 - m_behind) keeps total coverage at most 1
    and makes abutting strips sum seamlessly.
    """
    m_fc = np.minimum(m_f, 1.0 - buffers.m)
    m_fc = np.maximum(m_fc, 0.0)
    buffers.m += m_fc
    if depth_f is not None:
        buffers.depth += m_fc * depth_f
    if uv_f is not None:
        buffers.uv += m_fc[..., None] * uv_f
    if normal_f is not None:
        buffers.normal += m_fc[..., None] * normal_f
    return m_fc


# ---------------------------------------------------------------------------
# triangles wider than the step model tolerates
# ---------------------------------------------------------------------------

MAX_TRIANGLE_SPAN = math.pi / 2.0
_MAX_SUBDIVISION_DEPTH = 16


def _angular_span(positions: np.ndarray) -> float:
    u = _unit(positions)
    d01 = float(np.clip(u[0] @ u[1], -1.0, 1.0))
    d12 = float(np.clip(u[1] @ u[2], -1.0, 1.0))
    d20 = float(np.clip(u[2] @ u[0], -1.0, 1.0))
    return max(math.acos(d01), math.acos(d12), math.acos(d20))


def _mid(v0: CameraVertex, v1: CameraVertex) -> CameraVertex:
    p = tuple((np.asarray(v0.position) + np.asarray(v1.position)) / 2.0)
    uv = tuple((np.asarray(v0.uv) + np.asarray(v1.uv)) / 2.0)
    if v0.normal is not None and v1.normal is not None:
        nrm = tuple((np.asarray(v0.normal) + np.asarray(v1.normal)) / 2.0)
    else:
        nrm = None
    return CameraVertex(p, uv, nrm)


def subdivide_wide(tri: CameraTriangle, max_span: float = MAX_TRIANGLE_SPAN) -> list[CameraTriangle]:
    """Split a triangle until every piece spans at most max_span.

    Midpoint splits keep the pieces coplanar, so interpolation across
    them is exact. Sixteen levels without converging means the input
    runs through the eye; that is an error.
    """
    out: list[CameraTriangle] = []
    stack = [(tri, 0)]
    while stack:
        t, depth = stack.pop()
        if _angular_span(t.positions) <= max_span:
            out.append(t)
            continue
        if depth >= _MAX_SUBDIVISION_DEPTH:
            raise ValueError("triangle does not converge under subdivision"
                             " (degenerate or passes through the eye)")
        mab = _mid(t.a, t.b)
        mbc = _mid(t.b, t.c)
        mca = _mid(t.c, t.a)
        kids = [
            CameraTriangle(t.a, mab, mca, miter=t.miter),
            CameraTriangle(mab, t.b, mbc, miter=t.miter),
            CameraTriangle(mca, mbc, t.c, miter=t.miter),
            CameraTriangle(mab, mbc, mca, miter=t.miter),
        ]
        stack.extend((k, depth + 1) for k in reversed(kids))
    return out


def front_facing(positions: np.ndarray) -> float:
    """Signed orientation: positive when wound counter-clockwise as seen
    from the eye, negative for back faces, near zero when edge-on."""
    p = np.asarray(positions, dtype=np.float64)
    return float(np.dot(p[0], np.cross(p[1], p[2])))


# ---------------------------------------------------------------------------
# scene rendering
# ---------------------------------------------------------------------------

@dataclass
class RenderResult:
    buffers: FragmentBuffers
    wire: np.ndarray | None = None
    counts: dict = field(default_factory=dict)


def _composite_triangle(buffers: FragmentBuffers, pmap: PerspectiveMap,
                        tri: CameraTriangle) -> None:
    cov = rasterize_triangle(pmap, tri, "pixel")
    sel = cov > 0.0
    if not sel.any():
        return
    g = pmap.vectors[sel].astype(np.float64)
    bary, r, ok = barycentric(g, tri.positions)
    depth, uv, nrm = interpolate_fragment(bary, r, tri)

    m_f = np.zeros(buffers.shape)
    m_f[sel] = np.where(ok, cov[sel], 0.0)
    depth_f = np.zeros(buffers.shape)
    depth_f[sel] = depth
    uv_f = np.zeros(buffers.shape + (2,))
    uv_f[sel] = uv
    nrm_f = np.zeros(buffers.shape + (3,))
    nrm_f[sel] = nrm
    composite_fragment(buffers, m_f, depth_f, uv_f, nrm_f)


def _depth_test_triangle(buffers: FragmentBuffers, best: np.ndarray,
                         pmap: PerspectiveMap, tri: CameraTriangle) -> None:
    cov = rasterize_triangle(pmap, tri, "pixel")
    sel = cov > 0.0
    if not sel.any():
        return
    g = pmap.vectors[sel].astype(np.float64)
    bary, r, ok = barycentric(g, tri.positions)
    depth, uv, nrm = interpolate_fragment(bary, r, tri)

    win = ok & (depth < best[sel]) & (cov[sel] >= buffers.m[sel])
    idx = np.nonzero(sel)
    take = (idx[0][win], idx[1][win])
    best[take] = depth[win]
    buffers.m[take] = cov[sel][win]
    buffers.depth[take] = depth[win]
    buffers.uv[take] = uv[win]
    buffers.normal[take] = nrm[win]


def render_scene(scene, pmap: PerspectiveMap) -> RenderResult:
    """Render a parsed scene against a baked map.

    Pipeline: object and camera transforms, parallax profile, back-face
    cull, wide-triangle subdivision, front-to-back sort by centroid
    distance, anti-aliased coverage with paint-once compositing.
    Scenes flagged intersecting use a per-pixel depth test instead of
    the sort. Lines render into a separate wireframe plane.
    """
    h, w = pmap.shape
    buffers = FragmentBuffers.zeros(h, w)
    counts = {"backfacing": 0, "degenerate": 0, "pieces": 0}

    cam = orientation_matrix(*scene.camera)
    world_to_cam = cam.T
    parallax = scene.parallax or ParallaxProfile()

    def to_camera(points: np.ndarray) -> np.ndarray:
        return apply_parallax(points @ world_to_cam.T, parallax)

    pieces: list[tuple[float, str, object]] = []
    for tri in scene.camera_triangles(world_to_cam, parallax):
        orient = front_facing(tri.positions)
        if abs(orient) < _TINY:
            counts["degenerate"] += 1
            continue
        if orient < 0.0:
            counts["backfacing"] += 1
            continue
        for piece in subdivide_wide(tri):
            d = float(np.linalg.norm(piece.positions.mean(axis=0)))
            pieces.append((d, "triangle", piece))
    counts["pieces"] = len(pieces)

    for prt in scene.particles:
        p = to_camera(np.asarray(prt.position, dtype=np.float64)[None, :])[0]
        moved = Particle(tuple(p), prt.radius)
        pieces.append((float(np.linalg.norm(p)), "particle", moved))

    pieces.sort(key=lambda item: (item[0], item[1]))

    if scene.flags.get("intersecting"):
        best = np.full((h, w), np.inf)
        for _, kind, prim in pieces:
            if kind == "triangle":
                _depth_test_triangle(buffers, best, pmap, prim)
            else:
                cov, uv, depth, nrm = rasterize_particle(pmap, prim, "pixel")
                sel = (cov > 0.0) & (depth < best) & (cov >= buffers.m)
                best[sel] = depth[sel]
                buffers.m[sel] = cov[sel]
                buffers.depth[sel] = depth[sel]
                buffers.uv[sel] = uv[sel]
                buffers.normal[sel] = nrm[sel]
    else:
        for _, kind, prim in pieces:
            if kind == "triangle":
                _composite_triangle(buffers, pmap, prim)
            else:
                cov, uv, depth, nrm = rasterize_particle(pmap, prim, "pixel")
                composite_fragment(buffers, cov, depth, uv, nrm)

    wire = None
    if scene.lines:
        wire = np.zeros((h, w))
        segs = []
        for a, b in scene.lines:
            pts = to_camera(np.asarray([a, b], dtype=np.float64))
            mid = float(np.linalg.norm(pts.mean(axis=0)))
            segs.append((mid, pts))
        segs.sort(key=lambda item: item[0])
        for _, pts in segs:
            cov = rasterize_line(pmap, pts[0], pts[1], "pixel")
            wire += np.minimum(cov, 1.0 - wire)

    return RenderResult(buffers=buffers, wire=wire, counts=counts)
