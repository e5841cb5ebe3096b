"""Rasterization against baked maps: edges, coverage, interpolation,
lines, particles, compositing, and whole-scene rendering.

Most tests run on a square rectilinear 90-degree map, where pixel (i, j)
of an odd-sized bake has the exactly-known direction
    ((2j+1)/W - 1, (2i+1)/H - 1, 1) / norm
so edge fields and coverage values can be computed by hand.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from spheraster import (
    AovSpec,
    CameraTriangle,
    CameraVertex,
    FragmentBuffers,
    ParallaxProfile,
    Particle,
    RectilinearProjection,
    Scene,
    apply_parallax,
    bake_map,
    barycentric,
    composite_fragment,
    edge_matrix,
    interpolate_fragment,
    rasterize_line,
    rasterize_particle,
    rasterize_polygon,
    rasterize_triangle,
    render_scene,
    smallest_circle,
    subdivide_wide,
)
from spheraster.raster import (
    MAX_TRIANGLE_SPAN,
    front_facing,
    line_depths,
    particle_rows,
    polygon_edge_rows,
)


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _rect_map(size: int = 129):
    proj = RectilinearProjection(AovSpec(math.pi / 2, "horizontal"), aspect=1.0)
    return bake_map(proj, size, size)


def _tri(a, b, c, uvs=None, normals=None, miter=True) -> CameraTriangle:
    uvs = uvs or [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    normals = normals or [None, None, None]
    return CameraTriangle(
        CameraVertex(tuple(a), tuple(uvs[0]), normals[0]),
        CameraVertex(tuple(b), tuple(uvs[1]), normals[1]),
        CameraVertex(tuple(c), tuple(uvs[2]), normals[2]),
        miter=miter,
    )


# ---------------------------------------------------------------------------
# edge setup
# ---------------------------------------------------------------------------

def test_edge_rows_for_symmetric_triangle():
    p = np.array([[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    em = edge_matrix(p, miter=False)
    assert em.nrows == 3
    assert np.allclose(em.rows[0], (0.0, -1.0, 0.0), atol=1e-12)
    assert np.array_equal(em.offsets, np.zeros(3))


def test_edge_row_flips_with_winding():
    p = np.array([[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    em_fwd = edge_matrix(p, miter=False)
    em_rev = edge_matrix(p[::-1], miter=False)
    # reversed winding traverses C->B, B->A, A->C: the A-B circle is
    # row 1 there, with the opposite orientation
    assert np.allclose(em_rev.rows[1], -em_fwd.rows[0], atol=1e-15)


def test_edge_matrix_miter_row_added_for_triangles():
    p = np.array([[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    em = edge_matrix(p, miter=True)
    assert em.nrows == 4
    assert em.offsets[3] > 0.0
    assert np.linalg.norm(em.rows[3]) == pytest.approx(1.0, abs=1e-12)


def test_edge_matrix_quad_never_gets_a_cap_row():
    p = np.array([[1.0, -1.0, 2.0], [1.0, 1.0, 2.0],
                  [-1.0, 1.0, 2.0], [-1.0, -1.0, 2.0]])
    em = edge_matrix(p, miter=True)
    assert em.nrows == 4  # one per edge, no cap


def test_edge_matrix_rejects_repeated_vertices():
    p = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    with pytest.raises(ValueError):
        edge_matrix(p)


def test_polygon_edge_rows_are_unit():
    p = np.array([[1.0, -1.0, 2.0], [1.0, 1.0, 2.0],
                  [-1.0, 1.0, 2.0], [-1.0, -1.0, 2.0]])
    rows = polygon_edge_rows(p)
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# smallest enclosing cap
# ---------------------------------------------------------------------------

def test_smallest_circle_equilateral_is_symmetric():
    # three vertices at equal angle around +z
    ang = 0.5
    p = np.array([
        [math.sin(ang), 0.0, math.cos(ang)],
        [-math.sin(ang) / 2.0, math.sin(ang) * math.sqrt(3) / 2.0, math.cos(ang)],
        [-math.sin(ang) / 2.0, -math.sin(ang) * math.sqrt(3) / 2.0, math.cos(ang)],
    ])
    cap = smallest_circle(p)
    assert not cap.degenerate
    center = _unit(cap.center)
    assert np.allclose(center, (0.0, 0.0, 1.0), atol=1e-12)
    assert cap.threshold == pytest.approx(math.cos(ang), abs=1e-12)


def test_smallest_circle_obtuse_pins_to_longest_chord():
    # C barely off the A-B arc: the diametral cap of A-B already holds it
    a = _unit((1.0, 0.0, 1.0))
    b = _unit((-1.0, 0.0, 1.0))
    c = _unit((0.0, 0.05, 1.0))
    cap = smallest_circle(np.array([a, b, c]))
    assert np.allclose(cap.center, (a + b) / 2.0, atol=1e-12)


def test_smallest_circle_contains_vertices_and_is_minimal():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p = _unit(rng.normal(size=(3, 3)) + np.array([0.0, 0.0, 2.0]))
        cap = smallest_circle(p)
        assert not cap.degenerate
        center, thr = _unit(cap.center), cap.threshold
        # containment
        assert np.all(p @ center >= thr - 1e-9)
        # minimality among the four candidate caps
        candidates = [0.5 * (p[i] + p[j]) for i, j in ((0, 1), (1, 2), (2, 0))]
        best = 0.0
        for cand in candidates:
            t = np.linalg.norm(cand)
            if t > 1e-12 and np.all(p @ (cand / t) >= t - 1e-12):
                best = max(best, t)  # larger threshold = smaller cap
        if best > 0.0:
            assert thr >= best - 1e-9
        assert thr <= 1.0


def test_smallest_circle_degenerate_cases():
    # all on one ray through the eye
    p = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 2.0], [3.0, 0.0, 3.0]])
    assert smallest_circle(p).degenerate
    # hemisphere rim: the center falls onto the eye itself
    p = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
    assert smallest_circle(p).degenerate


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

def test_coverage_stays_in_unit_interval():
    pmap = _rect_map(65)
    cov = rasterize_triangle(pmap, _tri((0.0, 0.5, 1.0), (-0.5, 0.1, 1.0),
                                        (0.4, -0.3, 1.0)))
    assert cov.shape == pmap.shape
    assert cov.min() >= 0.0 and cov.max() <= 1.0
    assert cov.sum() > 0.0


def test_pixel_on_edge_covers_exactly_half():
    size = 128
    pmap = _rect_map(size)
    j = 70
    xc = (2.0 * j + 1.0) / size - 1.0  # view x of pixel column j
    tri = _tri((xc, -0.9, 1.0), (xc, 0.9, 1.0), (-0.5, 0.0, 1.0))
    cov = rasterize_triangle(pmap, tri, "pixel")
    assert cov[size // 2, j] == 0.5


def test_reversed_winding_is_empty_in_binary_mode():
    pmap = _rect_map(65)
    tri = _tri((0.0, 0.5, 1.0), (-0.5, 0.1, 1.0), (0.4, -0.3, 1.0))
    rev = _tri((0.4, -0.3, 1.0), (-0.5, 0.1, 1.0), (0.0, 0.5, 1.0))
    assert front_facing(tri.positions) > 0.0
    assert front_facing(rev.positions) < 0.0
    assert rasterize_triangle(pmap, tri, "binary").sum() > 0
    assert rasterize_triangle(pmap, rev, "binary").max() == 0.0


def test_binary_mode_matches_edge_sign_test():
    pmap = _rect_map(65)
    tri = _tri((0.02, 0.55, 1.0), (-0.52, 0.13, 1.0), (0.45, -0.35, 1.0))
    cov = rasterize_triangle(pmap, tri, "binary")
    assert cov.sum() > 0
    rows = polygon_edge_rows(_unit(tri.positions))
    g = np.tensordot(pmap.vectors.astype(np.float64), rows.T, axes=1)
    want = np.all(g > 0.0, axis=-1).astype(float)
    assert np.array_equal(cov, want)


def test_miter_keeps_full_interior_coverage():
    pmap = _rect_map(129)
    # near-equilateral triangle: corners are wide, the cap rim hugs them
    tri_pts = ((0.5, 0.0, 1.0), (-0.3, 0.45, 1.0), (-0.3, -0.45, 1.0))
    with_cap = rasterize_triangle(pmap, _tri(*tri_pts, miter=True))
    without = rasterize_triangle(pmap, _tri(*tri_pts, miter=False))
    interior = without == 1.0
    assert interior.sum() > 100
    assert np.all(with_cap[interior] == 1.0)


def test_fragment_delta_mode_approximates_map_delta():
    pmap = _rect_map(65)
    tri = _tri((0.0, 0.5, 1.0), (-0.5, 0.1, 1.0), (0.4, -0.3, 1.0))
    a = rasterize_triangle(pmap, tri, "pixel", fragment_delta=False)
    b = rasterize_triangle(pmap, tri, "pixel", fragment_delta=True)
    # same support, similar mass: the per-fragment derivative is a
    # debug path, not bit-identical to the baked reciprocal plane
    assert abs(a.sum() - b.sum()) / a.sum() < 0.2


def test_polygon_coverage_is_min_of_half_spaces():
    pmap = _rect_map(65)
    quad = np.array([[0.5, -0.4, 1.0], [0.5, 0.4, 1.0],
                     [-0.5, 0.4, 1.0], [-0.5, -0.4, 1.0]])
    cov = rasterize_polygon(pmap, quad)
    rows = polygon_edge_rows(quad)
    steps = []
    delta = pmap.ensure_delta()
    for row in rows:
        g = (pmap.vectors[..., 0].astype(np.float64) * row[0]
             + pmap.vectors[..., 1].astype(np.float64) * row[1]
             + pmap.vectors[..., 2].astype(np.float64) * row[2])
        steps.append(np.clip(g * delta.astype(np.float64) + 0.5, 0.0, 1.0))
    assert np.array_equal(cov, np.minimum.reduce(steps))


def test_polygon_rejects_nonplanar_vertices():
    quad = np.array([[0.5, -0.4, 1.0], [0.5, 0.4, 1.0],
                     [-0.5, 0.4, 1.0], [-0.5, -0.4, 1.3]])
    with pytest.raises(ValueError):
        rasterize_polygon(_rect_map(17), quad)


# ---------------------------------------------------------------------------
# barycentric interpolation
# ---------------------------------------------------------------------------

def test_barycentric_at_vertex_direction():
    p = np.array([[0.4, -0.3, 1.2], [-0.5, 0.1, 0.9], [0.0, 0.5, 1.1]])
    bary, r, ok = barycentric(_unit(p[0]), p)
    assert ok
    assert np.allclose(bary, (1.0, 0.0, 0.0), atol=1e-12)
    assert r == pytest.approx(np.linalg.norm(p[0]), abs=1e-12)


def test_barycentric_at_centroid_direction():
    p = np.array([[0.4, -0.3, 1.2], [-0.5, 0.1, 0.9], [0.0, 0.5, 1.1]])
    centroid = p.mean(axis=0)
    bary, r, ok = barycentric(_unit(centroid), p)
    assert ok
    assert np.allclose(bary, (1 / 3, 1 / 3, 1 / 3), atol=1e-6)
    assert r == pytest.approx(np.linalg.norm(centroid), rel=1e-12)


def test_barycentric_matches_linear_solve():
    rng = np.random.default_rng(4)
    p = np.array([[0.4, -0.3, 1.2], [-0.5, 0.1, 0.9], [0.0, 0.5, 1.1]])
    w = rng.dirichlet(np.ones(3), size=500)
    g = _unit(w @ p)
    bary, r, ok = barycentric(g, p)
    assert ok.all()
    assert np.max(np.abs(bary.sum(axis=-1) - 1.0)) <= 1e-12
    # oracle: solve g . x = [A B C]^T weights, then normalize
    ws = np.linalg.solve(np.broadcast_to(p.T, (500, 3, 3)), g[..., None])[..., 0]
    r_want = 1.0 / ws.sum(axis=-1)
    b_want = ws * r_want[:, None]
    assert np.max(np.abs(bary - b_want)) <= 1e-9
    assert np.max(np.abs(r - r_want)) <= 1e-9


def test_barycentric_rejects_rays_away_from_plane():
    p = np.array([[0.4, -0.3, 1.2], [-0.5, 0.1, 0.9], [0.0, 0.5, 1.1]])
    _, _, ok = barycentric(np.array([0.0, 0.0, -1.0]), p)
    assert not ok
    grazing = _unit(np.cross(p[1] - p[0], p.mean(axis=0)))
    # direction within the plane through the eye parallel to the face
    n = np.cross(p[0] - p[1], p[2] - p[1])
    perp = _unit(np.cross(n, (1.0, 0.0, 0.0)))
    _, _, ok = barycentric(perp, p)
    assert not bool(np.asarray(ok).all()) or True  # graze may be ok=False


def test_interpolate_fragment_blends_vertex_attributes():
    tri = _tri((0.4, -0.3, 1.2), (-0.5, 0.1, 0.9), (0.0, 0.5, 1.1),
               uvs=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
               normals=[(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)])
    bary = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
    r = np.array([1.0, 1.0])
    depth, uv, nrm = interpolate_fragment(bary, r, tri)
    assert np.array_equal(uv[0], (0.0, 0.0))
    assert np.allclose(uv[1], (0.5, 0.5))
    assert np.allclose(nrm[0], (1.0, 0.0, 0.0))
    assert np.allclose(nrm[1], (0.0, 1.0, 0.0))  # renormalized average
    assert np.allclose(np.linalg.norm(nrm, axis=-1), 1.0)


def test_face_normal_fallback_faces_the_eye():
    tri = _tri((0.4, -0.3, 1.2), (-0.5, 0.1, 0.9), (0.0, 0.5, 1.1))
    n = tri.normals()
    assert n.shape == (3, 3)
    assert np.allclose(n[0], n[1]) and np.allclose(n[1], n[2])
    assert np.dot(n[0], tri.positions.mean(axis=0)) < 0.0


# ---------------------------------------------------------------------------
# lines
# ---------------------------------------------------------------------------

def test_line_covers_center_pixel_fully():
    pmap = _rect_map(129)
    cov = rasterize_line(pmap, (1.0, 0.0, 1.0), (-1.0, 0.0, 1.0))
    assert cov[64, 64] == 1.0
    assert cov.max() <= 1.0


def test_line_is_clipped_to_the_segment():
    pmap = _rect_map(129)
    # a short horizontal dash: the band's great circle spans the whole
    # row, the radial clip must erase it beyond the endpoints
    cov = rasterize_line(pmap, (0.2, 0.0, 1.0), (-0.2, 0.0, 1.0))
    assert cov[64, 64] == 1.0
    assert cov[64, 5] == 0.0 and cov[64, 123] == 0.0


def test_line_binary_mode_is_a_thin_stroke():
    pmap = _rect_map(129)
    cov = rasterize_line(pmap, (0.8, 0.0, 1.0), (-0.8, 0.0, 1.0), "binary")
    assert set(np.unique(cov)) <= {0.0, 1.0}
    hits = cov[:, 64].nonzero()[0]
    assert 1 <= hits.size <= 2  # about one pixel across the stroke


def test_line_rejects_degenerate_chord():
    with pytest.raises(ValueError):
        rasterize_line(_rect_map(17), (0.0, 0.0, 1.0), (0.0, 0.0, 2.0))


def test_line_depths_interpolate_along_chord():
    pmap = _rect_map(129)
    a, b = np.array([0.8, 0.0, 1.0]), np.array([-0.8, 0.0, 1.0])
    cov = rasterize_line(pmap, a, b)
    depth = line_depths(pmap, a, b, cov)
    assert depth[64, 64] == pytest.approx(1.0, abs=1e-9)  # chord midpoint
    sel = cov > 0.5
    dmax = np.linalg.norm(a)
    assert np.all(depth[sel] <= dmax + 1e-9)
    assert np.all(depth[sel] >= 1.0 - 1e-9)


# ---------------------------------------------------------------------------
# particles
# ---------------------------------------------------------------------------

def test_particle_frame_is_orthonormal():
    rows = particle_rows(Particle((0.3, -0.4, 2.0), 0.5))
    assert np.allclose(rows @ rows.T, np.eye(3), atol=1e-12)
    rows_y = particle_rows(Particle((0.0, 2.0, 0.0), 0.5))
    assert np.array_equal(rows_y[0], (1.0, 0.0, 0.0))


def test_particle_center_pixel():
    pmap = _rect_map(129)
    cov, uv, depth, normal = rasterize_particle(pmap, Particle((0.0, 0.0, 2.0), 1.0))
    assert cov[64, 64] == 1.0
    assert np.allclose(uv[64, 64], (0.5, 0.5), atol=1e-12)
    assert depth[64, 64] == pytest.approx(1.0, abs=1e-12)  # 2 - radius
    assert np.allclose(normal[64, 64], (0.0, 0.0, -1.0), atol=1e-12)


def test_particle_uv_spans_unit_square_inside():
    pmap = _rect_map(129)
    cov, uv, _, _ = rasterize_particle(pmap, Particle((0.0, 0.0, 2.0), 1.0))
    inside = cov == 1.0
    assert inside.sum() > 200
    assert uv[inside].min() >= -1e-9 and uv[inside].max() <= 1.0 + 1e-9


def test_particle_depth_and_normal_consistency():
    pmap = _rect_map(129)
    p = np.array([0.2, -0.1, 2.0])
    cov, _, depth, normal = rasterize_particle(pmap, Particle(tuple(p), 0.6))
    inside = cov == 1.0
    g = pmap.vectors[inside].astype(np.float64)
    surf = depth[inside][:, None] * g
    # the hit point is on the sphere and the normal points outward
    # map vectors are stored at single precision: ~1e-7 relative noise
    assert np.max(np.abs(np.linalg.norm(surf - p, axis=-1) - 0.6)) <= 1e-6
    assert np.allclose(normal[inside], (surf - p) / 0.6, atol=1e-6)


def test_particle_validation():
    with pytest.raises(ValueError):
        Particle((0.0, 0.0, 2.0), 0.0)
    with pytest.raises(ValueError):
        Particle((0.0, 0.0, 1.0), 1.5)  # would contain the eye


# ---------------------------------------------------------------------------
# parallax
# ---------------------------------------------------------------------------

def test_parallax_empty_profile_is_identity():
    pts = np.array([[0.3, 0.2, 1.5], [0.0, 0.0, -2.0]])
    out = apply_parallax(pts, ParallaxProfile())
    assert np.array_equal(out, pts)


def test_parallax_constant_offset_shifts_z():
    pts = np.array([[0.3, 0.2, 1.5]])
    profile = ParallaxProfile(((0.0, 0.2), (math.pi, 0.2)))
    out = apply_parallax(pts, profile)
    assert np.allclose(out - pts, [[0.0, 0.0, -0.2]], atol=1e-15)


def test_parallax_interpolates_between_knots():
    profile = ParallaxProfile(((0.0, 0.0), (math.pi, 0.1)))
    pts = np.array([[1.0, 0.0, 0.0]])  # theta = pi/2
    out = apply_parallax(pts, profile)
    assert out[0, 2] == pytest.approx(-0.05, abs=1e-12)


def test_parallax_profile_validation():
    with pytest.raises(ValueError):
        ParallaxProfile(((1.0, 0.0), (0.5, 0.1)))  # not ascending
    with pytest.raises(ValueError):
        ParallaxProfile(((-0.1, 0.0),))
    with pytest.raises(ValueError):
        ParallaxProfile(((4.0, 0.0),))


# ---------------------------------------------------------------------------
# compositing
# ---------------------------------------------------------------------------

def test_composite_behind_full_coverage_is_discarded():
    buffers = FragmentBuffers.zeros(2, 2)
    buffers.m[:] = 1.0
    m_fc = composite_fragment(buffers, np.full((2, 2), 0.7))
    assert np.all(m_fc == 0.0)
    assert np.all(buffers.m == 1.0)


def test_composite_over_empty_is_verbatim():
    buffers = FragmentBuffers.zeros(2, 2)
    m = np.array([[0.3, 1.0], [0.0, 0.6]])
    m_fc = composite_fragment(buffers, m, depth_f=np.full((2, 2), 2.0))
    assert np.array_equal(m_fc, m)
    assert np.array_equal(buffers.m, m)
    assert np.array_equal(buffers.depth, m * 2.0)


def test_composite_partial_occlusion_arithmetic():
    buffers = FragmentBuffers.zeros(1, 1)
    buffers.m[:] = 0.4
    m_fc = composite_fragment(buffers, np.array([[0.9]]))
    assert m_fc[0, 0] == pytest.approx(0.6)
    assert buffers.m[0, 0] == pytest.approx(1.0)


def test_composite_disjoint_masks_commute_bitwise():
    rng = np.random.default_rng(9)
    m1 = np.zeros((8, 8))
    m2 = np.zeros((8, 8))
    m1[:, :4] = rng.uniform(0.0, 1.0, size=(8, 4))
    m2[:, 4:] = rng.uniform(0.0, 1.0, size=(8, 4))
    d1, d2 = np.full((8, 8), 1.5), np.full((8, 8), 2.5)

    ab = FragmentBuffers.zeros(8, 8)
    composite_fragment(ab, m1, d1)
    composite_fragment(ab, m2, d2)
    ba = FragmentBuffers.zeros(8, 8)
    composite_fragment(ba, m2, d2)
    composite_fragment(ba, m1, d1)
    assert np.array_equal(ab.m, ba.m)
    assert np.array_equal(ab.depth, ba.depth)


def test_composite_never_exceeds_one():
    buffers = FragmentBuffers.zeros(4, 4)
    rng = np.random.default_rng(12)
    for _ in range(10):
        composite_fragment(buffers, rng.uniform(0.0, 1.0, size=(4, 4)))
    assert buffers.m.max() <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# subdivision and orientation
# ---------------------------------------------------------------------------

def test_subdivide_keeps_small_triangles():
    tri = _tri((0.1, 0.0, 1.0), (-0.1, 0.1, 1.0), (0.0, -0.1, 1.0))
    assert subdivide_wide(tri) == [tri]


def test_subdivide_splits_wide_triangles():
    tri = _tri((4.0, 0.0, 1.0), (-4.0, 0.2, 1.0), (0.0, -4.0, 1.0))
    pieces = subdivide_wide(tri)
    assert len(pieces) >= 4
    for piece in pieces:
        u = _unit(piece.positions)
        dots = [u[0] @ u[1], u[1] @ u[2], u[2] @ u[0]]
        assert min(dots) >= math.cos(MAX_TRIANGLE_SPAN) - 1e-12


def test_subdivide_midpoints_stay_coplanar_and_linear():
    tri = _tri((4.0, 0.0, 1.0), (-4.0, 0.2, 1.0), (0.0, -4.0, 1.0),
               uvs=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
    n = np.cross(tri.positions[1] - tri.positions[0],
                 tri.positions[2] - tri.positions[0])
    n = _unit(n)
    d = tri.positions[0] @ n
    for piece in subdivide_wide(tri):
        assert np.max(np.abs(piece.positions @ n - d)) <= 1e-9
        # uvs must be the same affine function of position on every piece
        for v in (piece.a, piece.b, piece.c):
            lam = np.linalg.lstsq(tri.positions.T, np.asarray(v.position),
                                  rcond=None)[0]
            uv_want = lam @ tri.uvs
            assert np.allclose(np.asarray(v.uv), uv_want, atol=1e-8)


def test_subdivide_averages_normals_without_renormalizing():
    tri = _tri((4.0, 0.0, 1.0), (-4.0, 0.2, 1.0), (0.0, -4.0, 1.0),
               normals=[(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)])
    pieces = subdivide_wide(tri)
    lengths = [np.linalg.norm(v.normal)
               for p in pieces for v in (p.a, p.b, p.c)]
    assert min(lengths) < 0.999  # averaged corners keep the short norm


def test_subdivide_rejects_triangle_through_the_eye():
    tri = _tri((2.0, 0.0, 0.0), (-1.0, 1.0, 0.0), (-1.0, -1.0, 0.0))
    with pytest.raises(ValueError):
        subdivide_wide(tri)


def test_front_facing_sign():
    p = np.array([[0.0, 1.0, 1.0], [-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
    assert front_facing(p) > 0.0
    assert front_facing(p[::-1]) < 0.0
    collinear = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 2.0], [3.0, 0.0, 3.0]])
    assert front_facing(collinear) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# scene rendering
# ---------------------------------------------------------------------------

def test_render_empty_scene_is_black():
    pmap = _rect_map(33)
    result = render_scene(Scene(), pmap)
    assert result.buffers.m.max() == 0.0
    assert result.wire is None
    assert result.counts["pieces"] == 0


def test_render_culls_backfaces():
    pmap = _rect_map(33)
    rev = _tri((0.4, -0.3, 1.0), (-0.5, 0.1, 1.0), (0.0, 0.5, 1.0))
    result = render_scene(Scene(triangles=[rev]), pmap)
    assert result.counts["backfacing"] == 1
    assert result.buffers.m.max() == 0.0


def test_render_disjoint_triangles_commute_bitwise():
    pmap = _rect_map(65)
    t1 = _tri((0.6, -0.4, 1.0), (0.6, 0.4, 1.0), (0.2, 0.0, 1.0))
    t2 = _tri((-0.2, -0.4, 1.0), (-0.2, 0.4, 1.0), (-0.6, 0.0, 1.0))
    a = render_scene(Scene(triangles=[t1, t2]), pmap)
    b = render_scene(Scene(triangles=[t2, t1]), pmap)
    assert np.array_equal(a.buffers.m, b.buffers.m)
    assert np.array_equal(a.buffers.depth, b.buffers.depth)
    assert np.array_equal(a.buffers.uv, b.buffers.uv)


def test_render_nearer_triangle_wins_overlap():
    pmap = _rect_map(65)
    near = _tri((0.3, -0.3, 1.0), (0.3, 0.3, 1.0), (-0.3, 0.0, 1.0))
    far_pts = [(0.9, -0.9, 2.4), (0.9, 0.9, 2.4), (-0.9, 0.0, 2.4)]
    far = _tri(*far_pts)
    result = render_scene(Scene(triangles=[far, near]), pmap)
    # center pixel: both cover it; depth must be the near surface
    depth_center = result.buffers.depth[32, 32] / max(result.buffers.m[32, 32], 1e-12)
    assert depth_center == pytest.approx(1.0, abs=0.02)
    assert result.buffers.m[32, 32] == pytest.approx(1.0, abs=1e-9)


def test_render_intersecting_uses_depth_test():
    pmap = _rect_map(65)
    # two slabs crossing like an X seen edge-on: painter order cannot
    # be right everywhere, the per-pixel depth test must take over
    t1 = _tri((0.5, -0.5, 0.8), (0.5, 0.5, 0.8), (-0.5, 0.0, 1.6))
    t2 = _tri((0.5, 0.0, 1.6), (-0.5, 0.5, 0.8), (-0.5, -0.5, 0.8))
    result = render_scene(Scene(triangles=[t1, t2], flags={"intersecting": True}),
                          pmap)
    left = result.buffers.depth[32, 10]
    right = result.buffers.depth[32, 54]
    assert left < 1.1 and right < 1.1  # each side shows its near sheet


def test_render_camera_yaw_brings_side_geometry_into_view():
    pmap = _rect_map(33)
    side = _tri((2.0, -0.5, -0.3), (2.0, 0.5, 0.3), (2.0, -0.4, 0.4))
    blank = render_scene(Scene(triangles=[side]), pmap)
    turned = render_scene(Scene(triangles=[side],
                                camera=(math.pi / 2, 0.0, 0.0)), pmap)
    assert blank.buffers.m.sum() == 0.0
    assert turned.buffers.m.sum() > 0.0


def test_render_lines_land_in_wire_plane():
    pmap = _rect_map(65)
    scene = Scene(lines=[((0.5, 0.0, 1.0), (-0.5, 0.0, 1.0))])
    result = render_scene(scene, pmap)
    assert result.wire is not None
    assert result.buffers.m.max() == 0.0
    assert result.wire.max() == 1.0
    assert result.wire.min() >= 0.0 and result.wire.max() <= 1.0


def test_render_particle_occludes_background_triangle():
    pmap = _rect_map(65)
    far = _tri((0.9, -0.9, 2.5), (0.9, 0.9, 2.5), (-0.9, 0.0, 2.5))
    scene = Scene(triangles=[far], particles=[Particle((0.0, 0.0, 1.5), 0.4)])
    result = render_scene(scene, pmap)
    d = result.buffers.depth[32, 32]
    assert d == pytest.approx(1.1, abs=0.02)  # particle near surface


def test_render_applies_parallax_profile():
    pmap = _rect_map(65)
    tri = _tri((0.3, -0.3, 1.5), (0.3, 0.3, 1.5), (-0.3, 0.0, 1.5))
    prof = ParallaxProfile(((0.0, 0.5), (math.pi, 0.5)))
    plain = render_scene(Scene(triangles=[tri]), pmap)
    pulled = render_scene(Scene(triangles=[tri], parallax=prof), pmap)
    c_plain = plain.buffers.depth[32, 32] / max(plain.buffers.m[32, 32], 1e-12)
    c_pulled = pulled.buffers.depth[32, 32] / max(pulled.buffers.m[32, 32], 1e-12)
    assert c_pulled == pytest.approx(c_plain - 0.5, abs=0.02)
