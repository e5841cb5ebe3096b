"""Projection models and perspective-map baking.

A perspective map is an image-sized grid of unit direction vectors: for
every pixel, the direction in camera space whose light lands on that
pixel. Baking one reduces any projection - including ones with no
closed-form inverse - to a plain lookup, which is what the rasterizer
consumes.

The universal model covers the classic radial projections with one
shape parameter k (1 rectilinear, 0.5 stereographic, 0 equidistant,
-0.5 equisolid, -1 orthographic), a cylindricity parameter l blending
toward cylindrical projections, and an anamorphic correction s that is
active only when l < 1. The fixed generators cover panorama strips,
dome masters, equirectangular, cube map strips, flat screen arrays,
VR eye pairs, mirror-dome setups and projection mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AovSpec, fwidth_grid, global_delta_map, texture_to_view

# Hard parameter bounds for the universal model.
K_MIN, K_MAX = -1.0, 1.0
L_MIN, L_MAX = 0.0, 1.0
S_MIN, S_MAX = 0.8, 1.0
OMEGA_MIN = 1e-4
# The k > 0 branch has a tangent pole at omega = omega_max; stay a hair
# below it so tan() never blows up during baking.
OMEGA_MARGIN = 1e-4

# k values of the five named radial projections.
NAMED_PROJECTIONS = {
    "gnomonic": 1.0,
    "stereographic": 0.5,
    "equidistant": 0.0,
    "equisolid": -0.5,
    "orthographic": -1.0,
}

_TINY = 1e-12


def omega_max(k: float) -> float:
    """Largest representable angle of view for a given k.

    The bound is open for k > 0 (tangent pole) and closed otherwise.
    """
    return math.pi / max(0.5, abs(k))


@dataclass(frozen=True)
class PerspectiveParams:
    """Validated universal-model parameters (angles in radians)."""

    omega: float
    k: float = 0.0
    l: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        vals = (self.omega, self.k, self.l, self.s)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"parameters must be finite, got {vals}")
        if not K_MIN <= self.k <= K_MAX:
            raise ValueError(f"k must be in [{K_MIN}, {K_MAX}], got {self.k}")
        if not L_MIN <= self.l <= L_MAX:
            raise ValueError(f"l must be in [{L_MIN}, {L_MAX}], got {self.l}")
        if not S_MIN <= self.s <= S_MAX:
            raise ValueError(f"s must be in [{S_MIN}, {S_MAX}], got {self.s}")
        hi = omega_max(self.k) - (OMEGA_MARGIN if self.k > 0 else 0.0)
        if not 0.0 < self.omega <= hi + 1e-12:
            raise ValueError(
                f"omega must be in (0, {hi:.6f}] for k={self.k}, got {self.omega}"
            )

    @property
    def yscale(self) -> float:
        """Anamorphic vertical factor, identity when l = 1 or s = 1."""
        return self.l * (1.0 - self.s) + self.s


def clamp_params(omega: float, k: float = 0.0, l: float = 1.0, s: float = 1.0) -> PerspectiveParams:
    """Clamp raw values into the valid region and build params.

    Clamps k/l/s to their ranges first, then omega to (OMEGA_MIN,
    omega_max(k)], staying OMEGA_MARGIN below the k > 0 pole.
    Idempotent; NaN anywhere is an error.
    """
    vals = (omega, k, l, s)
    if not all(np.isfinite(v) for v in vals):
        raise ValueError(f"cannot clamp non-finite parameters {vals}")
    k = float(np.clip(k, K_MIN, K_MAX))
    l = float(np.clip(l, L_MIN, L_MAX))
    s = float(np.clip(s, S_MIN, S_MAX))
    hi = omega_max(k) - (OMEGA_MARGIN if k > 0 else 0.0)
    omega = float(np.clip(omega, OMEGA_MIN, hi))
    return PerspectiveParams(omega=omega, k=k, l=l, s=s)


# ---------------------------------------------------------------------------
# universal model
# ---------------------------------------------------------------------------

def universal_2d_to_3d(xy, params: PerspectiveParams):
    """View coordinates (..., 2) to unit directions (..., 3) plus validity.

    The radial profile is arctan-shaped for k > 0, linear for k = 0 and
    arcsin-shaped for k < 0; the k < 0 branch is undefined outside its
    projectable disc, which is the only invalid case. The frame center
    maps exactly to (0, 0, 1).
    """
    xy = np.asarray(xy, dtype=np.float64)
    x, y = xy[..., 0], xy[..., 1]
    k, om, l = params.k, params.omega, params.l
    m = params.yscale

    r = np.sqrt(x * x + l * y * y)
    valid = np.ones(np.shape(r), dtype=bool)
    if abs(k) < _TINY:  # the tan/sin branches underflow near k = 0
        theta = (om / 2.0) * r
        slope0 = om / 2.0
    elif k > 0:
        scale = math.tan(k * om / 2.0)
        theta = np.arctan(scale * r) / k
        slope0 = scale / k
    else:
        scale = math.sin(k * om / 2.0)
        arg = scale * r
        valid &= np.abs(arg) <= 1.0
        theta = np.arcsin(np.clip(arg, -1.0, 1.0)) / k
        slope0 = scale / k

    # sin(theta)/r has the finite limit slope0 at the frame center.
    safe_r = np.where(r < 1e-8, 1.0, r)
    sinc = np.where(r < 1e-8, slope0, np.sin(theta) / safe_r)
    v = np.stack([x * sinc, y * sinc / m, np.cos(theta)], axis=-1)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    v = np.where(valid[..., None] & (n > _TINY), v / np.where(n > _TINY, n, 1.0), 0.0)
    return v, valid


def universal_3d_to_2d(v, params: PerspectiveParams):
    """Unit directions (..., 3) to view coordinates (..., 2) plus validity.

    Exact inverse of :func:`universal_2d_to_3d`: the lateral norm is
    weighted by l and the squared anamorphic factor so the round trip
    closes also for s < 1. Invalid cases: the k > 0 tangent pole
    (k*theta reaching pi/2) and, for l < 1, directions antipodal to the
    axis where the azimuth is undefined.
    """
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    k, om, l = params.k, params.omega, params.l
    m = params.yscale

    lat2 = x * x + l * m * m * y * y
    w = np.sqrt(lat2 + z * z)
    valid = w > _TINY
    # atan2 keeps full precision at both ends of the arc, where the
    # arccos of a near-1 cosine would lose half the mantissa
    theta = np.arctan2(np.sqrt(lat2), z)

    if abs(k) < _TINY:
        rr = theta / (om / 2.0)
    elif k > 0:
        valid &= k * theta < math.pi / 2.0
        kt = np.where(valid, k * theta, 0.0)
        rr = np.tan(kt) / math.tan(k * om / 2.0)
    else:
        rr = np.sin(k * theta) / math.sin(k * om / 2.0)

    d = np.sqrt(lat2)
    small = d < 1e-8
    axial = small & (z > 0.0)
    anti = small & (z <= 0.0)  # antipodal: the azimuth is undefined
    if l < 1.0:
        valid &= ~anti

    # R(theta)/d has the finite limit 1/(slope0 * v_z) at the axis,
    # where slope0 is d(theta)/dR of the profile at the center; with
    # l = 0 every direction in the yz plane lands here, not only the
    # axis itself, so the limit must keep the y information.
    if abs(k) < _TINY:
        slope0 = om / 2.0
    else:
        slope0 = (math.tan(k * om / 2.0) if k > 0 else math.sin(k * om / 2.0)) / k
    safe_d = np.where(small, 1.0, d)
    safe_z = np.where(np.abs(z) < _TINY, 1.0, z)
    ratio = np.where(axial, 1.0 / (slope0 * safe_z), rr / safe_d)
    fx = x * ratio
    fy = y * ratio * m
    # antipodal with l = 1: azimuth is arbitrary, use the +x convention
    fx = np.where(anti & valid, rr, fx)
    fy = np.where(anti & valid, 0.0, fy)
    out = np.stack([np.where(valid, fx, 0.0), np.where(valid, fy, 0.0)], axis=-1)
    return out, valid


def remap_2d_to_2d(xy, params_in: PerspectiveParams, params_out: PerspectiveParams):
    """Reproject view coordinates between two universal parameter sets."""
    v, ok1 = universal_2d_to_3d(xy, params_in)
    out, ok2 = universal_3d_to_2d(v, params_out)
    return out, ok1 & ok2


def radial_curve(theta, omega: float, k: float):
    """Normalized image radius R(theta) of the radial profile for one k.

    theta is the angle off the view axis; R is 1 at theta = omega / 2.
    Collapses to the classical closed forms at the five named k stops.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if abs(k) < _TINY:
        return theta / (omega / 2.0)
    if k > 0:
        return np.tan(k * theta) / math.tan(k * omega / 2.0)
    return np.sin(k * theta) / math.sin(k * omega / 2.0)


@dataclass(frozen=True)
class LensDistortionCoeffs:
    """Polynomial lens distortion: radial terms, tangential, thin prism."""

    radial: tuple[float, ...] = ()
    tangential: tuple[float, float] = (0.0, 0.0)
    prism: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        vals = (*self.radial, *self.tangential, *self.prism)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("distortion coefficients must be finite")

    def is_identity(self) -> bool:
        return not any(self.radial) and not any(self.tangential) and not any(self.prism)


def brown_conrady(xy, coeffs: LensDistortionCoeffs) -> np.ndarray:
    """Apply polynomial distortion to view coordinates (..., 2)."""
    xy = np.asarray(xy, dtype=np.float64)
    x, y = xy[..., 0], xy[..., 1]
    r2 = x * x + y * y
    radial = np.zeros_like(r2)
    r_pow = r2
    for kn in coeffs.radial:
        radial = radial + kn * r_pow
        r_pow = r_pow * r2
    p1, p2 = coeffs.tangential
    q1, q2 = coeffs.prism
    tang = p1 * x + p2 * y
    out_x = x + radial * x + tang * x + q1 * r2
    out_y = y + radial * y + tang * y + q2 * r2
    return np.stack([out_x, out_y], axis=-1)


# ---------------------------------------------------------------------------
# rotation helpers (column convention: vec' = R @ vec)
# ---------------------------------------------------------------------------

def rotation_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def orientation_matrix(yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> np.ndarray:
    """Camera-to-world rotation: yaw about y, then pitch about x, then roll about z."""
    return rotation_y(yaw) @ rotation_x(pitch) @ rotation_z(roll)


def _apply_rot(rot: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return vecs @ np.asarray(rot, dtype=np.float64).T


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    """Result of evaluating a generator on a texture-coordinate grid."""

    vectors: np.ndarray
    valid: np.ndarray | None = None
    dim: np.ndarray | None = None


class Projection:
    """Base class: a bakeable projection. Subclasses define sample()."""

    kind = "?"
    aspect: float | None = None

    def frame_aspect(self, width: int, height: int) -> float:
        return self.aspect if self.aspect is not None else width / height

    def aov_meta(self) -> AovSpec:
        return AovSpec(2.0 * math.pi, "horizontal")

    def sample(self, st: np.ndarray, aspect: float) -> Sample:
        raise NotImplementedError

    def to_params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniversalProjection(Projection):
    """The four-parameter radial/cylindrical model."""

    params: PerspectiveParams = field(default_factory=lambda: PerspectiveParams(math.pi / 2))
    mode: str = "diagonal"
    aspect: float | None = None
    lens: LensDistortionCoeffs | None = None

    kind = "universal"

    def aov_meta(self) -> AovSpec:
        return AovSpec(self.params.omega, self.mode)

    def sample(self, st, aspect):
        view = texture_to_view(st, aspect, self.mode)
        if self.lens is not None and not self.lens.is_identity():
            view = brown_conrady(view, self.lens)
        v, valid = universal_2d_to_3d(view, self.params)
        return Sample(v, valid if not valid.all() else None)

    def to_params(self):
        p = {
            "omega_deg": math.degrees(self.params.omega),
            "k": self.params.k,
            "l": self.params.l,
            "s": self.params.s,
            "aov_mode": self.mode,
        }
        if self.lens is not None and not self.lens.is_identity():
            p["lens"] = {
                "radial": list(self.lens.radial),
                "tangential": list(self.lens.tangential),
                "prism": list(self.lens.prism),
            }
        return p


@dataclass(frozen=True)
class RectilinearProjection(Projection):
    """Flat pinhole projection; the angle of view must stay below pi."""

    aov: AovSpec = field(default_factory=lambda: AovSpec(math.pi / 2, "horizontal"))
    aspect: float | None = None

    kind = "rectilinear"

    def __post_init__(self):
        if self.aov.angle >= math.pi:
            raise ValueError("rectilinear angle of view must be below pi")

    def aov_meta(self) -> AovSpec:
        return self.aov

    def sample(self, st, aspect):
        view = texture_to_view(st, aspect, self.aov.mode)
        z = 1.0 / math.tan(self.aov.angle / 2.0)
        zs = np.full(view.shape[:-1], z)
        return Sample(np.concatenate([view, zs[..., None]], axis=-1))

    def to_params(self):
        return {"aov_deg": math.degrees(self.aov.angle), "aov_mode": self.aov.mode}


@dataclass(frozen=True)
class PanoramaProjection(Projection):
    """Cylindrical strip: x is an angle, y is rectilinear height.

    ``height`` is the vertical half-span pair measured in the same
    angle-equivalent unit as the horizontal sweep, so the natural frame
    aspect is omega_h / height.
    """

    omega_h: float = 2.0 * math.pi
    height: float = math.pi / 2.0

    kind = "panorama"

    def __post_init__(self):
        if not 0.0 < self.omega_h <= 2.0 * math.pi:
            raise ValueError("panorama sweep must be in (0, 2*pi]")
        if not self.height > 0.0:
            raise ValueError("panorama height must be positive")

    @property
    def aspect(self):  # type: ignore[override]
        return self.omega_h / self.height

    def aov_meta(self) -> AovSpec:
        return AovSpec(self.omega_h, "horizontal")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        fx = self.omega_h * (st[..., 0] - 0.5)
        fy = self.height * (st[..., 1] - 0.5)
        return Sample(np.stack([np.sin(fx), fy, np.cos(fx)], axis=-1))

    def to_params(self):
        return {"omega_h_deg": math.degrees(self.omega_h), "height": self.height}


@dataclass(frozen=True)
class DomeProjection(Projection):
    """Dome master: radial fisheye around the vertical axis.

    ``omega`` widens the radial sweep past the half-sphere (taken
    verbatim as an additive compression angle), ``offset`` shifts the
    forward component before normalization, ``tilt`` rotates the whole
    dome about the x axis. Pixels outside the unit disc are masked.
    """

    omega: float = 0.0
    tilt: float = 0.0
    offset: float = 0.0
    aspect = 1.0

    kind = "dome"

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.omega, self.tilt, self.offset)):
            raise ValueError("dome parameters must be finite")

    def aov_meta(self) -> AovSpec:
        return AovSpec(min(2.0 * (self.omega + math.pi / 2.0), 2.0 * math.pi), "diagonal")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        fx = 2.0 * st[..., 0] - 1.0
        fy = 1.0 - 2.0 * st[..., 1]
        r = np.sqrt(fx * fx + fy * fy)
        theta = r * (self.omega + math.pi / 2.0)
        safe_r = np.where(r < 1e-12, 1.0, r)
        sinc = np.where(r < 1e-12, self.omega + math.pi / 2.0, np.sin(theta) / safe_r)
        v = np.stack([fx * sinc, np.cos(theta), fy * sinc + self.offset], axis=-1)
        if self.tilt != 0.0:
            v = _apply_rot(rotation_x(self.tilt), v)
        # screen-space ramp at the disc rim; collapses to a hard edge
        # when the grid is too small to estimate a derivative
        edge = 1.0 - r
        if edge.ndim == 2 and edge.shape[0] >= 2 and edge.shape[1] >= 2:
            mask = np.clip(edge / fwidth_grid(edge), 0.0, 1.0)
        else:
            mask = (edge > 0.0).astype(np.float64)
        return Sample(v, valid=r <= 1.0, dim=mask)

    def to_params(self):
        return {
            "omega_deg": math.degrees(self.omega),
            "tilt_deg": math.degrees(self.tilt),
            "offset": self.offset,
        }


@dataclass(frozen=True)
class EquirectProjection(Projection):
    """Full equirectangular sphere: x sweeps 360 degrees, y the poles."""

    aspect = 2.0
    kind = "equirect"

    def aov_meta(self) -> AovSpec:
        return AovSpec(2.0 * math.pi, "horizontal")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        fx = math.pi * (2.0 * st[..., 0] - 1.0)
        fy = math.pi * st[..., 1]
        sy = np.sin(fy)
        return Sample(np.stack([np.sin(fx) * sy, -np.cos(fy), np.cos(fx) * sy], axis=-1))

    def to_params(self):
        return {}


# Cube faces as row matrices applied to the local vector (lx, ly, 1/2).
# Written so that every face is a pure rotation (determinant +1) and all
# twelve cube edges agree between the two faces that share them. The
# forward (+z) face is the identity, matching the rectilinear frame.
CUBE_FACES = np.array(
    [
        [[0, 0, 1], [-1, 0, 0], [0, -1, 0]],   # +x
        [[0, 0, -1], [1, 0, 0], [0, -1, 0]],   # -x
        [[1, 0, 0], [0, -1, 0], [0, 0, -1]],   # -z
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],     # +z
        [[1, 0, 0], [0, 0, 1], [0, -1, 0]],    # +y
        [[-1, 0, 0], [0, 0, -1], [0, -1, 0]],  # -y
    ],
    dtype=np.float64,
)


def cubemap_face_vector(face: int, local) -> np.ndarray:
    """Direction for local face coordinates in [-1/2, 1/2]^2."""
    local = np.asarray(local, dtype=np.float64)
    l3 = np.stack([local[..., 0], local[..., 1], np.full(local.shape[:-1], 0.5)], axis=-1)
    return l3 @ CUBE_FACES[face].T


@dataclass(frozen=True)
class CubemapProjection(Projection):
    """Six cube faces in one horizontal strip."""

    aspect = 6.0
    kind = "cubemap"

    def aov_meta(self) -> AovSpec:
        return AovSpec(2.0 * math.pi, "horizontal")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        fs = 6.0 * st[..., 0]
        face = np.clip(np.floor(fs).astype(np.int64), 0, 5)
        lx = fs - face - 0.5
        ly = st[..., 1] - 0.5
        l3 = np.stack([lx, ly, np.full(lx.shape, 0.5)], axis=-1)
        mats = CUBE_FACES[face]
        v = np.einsum("...ij,...j->...i", mats, l3)
        return Sample(v)

    def to_params(self):
        return {}


@dataclass(frozen=True)
class ScreenArrayProjection(Projection):
    """A horizontal fan of n flat screens, each omega_h wide."""

    count: int = 3
    omega_h: float = math.pi / 3.0
    screen_aspect: float = 1.0

    kind = "screen_array"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("screen count must be at least 1")
        if not 0.0 < self.omega_h < math.pi:
            raise ValueError("per-screen angle of view must be in (0, pi)")
        if not self.screen_aspect > 0.0:
            raise ValueError("screen aspect must be positive")

    @property
    def aspect(self):  # type: ignore[override]
        return self.count * self.screen_aspect

    def aov_meta(self) -> AovSpec:
        return AovSpec(min(self.count * self.omega_h, 2.0 * math.pi), "horizontal")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        fs = self.count * st[..., 0]
        idx = np.clip(np.floor(fs).astype(np.int64), 0, self.count - 1)
        i = idx + (1.0 - self.count) / 2.0
        lx = 2.0 * (fs - idx) - 1.0
        ly = (2.0 * st[..., 1] - 1.0) / self.screen_aspect
        z = 1.0 / math.tan(self.omega_h / 2.0)
        local = np.stack([lx, ly, np.full(lx.shape, z)], axis=-1)
        ang = i * self.omega_h
        c, s = np.cos(ang), np.sin(ang)
        x, yy, zz = local[..., 0], local[..., 1], local[..., 2]
        v = np.stack([c * x + s * zz, yy, -s * x + c * zz], axis=-1)
        return Sample(v)

    def to_params(self):
        return {
            "count": self.count,
            "omega_h_deg": math.degrees(self.omega_h),
            "screen_aspect": self.screen_aspect,
        }


@dataclass(frozen=True)
class VrProjection(Projection):
    """Side-by-side stereo pair with polynomial eyepiece distortion."""

    omega_v: float = math.pi / 2.0
    ipd_offset: float = 0.25
    eye_aspect: float = 1.0
    coeffs: tuple[float, ...] = ()

    kind = "vr"

    def __post_init__(self):
        if not 0.0 < self.omega_v < math.pi:
            raise ValueError("vertical angle of view must be in (0, pi)")
        if not 0.0 <= self.ipd_offset <= 0.5:
            raise ValueError("ipd offset must be in [0, 1/2]")
        if abs(1.0 + sum(self.coeffs)) < _TINY:
            raise ValueError("distortion normalization 1 + sum(coeffs) must not vanish")

    @property
    def aspect(self):  # type: ignore[override]
        return 2.0 * self.eye_aspect

    def aov_meta(self) -> AovSpec:
        return AovSpec(self.omega_v, "vertical")

    def sample(self, st, aspect):
        st = np.asarray(st, dtype=np.float64)
        eye = np.where(st[..., 0] < 0.5, -1.0, 1.0)
        inner = 2.0 * ((2.0 * st[..., 0]) % 1.0) - 1.0
        fx = (inner + eye * (1.0 - 2.0 * self.ipd_offset)) * (0.5 * self.eye_aspect)
        fy = 2.0 * st[..., 1] - 1.0
        if self.coeffs:
            rho2 = fx * fx + fy * fy
            poly = np.ones_like(rho2)
            p = rho2.copy()
            for c in self.coeffs:
                poly = poly + c * p
                p = p * rho2
            gain = poly / (1.0 + sum(self.coeffs))
            fx, fy = fx * gain, fy * gain
        z = 1.0 / math.tan(self.omega_v / 2.0)
        return Sample(np.stack([fx, fy, np.full(fx.shape, z)], axis=-1))

    def to_params(self):
        return {
            "omega_v_deg": math.degrees(self.omega_v),
            "ipd_offset": self.ipd_offset,
            "eye_aspect": self.eye_aspect,
            "coeffs": list(self.coeffs),
        }


@dataclass(frozen=True)
class MirrorDomeProjection(Projection):
    """Projector bouncing off a unit spherical mirror into a dome.

    ``normals`` is a per-pixel pass of unit mirror normals (which equal
    the mirror surface points for the unit sphere); zero vectors mark
    unused pixels. The dim plane compensates the varying light-path
    length and is 1 at the longest path in frame.
    """

    normals: np.ndarray = None  # (H, W, 3)
    projector: tuple[float, float, float] = (0.0, 0.0, 3.0)
    dome_center: tuple[float, float, float] = (0.0, 0.0, 2.0)
    dome_radius: float = 2.0
    normals_path: str | None = None

    kind = "mirror_dome"

    def __post_init__(self):
        if self.normals is None:
            raise ValueError("mirror dome needs a normal pass")
        if not self.dome_radius > 0.0:
            raise ValueError("dome radius must be positive")

    def frame_aspect(self, width, height):
        return width / height

    def aov_meta(self) -> AovSpec:
        return AovSpec(2.0 * math.pi, "horizontal")

    def sample(self, st, aspect):
        n = np.asarray(self.normals, dtype=np.float64)
        p = np.asarray(self.projector, dtype=np.float64)
        o = np.asarray(self.dome_center, dtype=np.float64)
        d = self.dome_radius

        nn = np.linalg.norm(n, axis=-1)
        valid = nn > 0.5
        nhat = np.where(valid[..., None], n / np.where(valid, nn, 1.0)[..., None], 0.0)

        inc = nhat - p
        refl = inc - 2.0 * np.sum(inc * nhat, axis=-1, keepdims=True) * nhat
        rn = np.linalg.norm(refl, axis=-1, keepdims=True)
        refl = refl / np.where(rn > _TINY, rn, 1.0)

        r = np.sum(refl * (o - nhat), axis=-1)
        closest = r[..., None] * refl + nhat - o
        disc = d * d - np.sum(closest * closest, axis=-1)
        valid &= disc >= 0.0
        rp = r + np.sqrt(np.maximum(disc, 0.0))
        v = (rp[..., None] * refl + nhat - o) / d

        path = rp + np.linalg.norm(inc, axis=-1)
        peak = np.max(path[valid]) if valid.any() else 1.0
        dim = np.where(valid, (path / peak) ** 2, 0.0)
        return Sample(np.where(valid[..., None], v, 0.0), valid=valid, dim=dim)

    def to_params(self):
        return {
            "projector": list(self.projector),
            "dome_center": list(self.dome_center),
            "dome_radius": self.dome_radius,
            "normals_path": self.normals_path,
        }


@dataclass(frozen=True)
class ProjectionMappingProjection(Projection):
    """Bake an observer's view of a known surface lit by a projector.

    ``positions`` is a per-pixel pass of surface points as seen from
    the projector; the baked vectors are the observer-space directions
    of those points, and dim compensates the projector throw distance.
    """

    positions: np.ndarray = None  # (H, W, 3)
    observer: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)  # yaw, pitch, roll
    projector: tuple[float, float, float] = (0.0, 0.0, 0.0)
    valid_mask: np.ndarray | None = None
    positions_path: str | None = None

    kind = "projection_mapping"

    def __post_init__(self):
        if self.positions is None:
            raise ValueError("projection mapping needs a surface position pass")

    def frame_aspect(self, width, height):
        return width / height

    def aov_meta(self) -> AovSpec:
        return AovSpec(2.0 * math.pi, "horizontal")

    def sample(self, st, aspect):
        spts = np.asarray(self.positions, dtype=np.float64)
        obs = np.asarray(self.observer, dtype=np.float64)
        prj = np.asarray(self.projector, dtype=np.float64)
        world_to_obs = orientation_matrix(*self.orientation).T

        rel = spts - obs
        dist = np.linalg.norm(rel, axis=-1)
        valid = dist > _TINY
        if self.valid_mask is not None:
            valid &= np.asarray(self.valid_mask, dtype=bool)
        v = _apply_rot(world_to_obs, rel / np.where(valid, dist, 1.0)[..., None])

        throw = np.linalg.norm(spts - prj, axis=-1)
        peak = np.max(throw[valid]) if valid.any() else 1.0
        dim = np.where(valid, (throw / peak) ** 2, 0.0)
        return Sample(np.where(valid[..., None], v, 0.0), valid=valid, dim=dim)

    def to_params(self):
        return {
            "observer": list(self.observer),
            "orientation_deg": [math.degrees(a) for a in self.orientation],
            "projector": list(self.projector),
            "positions_path": self.positions_path,
        }


# ---------------------------------------------------------------------------
# baking
# ---------------------------------------------------------------------------

@dataclass
class PerspectiveMap:
    """Baked per-pixel unit directions plus the planes consumers need.

    vectors: (H, W, 3) float32, zero where invalid.
    delta:   (H, W) float32 reciprocal screen-space derivative.
    valid:   (H, W) bool, or None when every pixel is valid.
    dim:     (H, W) float32 brightness compensation, or None.
    """

    width: int
    height: int
    vectors: np.ndarray
    delta: np.ndarray | None
    aov: AovSpec
    aspect: float
    generator: str = "unknown"
    params: dict = field(default_factory=dict)
    valid: np.ndarray | None = None
    dim: np.ndarray | None = None

    def __post_init__(self):
        if self.vectors.shape != (self.height, self.width, 3):
            raise ValueError("vector plane shape does not match width/height")
        for arr in (self.vectors, self.delta, self.valid, self.dim):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def valid_mask(self) -> np.ndarray:
        if self.valid is not None:
            return self.valid
        return np.ones(self.shape, dtype=bool)

    def ensure_delta(self) -> np.ndarray:
        if self.delta is None:
            d = global_delta_map(self.vectors.astype(np.float64)).astype(np.float32)
            d.flags.writeable = False
            self.delta = d
        return self.delta


def pixel_grid(width: int, height: int) -> np.ndarray:
    """Texture coordinates of every pixel center, shape (H, W, 2)."""
    s = (np.arange(width, dtype=np.float64) + 0.5) / width
    t = (np.arange(height, dtype=np.float64) + 0.5) / height
    st = np.empty((height, width, 2), dtype=np.float64)
    st[..., 0] = s[None, :]
    st[..., 1] = t[:, None]
    return st


def bake_map(projection: Projection, width: int, height: int) -> PerspectiveMap:
    """Evaluate a projection at every pixel center and pack the planes.

    Vectors are normalized in double precision and stored as float32;
    per-pixel domain failures become masked (zero) pixels rather than
    aborting the bake.
    """
    if width < 2 or height < 2:
        raise ValueError("maps must be at least 2x2")
    aspect = projection.frame_aspect(width, height)
    sample = projection.sample(pixel_grid(width, height), aspect)

    v = np.asarray(sample.vectors, dtype=np.float64)
    if v.shape != (height, width, 3):
        raise ValueError(
            f"generator produced shape {v.shape}, expected {(height, width, 3)}"
        )
    n = np.linalg.norm(v, axis=-1)
    ok = np.isfinite(n) & (n > _TINY)
    if sample.valid is not None:
        ok &= np.asarray(sample.valid, dtype=bool)
    v = np.where(ok[..., None], v / np.where(ok, n, 1.0)[..., None], 0.0)

    delta = global_delta_map(v, valid=ok).astype(np.float32)
    return PerspectiveMap(
        width=width,
        height=height,
        vectors=v.astype(np.float32),
        delta=delta,
        aov=projection.aov_meta(),
        aspect=float(aspect),
        generator=projection.kind,
        params=projection.to_params(),
        valid=None if ok.all() else ok,
        dim=None if sample.dim is None else np.asarray(sample.dim, dtype=np.float32),
    )
