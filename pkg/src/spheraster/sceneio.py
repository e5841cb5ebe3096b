"""Disk formats and scene assembly.

Baked maps persist as portable float map (PFM) planes plus a JSON
sidecar carrying the bake metadata; render outputs go to PFM (raw
floats) or PNG (quantized previews). Scenes are JSON documents that
reference meshes inline or as Wavefront OBJ files.

PFM convention here: little-endian (negative scale), rows stored
bottom-up, ``PF`` for three channels and ``Pf`` for one.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .core import AOV_MODES, AovSpec
from .projections import (
    CubemapProjection,
    DomeProjection,
    EquirectProjection,
    LensDistortionCoeffs,
    MirrorDomeProjection,
    PanoramaProjection,
    PerspectiveMap,
    PerspectiveParams,
    Projection,
    ProjectionMappingProjection,
    RectilinearProjection,
    ScreenArrayProjection,
    UniversalProjection,
    VrProjection,
    clamp_params,
    orientation_matrix,
)
from .raster import CameraTriangle, CameraVertex, Particle, ParallaxProfile, apply_parallax

_TINY = 1e-12


# ---------------------------------------------------------------------------
# portable float maps
# ---------------------------------------------------------------------------

def write_pfm(path, data: np.ndarray) -> None:
    """Write a float32 grid: (H, W) as grayscale, (H, W, 3) as color."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        magic = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"cannot encode shape {data.shape} as a float map")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a float map written by :func:`write_pfm` (or compatible)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    # header: magic, width, height, scale -- whitespace separated
    tokens, pos = [], 0
    while len(tokens) < 4:
        nxt = pos
        while nxt < len(raw) and raw[nxt : nxt + 1].isspace():
            nxt += 1
        end = nxt
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        if end == nxt:
            raise ValueError(f"{path}: truncated float-map header")
        tokens.append(raw[nxt:end])
        pos = end
    pos += 1  # single whitespace byte after the scale
    magic, w, h, scale = tokens[0], int(tokens[1]), int(tokens[2]), float(tokens[3])
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise ValueError(f"{path}: not a float map (magic {magic!r})")
    count = w * h * channels
    dtype = "<f4" if scale < 0 else ">f4"
    body = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if body.size != count:
        raise ValueError(f"{path}: float map body is truncated")
    data = body.reshape(h, w, channels) if channels == 3 else body.reshape(h, w)
    return np.ascontiguousarray(np.flipud(data)).astype(np.float32)


# ---------------------------------------------------------------------------
# baked-map persistence
# ---------------------------------------------------------------------------

def _map_stem(path) -> Path:
    p = Path(path)
    if p.suffix == ".pfm":
        p = p.with_suffix("")
    return p


def save_map(pmap: PerspectiveMap, path) -> Path:
    """Write vectors, companion planes, and the JSON sidecar.

    ``path`` may be the vector file or its stem; companions live next
    to it as <stem>.delta.pfm / <stem>.dim.pfm / <stem>.json.
    """
    stem = _map_stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_pfm(stem.with_suffix(".pfm"), pmap.vectors)
    delta = pmap.ensure_delta()
    write_pfm(stem.parent / (stem.name + ".delta.pfm"), delta)
    if pmap.dim is not None:
        write_pfm(stem.parent / (stem.name + ".dim.pfm"), pmap.dim)
    sidecar = {
        "width": pmap.width,
        "height": pmap.height,
        "aspect": pmap.aspect,
        "aov": {"mode": pmap.aov.mode, "angle_deg": math.degrees(pmap.aov.angle)},
        "generator": pmap.generator,
        "params": pmap.params,
        "planes": {"delta": True, "dim": pmap.dim is not None},
    }
    with open(stem.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return stem.with_suffix(".pfm")


def save_map_preview(pmap: PerspectiveMap, path) -> Path:
    """Export an 8-bit PNG preview of the vector field.

    Components are remapped from [-1, 1] to [0, 1] so the signed field
    survives quantization; invalid pixels come out black. Preview only:
    the raw float planes from :func:`save_map` are the authority.
    """
    shown = (pmap.vectors.astype(np.float64) + 1.0) / 2.0
    if pmap.valid is not None:
        shown = np.where(pmap.valid[..., None], shown, 0.0)
    img = Image.fromarray(
        np.round(np.clip(shown, 0.0, 1.0) * 255.0).astype(np.uint8))
    path = Path(path)
    img.save(path)
    return path


def load_map(path) -> PerspectiveMap:
    """Load a map written by :func:`save_map`.

    Vector bits round-trip exactly; pixels stored as zero vectors come
    back as the invalid mask.
    """
    stem = _map_stem(path)
    vec_path = stem.with_suffix(".pfm")
    meta_path = stem.with_suffix(".json")
    if not vec_path.exists():
        raise FileNotFoundError(f"no vector plane at {vec_path}")
    if not meta_path.exists():
        raise FileNotFoundError(f"missing sidecar {meta_path}")
    vectors = read_pfm(vec_path)
    if vectors.ndim != 3:
        raise ValueError(f"{vec_path}: vector plane must be three channels")
    with open(meta_path) as fh:
        meta = json.load(fh)
    h, w = vectors.shape[:2]
    if (meta.get("width"), meta.get("height")) != (w, h):
        raise ValueError(f"{meta_path}: sidecar size disagrees with {vec_path}")

    norms = np.linalg.norm(vectors.astype(np.float64), axis=-1)
    ok = norms > 0.5
    valid = None if ok.all() else ok

    planes = meta.get("planes", {})
    delta = None
    delta_path = stem.parent / (stem.name + ".delta.pfm")
    if planes.get("delta", delta_path.exists()) and delta_path.exists():
        delta = read_pfm(delta_path)
    dim = None
    dim_path = stem.parent / (stem.name + ".dim.pfm")
    if planes.get("dim", dim_path.exists()) and dim_path.exists():
        dim = read_pfm(dim_path)

    aov_meta = meta.get("aov", {})
    aov = AovSpec(
        math.radians(float(aov_meta.get("angle_deg", 90.0))),
        aov_meta.get("mode", "diagonal"),
    )
    return PerspectiveMap(
        width=w,
        height=h,
        vectors=vectors,
        delta=delta,
        aov=aov,
        aspect=float(meta.get("aspect", w / h)),
        generator=meta.get("generator", "unknown"),
        params=meta.get("params", {}),
        valid=valid,
        dim=dim,
    )


# ---------------------------------------------------------------------------
# render-pass output
# ---------------------------------------------------------------------------

PASS_NAMES = ("mask", "depth", "uv", "normal", "shaded", "wire")


def _checker(uv: np.ndarray, n: int = 8) -> np.ndarray:
    cells = np.floor(n * uv[..., 0]) + np.floor(n * uv[..., 1])
    return np.where(np.mod(cells, 2.0) < 1.0, 0.4, 1.0)


def shaded_plane(buffers, pmap: PerspectiveMap | None) -> np.ndarray:
    nrm = buffers.normal_unit()
    if pmap is not None:
        lambert = np.abs(np.sum(nrm * pmap.vectors.astype(np.float64), axis=-1))
    else:
        lambert = np.abs(nrm[..., 2])
    out = buffers.m * _checker(buffers.uv) * lambert
    if pmap is not None and pmap.dim is not None:
        out = out * pmap.dim.astype(np.float64)
    return out


def save_pass(path, which: str, buffers=None, pmap: PerspectiveMap | None = None,
              wire: np.ndarray | None = None) -> None:
    """Write one render pass to ``path`` (.pfm raw or .png preview).

    PNG quantization: mask/depth/wire are 16-bit grayscale (depth
    normalized to its frame maximum), uv and normal are 8-bit RGB
    (normals remapped from [-1, 1]), shaded is an 8-bit checker-and-
    headlight preview.
    """
    if which not in PASS_NAMES:
        raise ValueError(f"unknown pass {which!r}, expected one of {PASS_NAMES}")
    if which == "wire":
        if wire is None:
            raise ValueError("no wireframe plane was rendered")
        plane = wire
    elif buffers is None:
        raise ValueError("this pass needs fragment buffers")

    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        if which == "mask":
            write_pfm(path, buffers.m)
        elif which == "depth":
            write_pfm(path, buffers.depth)
        elif which == "uv":
            uv3 = np.concatenate(
                [buffers.uv, np.zeros(buffers.shape + (1,))], axis=-1)
            write_pfm(path, uv3)
        elif which == "normal":
            write_pfm(path, buffers.normal_unit())
        elif which == "shaded":
            write_pfm(path, shaded_plane(buffers, pmap))
        else:
            write_pfm(path, plane)
        return
    if suffix != ".png":
        raise ValueError(f"unsupported output format {suffix!r} (use .pfm or .png)")

    if which in ("mask", "wire"):
        gray = buffers.m if which == "mask" else plane
        img = Image.fromarray(
            np.round(np.clip(gray, 0.0, 1.0) * 65535.0).astype(np.uint16))
    elif which == "depth":
        d = buffers.depth
        peak = float(d.max())
        norm = d / peak if peak > 0.0 else d
        img = Image.fromarray(
            np.round(np.clip(norm, 0.0, 1.0) * 65535.0).astype(np.uint16))
    elif which == "uv":
        rgb = np.zeros(buffers.shape + (3,))
        rgb[..., :2] = buffers.uv
        img = Image.fromarray(
            np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8))
    elif which == "normal":
        rgb = buffers.normal_unit() * 0.5 + 0.5
        img = Image.fromarray(
            np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8))
    else:
        img = Image.fromarray(
            np.round(np.clip(shaded_plane(buffers, pmap), 0.0, 1.0) * 255.0)
            .astype(np.uint8))
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path)


# ---------------------------------------------------------------------------
# wavefront OBJ subset
# ---------------------------------------------------------------------------

@dataclass
class ObjMesh:
    """Geometry from the v/vt/vn/f subset of Wavefront OBJ."""

    positions: np.ndarray
    uvs: np.ndarray | None
    normals: np.ndarray | None
    # one entry per face: list of (position, uv, normal) index triples,
    # 0-based, None where the face omitted that attribute
    faces: list


def _obj_index(token: str, count: int, path, ln: int, what: str) -> int:
    idx = int(token)
    if idx == 0:
        raise ValueError(f"{path}:{ln}: {what} index 0 (indices are 1-based)")
    idx = idx - 1 if idx > 0 else count + idx
    if not 0 <= idx < count:
        raise ValueError(f"{path}:{ln}: {what} index {token} out of range")
    return idx


def load_obj(path) -> ObjMesh:
    """Parse v/vt/vn/f records; other record types are ignored."""
    positions, uvs, normals, faces = [], [], [], []
    missing_uv = False
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            tag, args = parts[0], parts[1:]
            try:
                if tag == "v":
                    positions.append([float(x) for x in args[:3]])
                elif tag == "vt":
                    uvs.append([float(x) for x in args[:2]])
                elif tag == "vn":
                    normals.append([float(x) for x in args[:3]])
                elif tag == "f":
                    if len(args) < 3:
                        raise ValueError("face needs at least three vertices")
                    corners = []
                    for token in args:
                        fields = token.split("/")
                        vi = _obj_index(fields[0], len(positions), path, ln, "vertex")
                        ti = ni = None
                        if len(fields) > 1 and fields[1]:
                            ti = _obj_index(fields[1], len(uvs), path, ln, "uv")
                        else:
                            missing_uv = True
                        if len(fields) > 2 and fields[2]:
                            ni = _obj_index(fields[2], len(normals), path, ln, "normal")
                        corners.append((vi, ti, ni))
                    faces.append(corners)
            except ValueError as exc:
                msg = str(exc)
                if not msg.startswith(str(path)):
                    msg = f"{path}:{ln}: {msg}"
                raise ValueError(msg) from None
    if not positions:
        raise ValueError(f"{path}: no vertices found")
    if not faces:
        warnings.warn(f"{path}: no faces found; mesh contributes no geometry")
    if missing_uv:
        warnings.warn(f"{path}: some faces have no uv coordinates; using (0, 0)")
    return ObjMesh(
        positions=np.asarray(positions, dtype=np.float64),
        uvs=np.asarray(uvs, dtype=np.float64) if uvs else None,
        normals=np.asarray(normals, dtype=np.float64) if normals else None,
        faces=faces,
    )


def fan_triangles(corner_count: int) -> list[tuple[int, int, int, bool]]:
    """Fan triangulation of an n-gon as local corner indices.

    Triangles cut from a larger polygon get their enclosing-cap row
    suppressed (the cap would clip the corners they share).
    """
    if corner_count < 3:
        raise ValueError("a face needs at least three corners")
    if corner_count == 3:
        return [(0, 1, 2, True)]
    return [(0, i, i + 1, False) for i in range(1, corner_count - 1)]


# ---------------------------------------------------------------------------
# scenes
# ---------------------------------------------------------------------------

@dataclass
class Scene:
    """A parsed scene: world-space primitives plus camera and flags."""

    camera: tuple[float, float, float] = (0.0, 0.0, 0.0)
    triangles: list = field(default_factory=list)  # world-space CameraTriangle
    lines: list = field(default_factory=list)      # (a, b) world-space pairs
    particles: list = field(default_factory=list)  # world-space Particle
    parallax: ParallaxProfile | None = None
    flags: dict = field(default_factory=dict)
    projection: dict | None = None
    map_path: str | None = None

    def camera_triangles(self, world_to_cam: np.ndarray, parallax: ParallaxProfile):
        """Yield triangles moved into camera space, parallax applied."""
        for tri in self.triangles:
            pos = apply_parallax(tri.positions @ world_to_cam.T, parallax)
            verts = []
            for i, v in enumerate((tri.a, tri.b, tri.c)):
                nrm = None
                if v.normal is not None:
                    nrm = tuple(np.asarray(v.normal, dtype=np.float64) @ world_to_cam.T)
                verts.append(CameraVertex(tuple(pos[i]), v.uv, nrm))
            yield CameraTriangle(*verts, miter=tri.miter)


def _angle_value(d: dict, key: str, default: float = 0.0) -> float:
    """Read an angle given as radians (bare key) or degrees (_deg key)."""
    deg_key = key + "_deg"
    if deg_key in d and key in d:
        raise ValueError(f"give either {key!r} or {deg_key!r}, not both")
    if deg_key in d:
        return math.radians(float(d[deg_key]))
    if key in d:
        return float(d[key])
    return default


def _camera_tuple(d: dict) -> tuple[float, float, float]:
    return (
        _angle_value(d, "yaw"),
        _angle_value(d, "pitch"),
        _angle_value(d, "roll"),
    )


def _check_keys(d: dict, allowed: set, what: str, strict: bool) -> None:
    unknown = set(d) - allowed
    if unknown and strict:
        raise ValueError(f"unknown {what} keys: {sorted(unknown)}")


def _object_transform(spec: dict):
    scale = spec.get("scale", 1.0)
    scale = np.full(3, float(scale)) if np.isscalar(scale) else np.asarray(scale, dtype=np.float64)
    if scale.shape != (3,) or np.any(np.abs(scale) < _TINY):
        raise ValueError("object scale must be a nonzero scalar or 3-vector")
    rot = orientation_matrix(*_camera_tuple(spec.get("rotate", {})))
    translate = np.asarray(spec.get("translate", (0.0, 0.0, 0.0)), dtype=np.float64)
    if translate.shape != (3,):
        raise ValueError("object translate must be a 3-vector")
    return scale, rot, translate


def _mesh_triangles(positions, uvs, normals, faces, miter_override, transform):
    scale, rot, translate = transform
    out = []
    pos_w = (positions * scale) @ rot.T + translate
    nrm_w = None
    if normals is not None:
        n = np.asarray(normals, dtype=np.float64) / scale
        ln = np.linalg.norm(n, axis=-1, keepdims=True)
        nrm_w = np.where(ln > _TINY, n / np.where(ln > _TINY, ln, 1.0), 0.0) @ rot.T
    for corners in faces:
        for i0, i1, i2, fan_miter in fan_triangles(len(corners)):
            verts = []
            for local in (i0, i1, i2):
                vi, ti, ni = corners[local]
                uv = (0.0, 0.0)
                if ti is not None and uvs is not None:
                    uv = tuple(uvs[ti])
                nrm = None
                if ni is not None and nrm_w is not None:
                    nrm = tuple(nrm_w[ni])
                verts.append(CameraVertex(tuple(pos_w[vi]), uv, nrm))
            miter = fan_miter if miter_override is None else bool(miter_override)
            out.append(CameraTriangle(*verts, miter=miter))
    return out


def _inline_mesh_arrays(mesh: dict):
    positions = np.asarray(mesh["positions"], dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError("mesh positions must be (n, 3)")
    uvs = mesh.get("uvs")
    uvs = None if uvs is None else np.asarray(uvs, dtype=np.float64)
    normals = mesh.get("normals")
    normals = None if normals is None else np.asarray(normals, dtype=np.float64)
    faces = []
    for face in mesh["faces"]:
        corners = []
        for idx in face:
            idx = int(idx)
            if not 0 <= idx < positions.shape[0]:
                raise ValueError(f"face index {idx} out of range")
            corners.append((
                idx,
                idx if uvs is not None else None,
                idx if normals is not None else None,
            ))
        faces.append(corners)
    return positions, uvs, normals, faces


_SCENE_KEYS = {"projection", "map", "camera", "objects", "lines", "particles",
               "parallax", "flags"}
_OBJECT_KEYS = {"mesh", "obj", "translate", "scale", "rotate", "miter"}


def parse_scene(source, strict: bool = False, base_dir=None) -> Scene:
    """Build a Scene from a JSON document (dict, path, or JSON text).

    Angles may be given in radians (bare keys) or degrees (``_deg``
    keys). ``strict`` turns unknown keys into errors instead of
    ignoring them.
    """
    if isinstance(source, Path) or (
            isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        p = Path(source)
        base_dir = p.parent if base_dir is None else Path(base_dir)
        with open(p) as fh:
            doc = json.load(fh)
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ValueError("scene document must be a JSON object")
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    _check_keys(doc, _SCENE_KEYS, "scene", strict)
    if "projection" in doc and "map" in doc:
        raise ValueError("scene gives both a projection and a baked map")

    scene = Scene(
        camera=_camera_tuple(doc.get("camera", {})),
        projection=doc.get("projection"),
        map_path=None if "map" not in doc else str(base_dir / doc["map"]),
        flags=dict(doc.get("flags", {})),
    )

    for spec in doc.get("objects", []):
        _check_keys(spec, _OBJECT_KEYS, "object", strict)
        transform = _object_transform(spec)
        miter_override = spec.get("miter")
        if "mesh" in spec:
            arrays = _inline_mesh_arrays(spec["mesh"])
        elif "obj" in spec:
            mesh = load_obj(base_dir / spec["obj"])
            arrays = (mesh.positions, mesh.uvs, mesh.normals, mesh.faces)
        else:
            raise ValueError("object needs 'mesh' or 'obj'")
        scene.triangles.extend(
            _mesh_triangles(*arrays, miter_override, transform))

    for pair in doc.get("lines", []):
        a, b = np.asarray(pair[0], dtype=np.float64), np.asarray(pair[1], dtype=np.float64)
        if a.shape != (3,) or b.shape != (3,):
            raise ValueError("line endpoints must be 3-vectors")
        scene.lines.append((a, b))

    for spec in doc.get("particles", []):
        scene.particles.append(
            Particle(tuple(np.asarray(spec["position"], dtype=np.float64)),
                     float(spec["radius"])))

    profile = doc.get("parallax")
    if profile is not None:
        samples = profile["samples"] if isinstance(profile, dict) else profile
        scene.parallax = ParallaxProfile(
            tuple((float(t), float(o)) for t, o in samples))

    return scene


# ---------------------------------------------------------------------------
# projection construction from plain dicts
# ---------------------------------------------------------------------------

def _lens_from_dict(d: dict | None) -> LensDistortionCoeffs | None:
    if not d:
        return None
    lens = LensDistortionCoeffs(
        radial=tuple(float(x) for x in d.get("radial", ())),
        tangential=tuple(float(x) for x in d.get("tangential", (0.0, 0.0))),
        prism=tuple(float(x) for x in d.get("prism", (0.0, 0.0))),
    )
    return None if lens.is_identity() else lens


def projection_from_dict(d: dict, strict: bool = False, base_dir=None) -> Projection:
    """Instantiate a projection from its JSON description.

    Unknown types are errors. With ``strict`` the universal parameters
    must already be in range; otherwise they are clamped.
    """
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    kind = d.get("type", "universal")

    if kind == "universal":
        omega = _angle_value(d, "omega", math.pi / 2)
        k = float(d.get("k", 0.0))
        l = float(d.get("l", 1.0))
        s = float(d.get("s", 1.0))
        if strict:
            params = PerspectiveParams(omega, k, l, s)
        else:
            params = clamp_params(omega, k, l, s)
        mode = d.get("aov_mode", "diagonal")
        if mode not in AOV_MODES:
            raise ValueError(f"unknown aov mode {mode!r}")
        return UniversalProjection(
            params=params, mode=mode,
            aspect=None if d.get("aspect") is None else float(d["aspect"]),
            lens=_lens_from_dict(d.get("lens")),
        )
    if kind == "rectilinear":
        mode = d.get("aov_mode", "horizontal")
        return RectilinearProjection(
            aov=AovSpec(_angle_value(d, "aov", math.pi / 2), mode),
            aspect=None if d.get("aspect") is None else float(d["aspect"]),
        )
    if kind == "panorama":
        return PanoramaProjection(
            omega_h=_angle_value(d, "omega_h", 2.0 * math.pi),
            height=float(d.get("height", math.pi / 2)),
        )
    if kind == "dome":
        return DomeProjection(
            omega=_angle_value(d, "omega"),
            tilt=_angle_value(d, "tilt"),
            offset=float(d.get("offset", 0.0)),
        )
    if kind == "equirect":
        return EquirectProjection()
    if kind == "cubemap":
        return CubemapProjection()
    if kind == "screen_array":
        return ScreenArrayProjection(
            count=int(d.get("count", 3)),
            omega_h=_angle_value(d, "omega_h", math.pi / 3),
            screen_aspect=float(d.get("screen_aspect", 1.0)),
        )
    if kind == "vr":
        return VrProjection(
            omega_v=_angle_value(d, "omega_v", math.pi / 2),
            ipd_offset=float(d.get("ipd_offset", 0.25)),
            eye_aspect=float(d.get("eye_aspect", 1.0)),
            coeffs=tuple(float(x) for x in d.get("radial", ())),
        )
    if kind == "mirror_dome":
        normals = read_pfm(base_dir / d["normals"])
        return MirrorDomeProjection(
            normals=normals.astype(np.float64),
            projector=tuple(d.get("projector", (0.0, 0.0, 3.0))),
            dome_center=tuple(d.get("dome_center", (0.0, 0.0, 2.0))),
            dome_radius=float(d.get("dome_radius", 2.0)),
            normals_path=str(d["normals"]),
        )
    if kind == "projection_mapping":
        positions = read_pfm(base_dir / d["positions"])
        return ProjectionMappingProjection(
            positions=positions.astype(np.float64),
            observer=tuple(d.get("observer", (0.0, 0.0, 0.0))),
            orientation=_camera_tuple(d.get("orientation", {})),
            projector=tuple(d.get("projector", (0.0, 0.0, 0.0))),
            positions_path=str(d["positions"]),
        )
    raise ValueError(f"unknown projection type {kind!r}")
