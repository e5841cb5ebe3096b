"""Command-line interface.

All angles cross this boundary in degrees; everything internal is
radians. Exit codes: 0 success, 2 invalid parameters (with a hint at
the nearest valid values where that makes sense), 3 missing files.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .core import texture_to_view, view_to_texture
from .projections import (
    PerspectiveParams,
    bake_map,
    clamp_params,
    pixel_grid,
    radial_curve,
    remap_2d_to_2d,
)
from .raster import render_scene
from .sceneio import (
    PASS_NAMES,
    load_map,
    parse_scene,
    projection_from_dict,
    save_map,
    save_map_preview,
    save_pass,
)
from .server import serve

AOV_MODE_CHOICES = ["horizontal", "vertical", "diagonal", "horizontal4x3"]


def _triple(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)


def _floats(text: str) -> tuple[float, ...]:
    if not text.strip():
        return ()
    return tuple(float(x) for x in text.split(","))


def _params_quad(text: str) -> tuple[float, float, float, float]:
    """omega_deg,k,l,s with trailing values optional."""
    parts = [float(x) for x in text.split(",")]
    if not 1 <= len(parts) <= 4:
        raise argparse.ArgumentTypeError("expected omega_deg[,k[,l[,s]]]")
    parts += [0.0, 1.0, 1.0][len(parts) - 1:]
    return tuple(parts)


def _projection_dict(args) -> dict:
    kind = args.type or "universal"
    if kind == "universal":
        d = {
            "type": kind,
            "omega_deg": args.omega_deg,
            "k": args.k,
            "l": args.l,
            "s": args.s,
            "aov_mode": args.aov_mode,
        }
        if args.aspect is not None:
            d["aspect"] = args.aspect
        lens = {}
        if args.lens_radial:
            lens["radial"] = list(args.lens_radial)
        if args.lens_tangential:
            lens["tangential"] = list(args.lens_tangential)
        if args.lens_prism:
            lens["prism"] = list(args.lens_prism)
        if lens:
            d["lens"] = lens
        return d
    if kind == "rectilinear":
        d = {"type": kind, "aov_deg": args.aov_deg, "aov_mode": args.aov_mode}
        if args.aspect is not None:
            d["aspect"] = args.aspect
        return d
    if kind == "panorama":
        return {"type": kind, "omega_h_deg": args.omega_h_deg, "height": args.span}
    if kind == "dome":
        return {"type": kind, "omega_deg": args.omega_deg, "tilt_deg": args.tilt_deg,
                "offset": args.offset}
    if kind in ("equirect", "cubemap"):
        return {"type": kind}
    if kind == "screen_array":
        return {"type": kind, "count": args.count, "omega_h_deg": args.omega_h_deg,
                "screen_aspect": args.screen_aspect}
    if kind == "vr":
        return {"type": kind, "omega_v_deg": args.omega_v_deg,
                "ipd_offset": args.ipd_offset, "eye_aspect": args.eye_aspect,
                "radial": list(args.lens_radial or ())}
    if kind == "mirror_dome":
        if not args.normals:
            raise ValueError("mirror_dome needs --normals")
        return {"type": kind, "normals": args.normals,
                "projector": list(args.projector),
                "dome_center": list(args.dome_center),
                "dome_radius": args.dome_radius}
    if kind == "projection_mapping":
        if not args.positions:
            raise ValueError("projection_mapping needs --positions")
        return {"type": kind, "positions": args.positions,
                "observer": list(args.observer),
                "orientation": {"yaw_deg": args.orientation[0],
                                "pitch_deg": args.orientation[1],
                                "roll_deg": args.orientation[2]},
                "projector": list(args.projector)}
    raise ValueError(f"unknown projection type {kind!r}")


def _suggest_universal(args) -> str:
    try:
        p = clamp_params(math.radians(args.omega_deg), args.k, args.l, args.s)
    except ValueError:
        return ""
    return (f" (nearest valid: --omega-deg {math.degrees(p.omega):.6g}"
            f" --k {p.k:.6g} --l {p.l:.6g} --s {p.s:.6g})")


def _build_projection(args):
    d = _projection_dict(args)
    try:
        return projection_from_dict(d, strict=args.strict, base_dir=Path.cwd())
    except ValueError as exc:
        hint = _suggest_universal(args) if d["type"] == "universal" else ""
        raise SystemExit(_fail(f"{exc}{hint}", 2))


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_genmap(args) -> int:
    proj = _build_projection(args)
    if (args.type or "universal") == "universal" and not args.strict:
        p = proj.params
        for name, got, want in (
            ("omega-deg", math.degrees(p.omega), args.omega_deg),
            ("k", p.k, args.k), ("l", p.l, args.l), ("s", p.s, args.s),
        ):
            if abs(got - want) > 1e-9:
                print(f"note: {name} clamped to {got:.6g}", file=sys.stderr)
    pmap = bake_map(proj, args.width, args.height)
    out = save_map(pmap, args.out)
    if args.preview:
        save_map_preview(pmap, args.preview)
        print(f"wrote {args.preview}")
    invalid = 0 if pmap.valid is None else int((~pmap.valid).sum())
    print(f"wrote {out} ({pmap.width}x{pmap.height}, {pmap.generator},"
          f" {invalid} masked pixels)")
    return 0


_PASS_ALIASES = {"wireframe": "wire"}


def _pass_list(text: str) -> list[str]:
    out = []
    for name in text.split(","):
        name = _PASS_ALIASES.get(name.strip(), name.strip())
        if name not in PASS_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown pass {name!r}, expected {','.join(PASS_NAMES)}")
        out.append(name)
    return out


def cmd_render(args) -> int:
    scene = parse_scene(args.scene, strict=args.strict)
    if args.map is not None:
        pmap = load_map(args.map)
    elif args.type is not None:
        pmap = bake_map(_build_projection(args), args.width, args.height)
    elif scene.map_path is not None:
        pmap = load_map(scene.map_path)
    elif scene.projection is not None:
        proj = projection_from_dict(
            scene.projection, strict=args.strict, base_dir=Path(args.scene).parent)
        pmap = bake_map(proj, args.width, args.height)
    else:
        return _fail("scene names neither a projection nor a baked map"
                     " (pass --map or --type)", 2)
    result = render_scene(scene, pmap)
    ext = ".pfm" if args.format == "pfm" else ".png"
    for which in args.passes:
        out = Path(f"{args.out_prefix}.{which}{ext}")
        save_pass(out, which, result.buffers, pmap, result.wire)
        print(f"wrote {out}")
    c = result.counts
    print(f"rendered {pmap.width}x{pmap.height}: {c.get('pieces', 0)} triangle"
          f" pieces, {len(scene.lines)} lines, {len(scene.particles)} particles,"
          f" {c.get('backfacing', 0)} culled, {c.get('degenerate', 0)} degenerate")
    return 0


def _bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    top = img[y0c, x0c] * (1.0 - fx) + img[y0c, x1c] * fx
    bot = img[y1c, x0c] * (1.0 - fx) + img[y1c, x1c] * fx
    return top * (1.0 - fy) + bot * fy


def cmd_remap(args) -> int:
    src = Image.open(args.in_image).convert("RGBA")
    src_px = np.asarray(src, dtype=np.float64) / 255.0
    h_in, w_in = src_px.shape[:2]
    w_out = args.width or w_in
    h_out = args.height or h_in

    make = (lambda o, k, l, s: PerspectiveParams(o, k, l, s)) if args.strict \
        else clamp_params
    oi, ki, li, si = args.in_params
    oo, ko, lo, so = args.out_params
    params_in = make(math.radians(oi), ki, li, si)
    params_out = make(math.radians(oo), ko, lo, so)

    st_out = pixel_grid(w_out, h_out)
    xy_out = texture_to_view(st_out, w_out / h_out, args.out_aov_mode)
    xy_in, ok = remap_2d_to_2d(xy_out, params_out, params_in)
    st_in = view_to_texture(xy_in, w_in / h_in, args.in_aov_mode)

    x = st_in[..., 0] * w_in - 0.5
    y = st_in[..., 1] * h_in - 0.5
    ok &= (st_in[..., 0] >= 0.0) & (st_in[..., 0] < 1.0)
    ok &= (st_in[..., 1] >= 0.0) & (st_in[..., 1] < 1.0)

    if args.filter == "nearest":
        xi = np.clip(np.round(x).astype(np.int64), 0, w_in - 1)
        yi = np.clip(np.round(y).astype(np.int64), 0, h_in - 1)
        out = src_px[yi, xi]
    else:
        out = _bilinear(src_px, x, y)
    out = np.where(ok[..., None], out, 0.0)

    img = Image.fromarray(np.round(np.clip(out, 0.0, 1.0) * 255.0).astype(np.uint8))
    img.save(args.out_image)
    kept = float(ok.mean())
    print(f"wrote {args.out_image} ({w_out}x{h_out}, {kept:.1%} of pixels in domain)")
    return 0


def cmd_curves(args) -> int:
    omega = math.radians(args.omega_deg)
    ks = list(args.k_list)
    for k in ks:
        p = clamp_params(omega, k)
        if abs(p.k - k) > 1e-12 or abs(p.omega - omega) > 1e-12:
            return _fail(
                f"omega {args.omega_deg} deg with k {k} is out of range"
                f" (max {math.degrees(p.omega):.6g} deg)", 2)
    thetas = np.linspace(0.0, omega / 2.0, args.samples)
    columns = [radial_curve(thetas, omega, k) for k in ks]

    out = sys.stdout if args.out_csv == "-" else open(args.out_csv, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["theta_rad"] + [f"R_k={k:g}" for k in ks])
        for i, theta in enumerate(thetas):
            writer.writerow([f"{theta:.9g}"] + [f"{c[i]:.9g}" for c in columns])
    finally:
        if out is not sys.stdout:
            out.close()
            print(f"wrote {args.out_csv} ({args.samples} samples, {len(ks)} curves)")
    return 0


def cmd_serve(args) -> int:
    serve(args.host, args.port, ui_dir=args.ui_dir, scene_dir=args.scene_dir,
          quiet=not args.verbose)
    return 0


def _add_projection_flags(p: argparse.ArgumentParser, default_type) -> None:
    p.add_argument("--type", default=default_type,
                   choices=["universal", "rectilinear", "panorama", "dome",
                            "equirect", "cubemap", "screen_array", "vr",
                            "mirror_dome", "projection_mapping"])
    p.add_argument("--omega-deg", type=float, default=90.0,
                   help="angle of view (universal) or compression angle (dome)")
    p.add_argument("--k", type=float, default=0.0, help="radial shape, -1..1")
    p.add_argument("--l", type=float, default=1.0, help="cylindricity, 0..1")
    p.add_argument("--s", type=float, default=1.0, help="anamorphic factor, 0.8..1")
    p.add_argument("--aov-deg", type=float, default=90.0,
                   help="rectilinear angle of view")
    p.add_argument("--aov-mode", default="diagonal", choices=AOV_MODE_CHOICES)
    p.add_argument("--aspect", type=float, default=None,
                   help="frame aspect override (default: width/height)")
    p.add_argument("--lens-radial", type=_floats, default=(),
                   help="comma-separated radial distortion terms")
    p.add_argument("--lens-tangential", type=_floats, default=(),
                   help="tangential distortion p1,p2")
    p.add_argument("--lens-prism", type=_floats, default=(),
                   help="thin-prism distortion q1,q2")
    p.add_argument("--omega-h-deg", type=float, default=180.0,
                   help="horizontal sweep (panorama) or per-screen width (screen_array)")
    p.add_argument("--omega-v-deg", type=float, default=90.0,
                   help="vertical angle of view (vr)")
    p.add_argument("--span", type=float, default=math.pi / 2,
                   help="panorama vertical span (angle units)")
    p.add_argument("--tilt-deg", type=float, default=0.0, help="dome tilt")
    p.add_argument("--offset", type=float, default=0.0, help="dome forward offset")
    p.add_argument("--count", type=int, default=3, help="screen count")
    p.add_argument("--screen-aspect", type=float, default=1.0)
    p.add_argument("--ipd-offset", type=float, default=0.25)
    p.add_argument("--eye-aspect", type=float, default=1.0)
    p.add_argument("--normals", default=None, help="mirror normals pass (.pfm)")
    p.add_argument("--positions", default=None, help="surface positions pass (.pfm)")
    p.add_argument("--projector", type=_triple, default=(0.0, 0.0, 3.0))
    p.add_argument("--dome-center", type=_triple, default=(0.0, 0.0, 2.0))
    p.add_argument("--dome-radius", type=float, default=2.0)
    p.add_argument("--observer", type=_triple, default=(0.0, 0.0, 0.0))
    p.add_argument("--orientation", type=_triple, default=(0.0, 0.0, 0.0),
                   help="observer yaw,pitch,roll in degrees")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spheraster",
        description="Bake perspective maps and rasterize scenes against them.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmap", help="bake a perspective map to disk")
    p.add_argument("out", help="output .pfm path (sidecars written next to it)")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    _add_projection_flags(p, default_type="universal")
    p.add_argument("--strict", action="store_true",
                   help="reject out-of-range parameters instead of clamping")
    p.add_argument("--preview", default=None,
                   help="also write an 8-bit PNG preview of the vector field")
    p.set_defaults(func=cmd_genmap)

    p = sub.add_parser("render", help="render a scene file")
    p.add_argument("scene", help="scene JSON path")
    p.add_argument("--map", default=None, help="baked map (overrides the scene)")
    p.add_argument("--out-prefix", required=True,
                   help="output path prefix; passes land at <prefix>.<pass>.<ext>")
    p.add_argument("--passes", type=_pass_list, default=["shaded"],
                   help="comma-separated subset of "
                        "mask,depth,uv,normal,shaded,wire (alias wireframe)")
    p.add_argument("--format", default="png", choices=["png", "pfm"])
    p.add_argument("--width", type=int, default=512,
                   help="bake size when no prebaked map is given")
    p.add_argument("--height", type=int, default=512)
    _add_projection_flags(p, default_type=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("remap", help="reproject an image between projections")
    p.add_argument("--in-image", required=True, help="source image")
    p.add_argument("--out-image", required=True)
    p.add_argument("--in-params", type=_params_quad, required=True,
                   metavar="OMEGA_DEG[,K[,L[,S]]]",
                   help="projection of the source image")
    p.add_argument("--out-params", type=_params_quad, required=True,
                   metavar="OMEGA_DEG[,K[,L[,S]]]",
                   help="projection of the output image")
    p.add_argument("--in-aov-mode", default="diagonal", choices=AOV_MODE_CHOICES)
    p.add_argument("--out-aov-mode", default="diagonal", choices=AOV_MODE_CHOICES)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--filter", default="bilinear", choices=["nearest", "bilinear"])
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_remap)

    p = sub.add_parser("curves", help="tabulate radial profiles as CSV")
    p.add_argument("--omega-deg", type=float, default=170.0,
                   help="angle of view in degrees")
    p.add_argument("--k-list", type=_floats, default=(1.0, 0.5, 0.0, -0.5, -1.0),
                   help="comma-separated k values, one output column each")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out-csv", default="-", help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("serve", help="run the interactive preview server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--scene-dir", default=None,
                   help="directory of extra scene JSON files for ?scene=")
    p.add_argument("--ui-dir", default=None,
                   help="also serve this directory of static files")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except FileNotFoundError as exc:
        return _fail(str(exc), 3)
    except (ValueError, KeyError) as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
