"""Development HTTP service for interactive perspective design.

The handler itself is a pure function from a request path to a
response object, so tests can drive it without opening sockets; the
socket layer is the stdlib threading server. All parameters cross this
boundary in degrees, and out-of-range values are clamped with the
corrected value echoed in ``X-Clamped-*`` response headers so a client
can reconcile its sliders.
"""

from __future__ import annotations

import io
import json
import math
import re
from dataclasses import dataclass, field, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

import numpy as np
from PIL import Image

from .projections import (
    K_MAX,
    K_MIN,
    L_MAX,
    L_MIN,
    NAMED_PROJECTIONS,
    OMEGA_MARGIN,
    OMEGA_MIN,
    S_MAX,
    S_MIN,
    UniversalProjection,
    bake_map,
    clamp_params,
    omega_max,
)
from .raster import render_scene
from .sceneio import parse_scene, shaded_plane

MAX_PREVIEW_SIZE = 1024
MIN_PREVIEW_SIZE = 16

_CORS_HEADERS = {
    "Access-Control-Allow-Origin": "*",
    "Access-Control-Allow-Methods": "GET, OPTIONS",
    "Access-Control-Allow-Headers": "*",
    "Access-Control-Expose-Headers":
        "X-Clamped-Omega, X-Clamped-K, X-Clamped-L, X-Clamped-S",
}

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


@dataclass
class HttpResponse:
    status: int
    content_type: str
    body: bytes
    headers: dict = field(default_factory=dict)


def _json_response(payload, status: int = 200, headers: dict | None = None) -> HttpResponse:
    body = json.dumps(payload, indent=2).encode("utf-8")
    return HttpResponse(status, "application/json", body, headers or {})


def _error(status: int, message: str) -> HttpResponse:
    return _json_response({"error": message}, status)


# ---------------------------------------------------------------------------
# built-in preview scenes
# ---------------------------------------------------------------------------

def _cage_lines(size: float, z: float) -> list:
    s = size
    corners = [
        (-s, -s, z - s), (s, -s, z - s), (s, s, z - s), (-s, s, z - s),
        (-s, -s, z + s), (s, -s, z + s), (s, s, z + s), (-s, s, z + s),
    ]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0),
             (4, 5), (5, 6), (6, 7), (7, 4),
             (0, 4), (1, 5), (2, 6), (3, 7)]
    return [[corners[i], corners[j]] for i, j in edges]


def _quad(center, right, down) -> dict:
    c = np.asarray(center, dtype=np.float64)
    r = np.asarray(right, dtype=np.float64)
    d = np.asarray(down, dtype=np.float64)
    corners = [c - r - d, c + r - d, c + r + d, c - r + d]
    return {
        "positions": [list(p) for p in corners],
        "uvs": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "faces": [[0, 1, 2, 3]],
    }


def builtin_scenes() -> dict:
    """Deterministic demo scenes for the preview endpoint."""
    # quad right/down axes are chosen so each face looks at the eye
    default = {
        "objects": [
            {"mesh": _quad((0.0, 0.0, 3.0), (1.2, 0.0, 0.0), (0.0, 1.2, 0.0))},
            {"mesh": _quad((-2.5, 0.0, 2.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0))},
            {"mesh": _quad((2.5, 0.0, 2.0), (0.0, 0.0, -1.0), (0.0, 1.0, 0.0))},
            {"mesh": _quad((0.0, 1.8, 2.2), (-1.8, 0.0, 0.0), (0.0, 0.0, 1.8))},
        ],
        "lines": _cage_lines(1.0, 2.0),
        "particles": [
            {"position": [-0.9, -0.6, 1.6], "radius": 0.25},
            {"position": [0.9, -0.5, 2.4], "radius": 0.35},
        ],
    }
    cage = {"lines": _cage_lines(1.0, 0.0) + _cage_lines(2.0, 0.0)}
    triangle = {
        "objects": [{
            "mesh": {
                "positions": [[0.0, -1.1, 2.5], [1.1, 0.6, 2.5], [-1.0, 0.8, 2.5]],
                "uvs": [[0.5, 1], [1, 0], [0, 0]],
                "faces": [[0, 1, 2]],
            }
        }],
    }
    return {
        "default": parse_scene(default),
        "cage": parse_scene(cage),
        "triangle": parse_scene(triangle),
    }


_SCENES = None


def _scene_table() -> dict:
    global _SCENES
    if _SCENES is None:
        _SCENES = builtin_scenes()
    return _SCENES


# ---------------------------------------------------------------------------
# endpoints
# ---------------------------------------------------------------------------

def limits_payload() -> dict:
    """Machine-usable parameter ranges, including the omega rule."""
    return {
        "k": {"min": K_MIN, "max": K_MAX},
        "l": {"min": L_MIN, "max": L_MAX},
        "s": {"min": S_MIN, "max": S_MAX},
        "omega_deg": {
            "min": math.degrees(OMEGA_MIN),
            # max = 180 / max(0.5, |k|); exclusive when k > 0, where the
            # model reaches its pole, so a safety margin is subtracted
            "max_rule": "180 / max(0.5, abs(k))",
            "exclusive_when_k_positive": True,
            "margin_deg": math.degrees(OMEGA_MARGIN),
        },
    }


def presets_payload() -> list:
    """The five classical radial projections as k stops."""
    order = sorted(NAMED_PROJECTIONS.items(), key=lambda kv: -kv[1])
    return [
        {
            "name": name,
            "k": k,
            "omega_max_deg": math.degrees(omega_max(k)),
        }
        for name, k in order
    ]


def _parse_float(query: dict, key: str, default: float) -> float:
    if key not in query:
        return default
    try:
        return float(query[key][0])
    except ValueError:
        raise ValueError(f"parameter {key!r} is not a number") from None


def _resolve_scene(scene_name: str, scene_dir=None):
    scenes = _scene_table()
    if scene_name in scenes:
        return scenes[scene_name]
    if scene_dir is not None and re.fullmatch(r"[\w.-]+", scene_name):
        candidate = Path(scene_dir) / f"{scene_name}.json"
        if candidate.is_file():
            return parse_scene(candidate)
    raise KeyError(scene_name)


def render_preview(omega_deg: float, k: float, l: float, s: float,
                   yaw_deg: float = 0.0, pitch_deg: float = 0.0,
                   roll_deg: float = 0.0, scene_name: str = "default",
                   size: int = 256, scene_dir=None):
    """Bake, render, and encode one preview frame.

    Returns (png_bytes, clamped) where clamped maps parameter names to
    the values actually used when the request was out of range.
    """
    scene_src = _resolve_scene(scene_name, scene_dir)
    if not MIN_PREVIEW_SIZE <= size <= MAX_PREVIEW_SIZE:
        raise ValueError(
            f"size must be within [{MIN_PREVIEW_SIZE}, {MAX_PREVIEW_SIZE}]")

    requested = {"omega": math.radians(omega_deg), "k": k, "l": l, "s": s}
    params = clamp_params(**requested)
    clamped = {}
    for name in ("omega", "k", "l", "s"):
        got = getattr(params, name)
        if abs(got - requested[name]) > 1e-12:
            value = math.degrees(got) if name == "omega" else got
            clamped[name] = value

    proj = UniversalProjection(params=params, mode="diagonal")
    pmap = bake_map(proj, size, size)
    scene = replace(
        scene_src,
        camera=(math.radians(yaw_deg), math.radians(pitch_deg), math.radians(roll_deg)),
    )
    result = render_scene(scene, pmap)

    frame = shaded_plane(result.buffers, pmap)
    if result.wire is not None:
        frame = frame * (1.0 - result.wire) + result.wire
    if pmap.valid is not None:
        frame = np.where(pmap.valid, frame, 0.0)
    img = Image.fromarray(
        np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue(), clamped


def handle_request(path: str, ui_dir=None, scene_dir=None) -> HttpResponse:
    """Route one GET request; pure apart from reading static UI files."""
    parts = urlsplit(path)
    route = parts.path
    query = parse_qs(parts.query)

    if route == "/limits":
        return _json_response(limits_payload())
    if route == "/presets":
        return _json_response(presets_payload())
    if route == "/render":
        try:
            omega = _parse_float(query, "omega", 90.0)
            k = _parse_float(query, "k", 0.0)
            l = _parse_float(query, "l", 1.0)
            s = _parse_float(query, "s", 1.0)
            yaw = _parse_float(query, "yaw", 0.0)
            pitch = _parse_float(query, "pitch", 0.0)
            roll = _parse_float(query, "roll", 0.0)
            size = int(_parse_float(query, "size", 256))
            scene_name = query.get("scene", ["default"])[0]
            png, clamped = render_preview(
                omega, k, l, s, yaw, pitch, roll, scene_name, size,
                scene_dir=scene_dir)
        except KeyError as exc:
            return _error(404, f"unknown scene {exc.args[0]!r}")
        except ValueError as exc:
            return _error(400, str(exc))
        headers = {"Cache-Control": "no-store"}
        for name, value in clamped.items():
            headers[f"X-Clamped-{name.capitalize()}"] = f"{value:.10g}"
        return HttpResponse(200, "image/png", png, headers)
    if ui_dir is not None:
        return _static_file(ui_dir, route)
    return _error(404, f"no route {route!r}")


def _static_file(ui_dir, route: str) -> HttpResponse:
    root = Path(ui_dir).resolve()
    rel = route.lstrip("/") or "index.html"
    target = (root / rel).resolve()
    if not str(target).startswith(str(root)) or not target.is_file():
        return _error(404, f"no route {route!r}")
    ctype = _STATIC_TYPES.get(target.suffix.lower(), "application/octet-stream")
    return HttpResponse(200, ctype, target.read_bytes())


# ---------------------------------------------------------------------------
# socket layer
# ---------------------------------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    server_version = "spheraster"
    quiet = True

    def do_GET(self):
        resp = handle_request(self.path,
                              ui_dir=getattr(self.server, "ui_dir", None),
                              scene_dir=getattr(self.server, "scene_dir", None))
        self.send_response(resp.status)
        self.send_header("Content-Type", resp.content_type)
        self.send_header("Content-Length", str(len(resp.body)))
        for name, value in {**_CORS_HEADERS, **resp.headers}.items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(resp.body)

    def do_OPTIONS(self):
        self.send_response(204)
        for name, value in _CORS_HEADERS.items():
            self.send_header(name, value)
        self.end_headers()

    def log_message(self, fmt, *args):
        if not self.quiet:
            super().log_message(fmt, *args)


def make_server(host: str = "127.0.0.1", port: int = 8765,
                ui_dir=None, scene_dir=None,
                quiet: bool = True) -> ThreadingHTTPServer:
    """Build (but do not start) the preview server."""
    handler = type("Handler", (_Handler,), {"quiet": quiet})
    server = ThreadingHTTPServer((host, port), handler)
    server.ui_dir = ui_dir
    server.scene_dir = scene_dir
    return server


def serve(host: str = "127.0.0.1", port: int = 8765, ui_dir=None,
          scene_dir=None, quiet: bool = False) -> None:
    server = make_server(host, port, ui_dir, scene_dir, quiet)
    host_shown = host or "0.0.0.0"
    print(f"preview server listening on http://{host_shown}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
