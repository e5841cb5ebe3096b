"""Frame coordinate transforms and screen-space step functions.

Everything here operates on the two coordinate systems the rest of the
package is built on:

- texture coordinates (s, t) in [0, 1]^2, with (0, 0) at the top-left
  image corner, s growing to the right and t growing downward;
- view coordinates (x, y), a centered frame where the span is fixed by
  an angle-of-view mode, so that the optical axis is (0, 0).

Camera space is right-handed with x to the right, y down and z forward;
a baked perspective map stores one unit direction vector per pixel in
that space.

The step functions turn signed edge-function values into coverage.
``bstep`` is the hard (aliased) step; ``pstep`` ramps over one pixel
using a screen-space derivative estimate; ``gpstep`` is the same ramp
driven by a precomputed reciprocal derivative plane, which is how baked
maps carry it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

AOV_MODES = ("horizontal", "vertical", "diagonal", "horizontal4x3")

# Derivative floor: a constant field would otherwise produce a zero
# denominator; the reciprocal plane then saturates at 1e12.
FWIDTH_FLOOR = 1e-12


@dataclass(frozen=True)
class AovSpec:
    """Angle of view: size in radians plus the frame axis it measures."""

    angle: float
    mode: str = "horizontal"

    def __post_init__(self):
        if not np.isfinite(self.angle) or not 0.0 < self.angle <= 2.0 * np.pi:
            raise ValueError(f"aov angle must be in (0, 2*pi], got {self.angle!r}")
        if self.mode not in AOV_MODES:
            raise ValueError(f"aov mode must be one of {AOV_MODES}, got {self.mode!r}")


def _mode_scale(aspect: float, mode: str) -> tuple[float, float]:
    """Half-extents of the view frame for a given aspect and AOV mode."""
    if not np.isfinite(aspect) or aspect <= 0.0:
        raise ValueError(f"aspect must be positive, got {aspect!r}")
    if mode == "horizontal":
        return 1.0, 1.0 / aspect
    if mode == "vertical":
        return aspect, 1.0
    if mode == "diagonal":
        d = np.sqrt(1.0 + aspect * aspect)
        return aspect / d, 1.0 / d
    if mode == "horizontal4x3":
        return aspect / (4.0 / 3.0), 1.0 / (4.0 / 3.0)
    raise ValueError(f"aov mode must be one of {AOV_MODES}, got {mode!r}")


def _mode_of(aov) -> str:
    return aov.mode if isinstance(aov, AovSpec) else str(aov)


def texture_to_view(st, aspect: float, aov) -> np.ndarray:
    """Map texture coordinates (..., 2) to centered view coordinates.

    The unit square maps onto a rectangle whose half-extents depend on
    the AOV mode: the axis the angle is measured along reaches 1 (the
    diagonal mode puts the unit circle through the frame corners).
    """
    st = np.asarray(st, dtype=np.float64)
    sx, sy = _mode_scale(aspect, _mode_of(aov))
    out = 2.0 * st - 1.0
    out = out * np.array([sx, sy])
    return out


def view_to_texture(xy, aspect: float, aov) -> np.ndarray:
    """Inverse of :func:`texture_to_view` (exact up to rounding)."""
    xy = np.asarray(xy, dtype=np.float64)
    sx, sy = _mode_scale(aspect, _mode_of(aov))
    return 0.5 + 0.5 * xy / np.array([sx, sy])


def bstep(g):
    """Hard step: 1 where g > 0, else 0 (0 at exactly 0)."""
    g = np.asarray(g, dtype=np.float64)
    out = np.where(g > 0.0, 1.0, 0.0)
    return out if out.ndim else float(out)


def pstep(g, delta):
    """One-pixel linear step: clamp(g / delta + 1/2) for delta > 0.

    ``delta`` is the screen-space derivative of g at this pixel (the
    width of the anti-aliasing ramp in g units).
    """
    g = np.asarray(g, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta <= 0.0):
        raise ValueError("pstep delta must be strictly positive")
    out = np.clip(g / delta + 0.5, 0.0, 1.0)
    return out if out.ndim else float(out)


def gpstep(g, delta_recip):
    """Linear step driven by a reciprocal derivative: clamp(g * delta_recip + 1/2).

    Baked maps store the reciprocal plane directly so consumers never
    divide per pixel.
    """
    g = np.asarray(g, dtype=np.float64)
    out = np.clip(g * np.asarray(delta_recip, dtype=np.float64) + 0.5, 0.0, 1.0)
    return out if out.ndim else float(out)


def discrete_fwidth(field: np.ndarray, i: int, j: int) -> float:
    """Derivative magnitude of a scalar grid at (row i, col j).

    Forward differences along both axes, falling back to the backward
    difference on the last row/column, floored at FWIDTH_FLOOR. This is
    the reference (scalar) form; :func:`fwidth_grid` is the vectorized
    equivalent used by the bakers.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2 or field.shape[0] < 2 or field.shape[1] < 2:
        raise ValueError("discrete_fwidth needs a grid of at least 2x2")
    h, w = field.shape
    i1 = i + 1 if i + 1 < h else i - 1
    j1 = j + 1 if j + 1 < w else j - 1
    d = abs(field[i1, j] - field[i, j]) + abs(field[i, j1] - field[i, j])
    return max(float(d), FWIDTH_FLOOR)


def fwidth_grid(field: np.ndarray) -> np.ndarray:
    """Vectorized :func:`discrete_fwidth` over a whole grid."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2 or field.shape[0] < 2 or field.shape[1] < 2:
        raise ValueError("fwidth_grid needs a grid of at least 2x2")
    di = np.abs(np.diff(field, axis=0))
    di = np.concatenate([di, di[-1:, :]], axis=0)
    dj = np.abs(np.diff(field, axis=1))
    dj = np.concatenate([dj, dj[:, -1:]], axis=1)
    return np.maximum(di + dj, FWIDTH_FLOOR)


def global_delta_map(vectors: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
    """Reciprocal derivative plane for a baked direction-vector grid.

    Per pixel: 1 / max(fwidth(x), fwidth(y), fwidth(z)) over the three
    vector components. Degenerate (constant) regions saturate at
    1/FWIDTH_FLOOR and trigger a warning unless ``valid`` marks them
    all as masked-out anyway.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 3 or vectors.shape[2] != 3:
        raise ValueError("global_delta_map expects an (H, W, 3) array")
    fw = np.maximum(
        fwidth_grid(vectors[:, :, 0]),
        np.maximum(fwidth_grid(vectors[:, :, 1]), fwidth_grid(vectors[:, :, 2])),
    )
    floored = fw <= FWIDTH_FLOOR
    if valid is not None:
        floored &= np.asarray(valid, dtype=bool)
    if np.any(floored):
        warnings.warn(
            "degenerate (constant) vector region: derivative floor reached",
            RuntimeWarning,
            stacklevel=2,
        )
    return 1.0 / fw
