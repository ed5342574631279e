"""Planar primitives: points, polylines, arc-length resampling, curvature.

Everything here is immutable after construction and safe to share across
worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Consecutive polyline points closer than this are considered coincident.
COINCIDENT_TOL = 1e-9


@dataclass(frozen=True)
class Point2:
    """A finite 2-D point in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


class Polyline:
    """Ordered 2-D points with strictly increasing arc-length.

    `xy` is an (n, 2) read-only array, `cum_s` the chord-length cumulative
    arc-length per point (cum_s[0] == 0).
    """

    __slots__ = ("xy", "cum_s")

    def __init__(self, xy):
        arr = np.array(xy, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError("polyline needs at least two 2-D points")
        if not np.isfinite(arr).all():
            raise ValueError("polyline has non-finite coordinates")
        seg = np.hypot(*(arr[1:] - arr[:-1]).T)
        if (seg <= COINCIDENT_TOL).any():
            i = int(np.flatnonzero(seg <= COINCIDENT_TOL)[0])
            raise ValueError(f"coincident polyline points at indices {i}, {i + 1}")
        arr.setflags(write=False)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        cum.setflags(write=False)
        self.xy = arr
        self.cum_s = cum

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    @property
    def n_points(self) -> int:
        return int(self.xy.shape[0])

    def first_point(self) -> Point2:
        return Point2(float(self.xy[0, 0]), float(self.xy[0, 1]))

    def last_point(self) -> Point2:
        return Point2(float(self.xy[-1, 0]), float(self.xy[-1, 1]))

    def point_at(self, s) -> np.ndarray:
        """Linear interpolation along the polyline at chord arc-length s."""
        s = np.asarray(s, dtype=float)
        x = np.interp(s, self.cum_s, self.xy[:, 0])
        y = np.interp(s, self.cum_s, self.xy[:, 1])
        return np.stack([x, y], axis=-1)

    def __eq__(self, other):
        return isinstance(other, Polyline) and np.array_equal(self.xy, other.xy)

    def __repr__(self):
        return f"Polyline({self.n_points} pts, {self.length:.2f} m)"


def resample_polyline(p: Polyline, spacing: float) -> Polyline:
    """Resample at fixed arc-length spacing, keeping both endpoints.

    Sample positions are 0, spacing, 2*spacing, ... plus the final endpoint,
    so every gap equals `spacing` except possibly the last. A polyline
    shorter than `spacing` degenerates to its two endpoints.
    """
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    total = p.length
    if total < spacing:
        return Polyline([p.xy[0], p.xy[-1]])
    n_full = int(math.floor(total / spacing + 1e-12))
    s = np.arange(n_full + 1) * spacing
    if total - s[-1] > COINCIDENT_TOL:
        s = np.append(s, total)
    xy = p.point_at(s)
    # pin endpoints exactly so round-trips cannot drift
    xy[0] = p.xy[0]
    xy[-1] = p.xy[-1]
    return Polyline(xy)


def curvature_profile(p: Polyline) -> np.ndarray:
    """Signed curvature (1/m) per point from the circumscribed circle of
    each consecutive point triple; endpoints copy their neighbor.

    Positive curvature bends left. Collinear triples give exactly 0.
    Intended for polylines already resampled to uniform spacing.
    """
    xy = p.xy
    if xy.shape[0] < 3:
        raise ValueError("curvature needs at least 3 points")
    a, b, c = xy[:-2], xy[1:-1], xy[2:]
    ab = b - a
    ca = c - a
    cross = ab[:, 0] * ca[:, 1] - ab[:, 1] * ca[:, 0]
    den = (
        np.hypot(*ab.T)
        * np.hypot(*(c - b).T)
        * np.hypot(*ca.T)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(den > COINCIDENT_TOL, 2.0 * cross / den, 0.0)
    return np.concatenate(([kappa[0]], kappa, [kappa[-1]]))


def project_to_polyline(pos: Point2, p: Polyline) -> tuple[float, float, float]:
    """Project a point onto the polyline.

    Returns (s, lateral, distance): chord arc-length of the closest point,
    the signed perpendicular offset (left of travel positive), and the
    projection distance. Ties go to the earliest segment.
    """
    xy = p.xy
    q = np.array([pos.x, pos.y])
    d = xy[1:] - xy[:-1]
    seg_len2 = np.einsum("ij,ij->i", d, d)
    w = q[None, :] - xy[:-1]
    t = np.clip(np.einsum("ij,ij->i", w, d) / seg_len2, 0.0, 1.0)
    foot = xy[:-1] + t[:, None] * d
    diff = q[None, :] - foot
    dist2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(dist2))
    seg_len = math.sqrt(seg_len2[i])
    s = float(p.cum_s[i] + t[i] * seg_len)
    tx, ty = d[i] / seg_len
    lateral = float(tx * diff[i, 1] - ty * diff[i, 0])
    return s, lateral, math.sqrt(float(dist2[i]))


def rotate(xy: np.ndarray, angle: float) -> np.ndarray:
    """Rotate points (n, 2) about the origin by `angle` radians."""
    c, s = math.cos(angle), math.sin(angle)
    out = np.empty_like(xy, dtype=float)
    out[..., 0] = c * xy[..., 0] - s * xy[..., 1]
    out[..., 1] = s * xy[..., 0] + c * xy[..., 1]
    return out
