"""Lane-graph maps: ingestion, validation, and reference-path construction.

Map file schema (line oriented, one record per lane)::

    city MIA
    lane L1
    pt 0.000000 0.000000
    pt 10.000000 0.000000
    succ L2
    pred L0

`city` is optional and defaults to "UNKNOWN". Coordinates are meters and
are written back with 9 decimal places. Blank lines and lines starting
with `#` are ignored.

Argoverse-style HD maps translate onto this schema one lane segment at a
time: the per-lane centerline array becomes the `pt` rows, the lane id the
`lane` header, and the predecessor/successor id lists the `pred`/`succ`
rows (see scripts/convert_argoverse_map.py for the documented stub).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import MapFormatError, PathOverrunError, ValidationError
from .geometry import (
    Point2,
    Polyline,
    curvature_profile,
    project_to_polyline,
    resample_polyline,
)

# Digitization noise allowed between a lane's last point and its
# successor's first point.
CONNECTIVITY_TOL = 0.5

# Arc-length spacing of reference-path samples.
REFERENCE_SPACING = 1.0


@dataclass(frozen=True)
class LaneSegment:
    """One lane centerline plus graph connectivity."""

    lane_id: str
    centerline: Polyline
    predecessors: tuple[str, ...] = ()
    successors: tuple[str, ...] = ()


@dataclass(frozen=True)
class SceneMap:
    """A lane graph for one city. Treat as immutable after construction."""

    city: str
    lanes: dict[str, LaneSegment] = field(default_factory=dict)

    def validate(self) -> None:
        for lane in self.lanes.values():
            for ref in lane.successors + lane.predecessors:
                if ref not in self.lanes:
                    raise ValidationError(
                        f"lane {lane.lane_id!r} references missing lane {ref!r}"
                    )
            for succ_id in lane.successors:
                gap = lane.centerline.last_point().dist(
                    self.lanes[succ_id].centerline.first_point()
                )
                if gap > CONNECTIVITY_TOL:
                    raise ValidationError(
                        f"lane {lane.lane_id!r} -> {succ_id!r} endpoint gap "
                        f"{gap:.3f} m exceeds {CONNECTIVITY_TOL} m"
                    )

    def n_edges(self) -> int:
        return sum(len(lane.successors) for lane in self.lanes.values())

    def sorted_ids(self) -> list[str]:
        return sorted(self.lanes)


def make_map(city: str, lanes: list[LaneSegment]) -> SceneMap:
    """Build and validate a SceneMap from lane segments."""
    by_id: dict[str, LaneSegment] = {}
    for lane in lanes:
        if lane.lane_id in by_id:
            raise ValidationError(f"duplicate lane id {lane.lane_id!r}")
        by_id[lane.lane_id] = lane
    m = SceneMap(city=city, lanes=by_id)
    m.validate()
    return m


def parse_map_lines(lines, path=None) -> SceneMap:
    """Parse the map schema from an iterable of text lines."""
    city = "UNKNOWN"
    lanes: list[LaneSegment] = []
    cur_id = None
    cur_pts: list[tuple[float, float]] = []
    cur_succ: list[str] = []
    cur_pred: list[str] = []

    def flush(lineno):
        if cur_id is None:
            return
        if len(cur_pts) < 2:
            raise MapFormatError(
                f"lane {cur_id!r} has {len(cur_pts)} points, need at least 2",
                path,
                lineno,
            )
        try:
            poly = Polyline(cur_pts)
        except ValueError as exc:
            raise MapFormatError(f"lane {cur_id!r}: {exc}", path, lineno) from exc
        lanes.append(
            LaneSegment(cur_id, poly, tuple(cur_pred), tuple(cur_succ))
        )

    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        tag = fields[0]
        if tag == "city":
            if len(fields) != 2:
                raise MapFormatError("city line needs one label", path, lineno)
            city = fields[1]
        elif tag == "lane":
            if len(fields) != 2:
                raise MapFormatError("lane line needs one id", path, lineno)
            flush(lineno)
            cur_id = fields[1]
            cur_pts, cur_succ, cur_pred = [], [], []
        elif tag == "pt":
            if cur_id is None:
                raise MapFormatError("pt before any lane header", path, lineno)
            if len(fields) != 3:
                raise MapFormatError("pt line needs two coordinates", path, lineno)
            try:
                cur_pts.append((float(fields[1]), float(fields[2])))
            except ValueError as exc:
                raise MapFormatError(f"bad coordinate: {line}", path, lineno) from exc
        elif tag in ("succ", "pred"):
            if cur_id is None:
                raise MapFormatError(f"{tag} before any lane header", path, lineno)
            if len(fields) != 2:
                raise MapFormatError(f"{tag} line needs one id", path, lineno)
            (cur_succ if tag == "succ" else cur_pred).append(fields[1])
        else:
            raise MapFormatError(f"unknown directive {tag!r}", path, lineno)
    flush(lineno + 1)
    return make_map(city, lanes)


def load_map(path) -> SceneMap:
    """Read a map file; raises MapFormatError / ValidationError."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map_lines(fh, path=path)


def map_to_lines(m: SceneMap) -> list[str]:
    """Serialize a map into schema lines (lanes sorted by id)."""
    out = [f"city {m.city}"]
    for lane_id in m.sorted_ids():
        lane = m.lanes[lane_id]
        out.append(f"lane {lane_id}")
        for x, y in lane.centerline.xy:
            out.append(f"pt {x:.9f} {y:.9f}")
        for p in sorted(lane.predecessors):
            out.append(f"pred {p}")
        for s in sorted(lane.successors):
            out.append(f"succ {s}")
    return out


def save_map(m: SceneMap, path) -> None:
    write_text_atomic(path, "\n".join(map_to_lines(m)) + "\n")


def write_text_atomic(path, text: str) -> None:
    """Write via temp file + rename; skip the replace when bytes match."""
    path = os.fspath(path)
    data = text.encode("utf-8")
    if os.path.exists(path):
        with open(path, "rb") as fh:
            if fh.read() == data:
                return
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


@dataclass(frozen=True)
class ReferencePath:
    """A drivable path resampled at uniform spacing.

    `cum_s` is the uniform sampling grid (exact multiples of `spacing`),
    which parameterizes planning; `samples` holds the matching points and
    `kappa` the signed curvature per sample.
    """

    samples: Polyline
    cum_s: np.ndarray
    kappa: np.ndarray
    spacing: float
    lane_ids: tuple[str, ...]

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    def curvature_at(self, s):
        return np.interp(s, self.cum_s, self.kappa)

    def xy_at(self, s) -> np.ndarray:
        """Map arc-length(s) to plane coordinates; raises on overrun."""
        s_arr = np.asarray(s, dtype=float)
        if (s_arr < -1e-9).any() or (s_arr > self.length + 1e-9).any():
            bad = s_arr[(s_arr < -1e-9) | (s_arr > self.length + 1e-9)]
            raise PathOverrunError(
                f"arc-length {float(np.atleast_1d(bad)[0]):.3f} outside "
                f"[0, {self.length:.3f}]"
            )
        x = np.interp(s_arr, self.cum_s, self.samples.xy[:, 0])
        y = np.interp(s_arr, self.cum_s, self.samples.xy[:, 1])
        return np.stack([x, y], axis=-1)

    def tangent_at_index(self, i: int) -> float:
        """Heading (radians) of the sample at index i."""
        xy = self.samples.xy
        j = min(i, xy.shape[0] - 2)
        dx, dy = xy[j + 1] - xy[j]
        return math.atan2(dy, dx)


def _concat_centerlines(polys: list[Polyline]) -> Polyline:
    pieces = [polys[0].xy]
    for poly in polys[1:]:
        xy = poly.xy
        if float(np.hypot(*(xy[0] - pieces[-1][-1]))) <= 1e-9:
            xy = xy[1:]
        pieces.append(xy)
    return Polyline(np.concatenate(pieces, axis=0))


def _path_from_polyline(poly: Polyline, lane_ids, spacing: float) -> ReferencePath:
    resampled = resample_polyline(poly, spacing)
    # drop a trailing partial segment so the grid is exactly uniform
    if resampled.n_points > 2:
        last_gap = resampled.cum_s[-1] - resampled.cum_s[-2]
        if last_gap < spacing - 1e-9:
            resampled = Polyline(resampled.xy[:-1])
    n = resampled.n_points
    cum_s = np.arange(n) * spacing
    cum_s.setflags(write=False)
    kappa = curvature_profile(resampled) if n >= 3 else np.zeros(n)
    kappa.setflags(write=False)
    return ReferencePath(resampled, cum_s, kappa, spacing, tuple(lane_ids))


def build_reference_path(
    m: SceneMap,
    seed_lane: str,
    min_length: float,
    rng: np.random.Generator,
    spacing: float = REFERENCE_SPACING,
) -> ReferencePath:
    """Walk successor edges from one lane until `min_length` is reached.

    The walk picks a uniformly random unvisited successor at each fork and
    stops when the graph is exhausted, so the result can be shorter than
    `min_length` on small maps.
    """
    if min_length <= 0:
        raise ValueError("min_length must be positive")
    lane = m.lanes[seed_lane]
    chain = [lane]
    visited = {seed_lane}
    total = lane.centerline.length
    while total < min_length:
        options = sorted(s for s in chain[-1].successors if s not in visited)
        if not options:
            break
        nxt = options[int(rng.integers(len(options)))]
        visited.add(nxt)
        lane = m.lanes[nxt]
        chain.append(lane)
        total += lane.centerline.length
    poly = _concat_centerlines([ln.centerline for ln in chain])
    return _path_from_polyline(poly, [ln.lane_id for ln in chain], spacing)


def build_reference_paths(
    m: SceneMap,
    min_length: float,
    rng: np.random.Generator,
    spacing: float = REFERENCE_SPACING,
) -> list[ReferencePath]:
    """One reference path per seed lane, in sorted lane-id order."""
    return [
        build_reference_path(m, lane_id, min_length, rng, spacing)
        for lane_id in m.sorted_ids()
    ]


def project_to_path(pos: Point2, path: ReferencePath) -> tuple[float, float]:
    """Arc-length and signed lateral offset of `pos` on the path.

    The returned s lives on the path's uniform grid parameterization
    (cum_s), with left-of-travel lateral positive.
    """
    s_chord, lateral, _ = project_to_polyline(pos, path.samples)
    # translate chord arc-length onto the uniform grid
    chord = path.samples.cum_s
    i = int(np.clip(np.searchsorted(chord, s_chord, side="right") - 1, 0, len(chord) - 2))
    frac = (s_chord - chord[i]) / (chord[i + 1] - chord[i])
    s = float(path.cum_s[i] + frac * (path.cum_s[i + 1] - path.cum_s[i]))
    return s, lateral


def crop_map(m: SceneMap, center: Point2, radius: float) -> SceneMap:
    """Keep lanes with any centerline point within `radius` of `center`,
    pruning connectivity references that leave the crop."""
    c = np.array([center.x, center.y])
    keep: dict[str, LaneSegment] = {}
    for lane_id, lane in m.lanes.items():
        d2 = ((lane.centerline.xy - c) ** 2).sum(axis=1)
        if (d2 <= radius * radius).any():
            keep[lane_id] = lane
    lanes = [
        LaneSegment(
            lane.lane_id,
            lane.centerline,
            tuple(p for p in lane.predecessors if p in keep),
            tuple(s for s in lane.successors if s in keep),
        )
        for lane in keep.values()
    ]
    return make_map(m.city, lanes)
