"""Synthetic lane-graph fixtures for tests, demos, and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .geometry import Polyline
from .maps import LaneSegment, SceneMap, make_map

POINT_STEP = 2.0


def _straight(x0, y0, heading, length, step=POINT_STEP):
    n = int(round(length / step))
    s = np.arange(n + 1) * step
    return np.column_stack(
        [x0 + s * math.cos(heading), y0 + s * math.sin(heading)]
    )


def _arc(x0, y0, heading, radius, arc_len, step=POINT_STEP):
    """Constant-curvature arc; positive radius bends left."""
    n = int(round(arc_len / step))
    s = np.arange(n + 1) * step
    ang = heading + s / radius
    cx = x0 - radius * math.sin(heading)
    cy = y0 + radius * math.cos(heading)
    return np.column_stack([cx + radius * np.sin(ang), cy - radius * np.cos(ang)])


def _chain_lanes(prefix, pts, n_segments):
    """Split one road polyline into linked lane segments sharing endpoints."""
    cuts = np.linspace(0, len(pts) - 1, n_segments + 1).round().astype(int)
    lanes = []
    for k in range(n_segments):
        lane_id = f"{prefix}{k}"
        succ = (f"{prefix}{k + 1}",) if k + 1 < n_segments else ()
        pred = (f"{prefix}{k - 1}",) if k > 0 else ()
        lanes.append(
            LaneSegment(lane_id, Polyline(pts[cuts[k] : cuts[k + 1] + 1]), pred, succ)
        )
    return lanes


def _link(lanes, src_id, dst_id):
    """Add a successor/predecessor edge between two lanes in place."""
    out = []
    for lane in lanes:
        if lane.lane_id == src_id:
            lane = LaneSegment(
                lane.lane_id,
                lane.centerline,
                lane.predecessors,
                tuple(sorted(set(lane.successors) | {dst_id})),
            )
        if lane.lane_id == dst_id:
            lane = LaneSegment(
                lane.lane_id,
                lane.centerline,
                tuple(sorted(set(lane.predecessors) | {src_id})),
                lane.successors,
            )
        out.append(lane)
    return out


def generate_map_fixture(name: str = "corridors", city: str = "MIA") -> SceneMap:
    """Deterministic maps used across the test suite and demo scripts.

    Available fixtures:
      straight_pair  two chained 100 m straight lanes
      chain3         three chained 40 m lanes
      fork           one lane forking into a straight and a left arc
      corridors      generation-scale map: three 320 m straight corridors,
                     one gentle-arc corridor, and an exit ramp fork
    """
    if name == "straight_pair":
        lanes = [
            LaneSegment("L1", Polyline(_straight(0, 0, 0.0, 100, 5.0)), (), ("L2",)),
            LaneSegment("L2", Polyline(_straight(100, 0, 0.0, 100, 5.0)), ("L1",), ()),
        ]
        return make_map(city, lanes)
    if name == "chain3":
        lanes = []
        for k in range(3):
            pred = (f"L{k}",) if k > 0 else ()
            succ = (f"L{k + 2}",) if k < 2 else ()
            lanes.append(
                LaneSegment(
                    f"L{k + 1}",
                    Polyline(_straight(40.0 * k, 0, 0.0, 40, 5.0)),
                    pred,
                    succ,
                )
            )
        return make_map(city, lanes)
    if name == "fork":
        trunk = _straight(0, 0, 0.0, 50, 2.0)
        main = _straight(50, 0, 0.0, 100, 2.0)
        ramp = _arc(50, 0, 0.0, 150.0, 100, 2.0)
        lanes = [
            LaneSegment("L1", Polyline(trunk), (), ("L2", "L3")),
            LaneSegment("L2", Polyline(main), ("L1",), ()),
            LaneSegment("L3", Polyline(ramp), ("L1",), ()),
        ]
        return make_map(city, lanes)
    if name == "corridors":
        lanes = []
        for row, y in enumerate((0.0, 60.0, 120.0)):
            pts = _straight(-160.0, y, 0.0, 320.0)
            lanes.extend(_chain_lanes(f"H{row}_", pts, 2))
        # gentle arc kept within crop range (100 m) of the straight roads
        arc_pts = _arc(-160.0, 175.0, 0.0, 1500.0, 320.0)
        lanes.extend(_chain_lanes("A0_", arc_pts, 2))
        ramp_pts = _arc(0.0, 0.0, 0.0, 220.0, 150.0)
        lanes.append(LaneSegment("R0_0", Polyline(ramp_pts), (), ()))
        lanes = _link(lanes, "H0_0", "R0_0")
        return make_map(city, lanes)
    raise ValueError(f"unknown fixture {name!r}")
