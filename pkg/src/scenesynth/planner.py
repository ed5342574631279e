"""Velocity planning along a reference path.

The search space is (arc-length, velocity, time) with a fixed acceleration
action set applied over a coarse time step. Transitions pay for actuation,
curvature-weighted speed, and deviation from the desired velocity; the
minimum-cost action sequence whose terminal node first passes the horizon
becomes the coarse trajectory.

States are expanded one time layer at a time and merged on exact
(arc-length, velocity) agreement, so the returned plan is the true optimum
over the reachable action graph. Merging uses keys rounded at 1e-9 purely
to absorb floating-point noise. When all transition costs are nonnegative
(the default absolute-curvature mode), states already costlier than a
greedy rollout bound are discarded early.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PathOverrunError, PlanningFailureError
from .geometry import Point2
from .maps import ReferencePath

ACTION_RANGE = (-2.0, 1.0)
DEFAULT_ACTION_SET = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0)


@dataclass(frozen=True)
class PlannerNode:
    """One search state: arc-length s (m), velocity v (m/s), time t (s)."""

    s: float
    v: float
    t: float


@dataclass(frozen=True)
class PlannerParams:
    action_set: tuple[float, ...] = DEFAULT_ACTION_SET
    dt: float = 0.5
    w1: float = 5.0
    w2: float = 5.0
    w3: float = 1.0
    v_d: float = 10.0
    t_g: float = 5.0
    abs_curvature: bool = True

    def __post_init__(self):
        if self.dt <= 0 or self.t_g <= 0:
            raise ValueError("dt and t_g must be positive")
        if not self.action_set:
            raise ValueError("action set must not be empty")
        for a in self.action_set:
            if not ACTION_RANGE[0] <= a <= ACTION_RANGE[1]:
                raise ValueError(f"action {a} outside {ACTION_RANGE}")
        if min(self.w1, self.w2, self.w3) < 0:
            raise ValueError("cost weights must be nonnegative")


@dataclass(frozen=True)
class CoarsePlan:
    """Planned nodes plus the actions that connect them.

    nodes[i+1] is exactly expand(nodes[i], actions[i], dt), and total_cost
    is the plain sum of the per-transition costs.
    """

    nodes: tuple[PlannerNode, ...]
    actions: tuple[float, ...]
    total_cost: float

    @property
    def dt(self) -> float:
        return self.nodes[1].t - self.nodes[0].t

    def s_values(self) -> np.ndarray:
        return np.array([n.s for n in self.nodes])

    def times(self) -> np.ndarray:
        return np.array([n.t for n in self.nodes])


def expand(n: PlannerNode, a: float, dt: float) -> PlannerNode:
    """Constant-acceleration transition over one coarse step.

    Returns the raw kinematic result; negative velocities are rejected by
    the search, not here.
    """
    return PlannerNode(
        n.s + n.v * dt + 0.5 * a * dt * dt,
        n.v + a * dt,
        n.t + dt,
    )


def transition_cost(
    n_next: PlannerNode, a: float, path: ReferencePath, p: PlannerParams
) -> float:
    """Cost of arriving at n_next using acceleration a."""
    if n_next.s < -1e-9 or n_next.s > path.length + 1e-9:
        raise PathOverrunError(
            f"s={n_next.s:.3f} outside path [0, {path.length:.3f}]"
        )
    kap = np.interp(n_next.s, path.cum_s, path.kappa)
    if p.abs_curvature:
        kap = np.abs(kap)
    return float(
        p.w1 * a * a
        + p.w2 * kap * n_next.v * n_next.v
        + p.w3 * (n_next.v - p.v_d) * (n_next.v - p.v_d)
    )


def _n_steps(init_t: float, p: PlannerParams) -> int:
    """Number of transitions until time first exceeds the horizon."""
    if p.t_g <= init_t:
        raise ValueError(f"horizon t_g={p.t_g} does not exceed init time {init_t}")
    return int(math.floor((p.t_g - init_t) / p.dt + 1e-9)) + 1


def _greedy_upper_bound(init: PlannerNode, path, p, actions, n_steps) -> float:
    """Cost of a feasible rollout picking the cheapest action each step."""
    s, v, g = init.s, init.v, 0.0
    length = path.length
    for _ in range(n_steps):
        s2 = s + v * p.dt + 0.5 * actions * p.dt * p.dt
        v2 = v + actions * p.dt
        feas = (v2 >= 0.0) & (s2 <= length)
        if not feas.any():
            return math.inf
        kap = np.interp(s2, path.cum_s, path.kappa)
        if p.abs_curvature:
            kap = np.abs(kap)
        cost = (
            p.w1 * actions * actions
            + p.w2 * kap * v2 * v2
            + p.w3 * (v2 - p.v_d) * (v2 - p.v_d)
        )
        cost[~feas] = math.inf
        j = int(np.argmin(cost))
        g += float(cost[j])
        s, v = float(s2[j]), float(v2[j])
    return g


def astar_plan(path: ReferencePath, init: PlannerNode, p: PlannerParams) -> CoarsePlan:
    """Minimum-cost action sequence whose last node first passes t_g.

    Expansions with negative velocity are pruned; expansions past the end
    of the path are pruned and, if they starve the search, reported as a
    path overrun. Ties on terminal cost break toward lower velocity, then
    lower arc-length.
    """
    if init.v < 0:
        raise ValueError(f"initial velocity must be nonnegative, got {init.v}")
    if init.t < 0:
        raise ValueError(f"initial time must be nonnegative, got {init.t}")
    length = path.length
    if init.s < 0 or init.s > length:
        raise PathOverrunError(f"initial s={init.s:.3f} outside [0, {length:.3f}]")
    actions = np.asarray(p.action_set, dtype=float)
    n_actions = len(actions)
    n_steps = _n_steps(init.t, p)

    ub = math.inf
    if p.abs_curvature:
        ub = _greedy_upper_bound(init, path, p, actions, n_steps)

    S = np.array([init.s])
    V = np.array([init.v])
    G = np.array([0.0])
    trail: list[tuple[np.ndarray, np.ndarray]] = []  # (parent index, action index)
    overrun_pruned = False

    for _ in range(n_steps):
        n_states = len(S)
        S2 = (S[:, None] + V[:, None] * p.dt + 0.5 * actions[None, :] * p.dt * p.dt).ravel()
        V2 = (V[:, None] + actions[None, :] * p.dt).ravel()
        par = np.repeat(np.arange(n_states), n_actions)
        act = np.tile(np.arange(n_actions), n_states)

        over = S2 > length
        feas = (V2 >= 0.0) & ~over
        if over.any():
            overrun_pruned = True
        kap = np.interp(S2, path.cum_s, path.kappa)
        if p.abs_curvature:
            kap = np.abs(kap)
        a_col = actions[act]
        G2 = G[par] + (
            p.w1 * a_col * a_col
            + p.w2 * kap * V2 * V2
            + p.w3 * (V2 - p.v_d) * (V2 - p.v_d)
        )
        if math.isfinite(ub):
            feas &= G2 <= ub + 1e-9
        if not feas.any():
            if overrun_pruned:
                raise PathOverrunError(
                    f"path of {length:.1f} m too short for the horizon"
                )
            raise PlanningFailureError("all expansions pruned before the horizon")
        S2, V2, G2, par, act = S2[feas], V2[feas], G2[feas], par[feas], act[feas]

        key_s = np.round(S2, 9)
        key_v = np.round(V2, 9)
        order = np.lexsort((act, par, G2, key_v, key_s))
        key_s, key_v = key_s[order], key_v[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = (key_s[1:] != key_s[:-1]) | (key_v[1:] != key_v[:-1])
        sel = order[first]
        S, V, G = S2[sel], V2[sel], G2[sel]
        trail.append((par[sel], act[sel]))

    best = int(np.lexsort((S, V, G))[0])
    action_idx: list[int] = []
    idx = best
    for parents, acts in reversed(trail):
        action_idx.append(int(acts[idx]))
        idx = int(parents[idx])
    action_idx.reverse()

    nodes = [init]
    picked: list[float] = []
    costs: list[float] = []
    for ai in action_idx:
        a = float(actions[ai])
        nxt = expand(nodes[-1], a, p.dt)
        costs.append(transition_cost(nxt, a, path, p))
        nodes.append(nxt)
        picked.append(a)
    return CoarsePlan(tuple(nodes), tuple(picked), sum(costs))


def plan_to_global(plan: CoarsePlan, path: ReferencePath) -> list[tuple[float, Point2]]:
    """Interpolate plan arc-lengths onto the path polyline."""
    s = plan.s_values()
    xy = path.xy_at(s)
    return [
        (node.t, Point2(float(x), float(y)))
        for node, (x, y) in zip(plan.nodes, xy)
    ]


def sample_speed_targets(
    rng: np.random.Generator, v_d_range: tuple[float, float]
) -> tuple[float, float]:
    """Draw a desired velocity and a consistent initial velocity."""
    v_d = float(rng.uniform(*v_d_range))
    v0 = max(0.0, float(rng.uniform(0.8 * v_d, 1.2 * v_d)))
    return v_d, v0
