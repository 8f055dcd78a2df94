"""Hierarchical power control: limit allocation and priority turn-off.

A tree of controllers supervises contiguous clusters of gateways. Interior
nodes split their power budget across children by minimizing the squared
gap to the children's reported consumptions under a sum constraint;
bottom-layer decisions shed the lowest-ranked low-priority appliances until
the cluster fits its budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .loads import LOW_PRIORITY

DEFAULT_REPORT_AGE_CAP = 10


def allocate_limits(parent_limit_w: float, demands: Sequence[float]) -> np.ndarray:
    """Split parent_limit_w across children, tracking their demands.

    Minimizes sum_i (s_i - c_i)^2 subject to sum(s) == parent_limit_w and
    s_i >= 0. The unconstrained optimum shifts every demand by the same
    slack/deficit share; negative entries are clamped to zero and the
    remainder redistributed over the survivors until none go negative.
    """
    c = np.asarray(demands, dtype=float)
    if c.size == 0:
        raise ValueError("cannot allocate to zero children")
    if parent_limit_w < 0:
        raise ValueError(f"parent limit must be non-negative, got {parent_limit_w}")
    if np.any(c < 0):
        raise ValueError("demands must be non-negative")
    limits = np.zeros_like(c)
    active = np.ones(c.size, dtype=bool)
    while True:
        n_active = int(active.sum())
        shift = (parent_limit_w - c[active].sum()) / n_active
        trial = c[active] + shift
        if trial.min() >= 0.0:
            limits[active] = trial
            return limits
        keep = trial >= 0.0
        idx = np.flatnonzero(active)
        active[idx[~keep]] = False
        if not active.any():
            # Only reachable when parent_limit_w == 0 with all-equal demands.
            return limits


@dataclass(frozen=True)
class TurnoffDecision:
    """Shedding order for one cluster or house.

    `commands` holds one set-point per input appliance (0.0 for shed or
    already-off appliances, the current draw otherwise); `shed` lists the
    indices actually turned off, exactly the n_off lowest-ranked low-priority
    appliances that were on.
    """

    n_off: int
    commands: tuple[float, ...]
    shed: tuple[int, ...]
    residual_overload_w: float


def select_turnoff(
    limit_w: float, appliances: Sequence[tuple[float, bool, str]]
) -> TurnoffDecision:
    """Smallest shed count that brings consumption within limit_w.

    `appliances` is (rated_w, on, priority_class) sorted ascending by
    priority rank. Only low-class appliances are eligible; if shedding all
    of them still violates the limit, all are shed and the excess is
    reported as residual overload. High-class appliances are never touched,
    including at limit 0.
    """
    consumption = sum(p for p, on, _cls in appliances if on)
    commands = [p if on else 0.0 for p, on, _cls in appliances]
    shed: list[int] = []
    for i, (p, on, cls) in enumerate(appliances):
        if consumption <= limit_w:
            break
        if cls == LOW_PRIORITY and on:
            commands[i] = 0.0
            consumption -= p
            shed.append(i)
    return TurnoffDecision(
        n_off=len(shed),
        commands=tuple(commands),
        shed=tuple(shed),
        residual_overload_w=max(0.0, consumption - limit_w),
    )


def aggregate_report(child_reports: Sequence[float]) -> float:
    """Sum of child reports; the caller substitutes last-known values for
    children whose packets were lost."""
    return math.fsum(child_reports)


@dataclass
class ControllerNode:
    node_id: tuple[int, int]  # (layer number, index within layer), layer 1 = top
    layer: int
    limit_w: float = 0.0
    reported_w: float = 0.0
    # member/child index -> (last value in watts, age in control periods)
    child_reports: dict[int, tuple[float, int]] = field(default_factory=dict)


class ControlTree:
    """Layered controller tree over contiguous gateway clusters.

    Layer 1 is the single top controller, layer L the bottom layer with one
    node per cluster. Interior nodes have at most `degree` children; each
    bottom node supervises at most `cluster_size` gateways, assigned
    contiguously by house index.
    """

    def __init__(self, n_houses: int, n_clusters: int, degree: int):
        if n_houses < 1 or n_clusters < 1:
            raise ValueError("n_houses and n_clusters must be at least 1")
        if n_clusters > n_houses:
            raise ValueError("more clusters than houses")
        if n_clusters > 1 and degree < 2:
            raise ValueError("degree must be >= 2 for a multi-cluster tree")
        if (n_clusters - 1) * -(-n_houses // n_clusters) >= n_houses:
            raise ValueError(
                f"{n_clusters} contiguous clusters of ceil({n_houses}/{n_clusters}) "
                "houses would leave an empty cluster"
            )
        self.n_houses = n_houses
        self.n_clusters = n_clusters
        self.degree = degree
        self.cluster_size = -(-n_houses // n_clusters)  # ceil
        counts = [n_clusters]
        while counts[-1] > 1:
            counts.append(-(-counts[-1] // degree))
        counts.reverse()  # top-down
        self.layer_counts = counts
        self.n_layers = len(counts)
        self.layers: list[list[ControllerNode]] = [
            [ControllerNode((l + 1, j), l + 1) for j in range(n)]
            for l, n in enumerate(counts)
        ]

    @property
    def root(self) -> ControllerNode:
        return self.layers[0][0]

    @property
    def bottom(self) -> list[ControllerNode]:
        return self.layers[-1]

    def children_of(self, layer_idx: int, j: int) -> range:
        """Child indices (in layer layer_idx+1) of node j at layer_idx (0-based)."""
        below = self.layer_counts[layer_idx + 1]
        return range(j * self.degree, min((j + 1) * self.degree, below))

    def cluster_house_range(self, i: int) -> tuple[int, int]:
        start = i * self.cluster_size
        return start, min(start + self.cluster_size, self.n_houses)

    def init_limits(self, supply_w: float) -> None:
        """Equal split of the supply across bottom clusters; interior nodes
        carry the sum of their descendants' shares."""
        if supply_w < 0:
            raise ValueError("supply must be non-negative")
        share = supply_w / self.n_clusters
        for node in self.bottom:
            node.limit_w = share
        for l in range(self.n_layers - 2, -1, -1):
            for j, node in enumerate(self.layers[l]):
                node.limit_w = sum(
                    self.layers[l + 1][k].limit_w for k in self.children_of(l, j)
                )
        self.root.limit_w = supply_w

    def propagate_up(self) -> None:
        """Interior reported consumption = sum of children's last reports."""
        for l in range(self.n_layers - 2, -1, -1):
            for j, node in enumerate(self.layers[l]):
                node.reported_w = aggregate_report(
                    [self.layers[l + 1][k].reported_w for k in self.children_of(l, j)]
                )

    def allocate_down(self) -> None:
        """Reassign limits top-down from each node's budget and its
        children's reported consumptions."""
        for l in range(self.n_layers - 1):
            for j, node in enumerate(self.layers[l]):
                kids = list(self.children_of(l, j))
                if not kids:
                    continue
                limits = allocate_limits(
                    node.limit_w, [self.layers[l + 1][k].reported_w for k in kids]
                )
                for k, lim in zip(kids, limits):
                    self.layers[l + 1][k].limit_w = float(lim)


def build_tree(n_houses: int, n_clusters: int, degree: int | None = None) -> ControlTree:
    """Tree over n_houses gateways grouped into n_clusters contiguous clusters.

    With the default degree every interior layer collapses into a single
    top controller (two layers total, like the reference 4-cluster layout).
    """
    if degree is None:
        degree = max(2, n_clusters)
    return ControlTree(n_houses, n_clusters, degree)


def stale_value(
    report: tuple[float, int] | None,
    assigned_limit_w: float,
    age_cap: int = DEFAULT_REPORT_AGE_CAP,
) -> float:
    """Value a controller uses for a child: last report while fresh enough,
    else the child's assigned limit (conservative under long outages)."""
    if report is None:
        return assigned_limit_w
    value, age = report
    if age > age_cap:
        return assigned_limit_w
    return value


def control_round(
    tree: ControlTree,
    bottom_members: Sequence[Sequence[tuple[float, bool, str]]],
    mode: str = "batch",
    prior: Sequence[TurnoffDecision] | None = None,
) -> list[TurnoffDecision]:
    """One synchronous control update with ideal communication.

    `bottom_members` holds, per bottom node, the rank-ascending
    (rated_w, wants_on, class) tuples of its members; `prior` carries the
    previous round's decisions so reports reflect post-shed consumption.
    Batch and iterative modes coincide here because a one-shot round has no
    intra-period report arrivals; the engine realizes the slot-level
    difference. Returns one decision per bottom node and leaves the
    reallocated limits on the tree.
    """
    if mode not in ("batch", "iterative"):
        raise ValueError(f"unknown control mode {mode!r}")
    if len(bottom_members) != len(tree.bottom):
        raise ValueError("one member list per bottom node required")
    for i, (node, members) in enumerate(zip(tree.bottom, bottom_members)):
        consumed = sum(p for p, on, _c in members if on)
        if prior is not None:
            consumed -= sum(members[k][0] for k in prior[i].shed if members[k][1])
        node.reported_w = consumed
    tree.propagate_up()
    tree.allocate_down()
    return [
        select_turnoff(node.limit_w, members)
        for node, members in zip(tree.bottom, bottom_members)
    ]
