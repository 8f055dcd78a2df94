"""Round-Robin guaranteed-time-slot frames and control-period timing.

Every member (gateway or appliance) owns one downlink+uplink slot pair per
period; the downlink slot comes first in the pair, so a command lands just
before the meter report that reflects it. Clusters of the distributed
topology run the same frame concurrently on orthogonal channels, with
member m of cluster c occupying pair (m - c) mod n_cs (staggered so pair 0
carries member 0 of cluster 0, member 1 of cluster 1, ...). Relayed
topologies spend two slots per transmission, doubling the period.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

CENTRALIZED = "centralized"
CENTRALIZED_2HOP = "centralized_2hop"
DISTRIBUTED = "distributed"
TOPOLOGIES = (CENTRALIZED, CENTRALIZED_2HOP, DISTRIBUTED)

DEFAULT_SLOT_S = 960 / 50_000.0  # 19.2 ms

UPLINK = "uplink"
DOWNLINK = "downlink"
BACKBONE_UP = "backbone_up"
BACKBONE_DOWN = "backbone_down"


@dataclass(frozen=True)
class SlotUse:
    slot: int
    cluster: int
    member: int  # -1 for backbone markers
    direction: str
    hop: int = 1


@dataclass
class Frame:
    topology: str
    slot_duration_s: float
    slots_per_period: int
    n_clusters: int
    members_per_cluster: list[int]
    pair_slots: int  # slots consumed per direction (2 for relayed)
    assignments: list[SlotUse] = field(default_factory=list)

    @property
    def period_s(self) -> float:
        return self.slots_per_period * self.slot_duration_s

    def member_slots(self, cluster: int, member: int) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {UPLINK: [], DOWNLINK: []}
        for a in self.assignments:
            if a.cluster == cluster and a.member == member and a.direction in out:
                out[a.direction].append(a.slot)
        return out

    def write_csv(self, path: str | Path) -> None:
        """Timing-chart dump: one row per (slot, cluster, member, direction)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot", "cluster", "member", "direction", "hop"])
            for a in sorted(self.assignments, key=lambda a: (a.slot, a.cluster, a.direction)):
                w.writerow([a.slot, a.cluster, a.member, a.direction, a.hop])


def _split_members(n: int, n_cs: int) -> list[int]:
    n_clusters = -(-n // n_cs)
    sizes = [n_cs] * n_clusters
    sizes[-1] = n - n_cs * (n_clusters - 1)
    assert sizes[-1] >= 1
    return sizes


def build_frame(
    topology: str,
    n: int,
    n_cs: int | None = None,
    slot_duration_s: float = DEFAULT_SLOT_S,
) -> Frame:
    """Frame for n members; n_cs is the cluster size (distributed only).

    Period lengths: 2*n slots centralized, 4*n slots with a 2-hop relay
    (uniform two slots per transmission for every member), 2*n_cs slots
    distributed with all clusters in parallel.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    if n < 1:
        raise ValueError(f"need at least one member, got {n}")
    if topology == DISTRIBUTED:
        if n_cs is None or n_cs < 1:
            raise ValueError("distributed frames need a positive cluster size")
        members = _split_members(n, n_cs)
        pairs = n_cs
        hop_slots = 1
    else:
        members = [n]
        pairs = n
        hop_slots = 2 if topology == CENTRALIZED_2HOP else 1
    width = 2 * hop_slots  # slots per member pair
    frame = Frame(
        topology=topology,
        slot_duration_s=slot_duration_s,
        slots_per_period=pairs * width,
        n_clusters=len(members),
        members_per_cluster=members,
        pair_slots=hop_slots,
    )
    for c, n_members in enumerate(members):
        for m in range(n_members):
            pair = (m - c) % pairs
            base = pair * width
            for h in range(hop_slots):
                frame.assignments.append(SlotUse(base + h, c, m, DOWNLINK, h + 1))
            for h in range(hop_slots):
                frame.assignments.append(SlotUse(base + hop_slots + h, c, m, UPLINK, h + 1))
        # Chart-only markers: cluster-to-parent exchange right after the
        # uplink sweep, parent-to-cluster response at the period start.
        frame.assignments.append(
            SlotUse(frame.slots_per_period - 1, c, -1, BACKBONE_UP)
        )
        frame.assignments.append(SlotUse(0, c, -1, BACKBONE_DOWN))
    return frame


def validate_frame(frame: Frame) -> None:
    """Slot exclusivity per channel plus one UL and one DL pair per member."""
    seen: set[tuple[int, int]] = set()
    for a in frame.assignments:
        if a.direction not in (UPLINK, DOWNLINK):
            continue
        key = (a.cluster, a.slot)
        if key in seen:
            raise ValueError(f"slot {a.slot} double-booked on channel {a.cluster}")
        seen.add(key)
    for c, n_members in enumerate(frame.members_per_cluster):
        for m in range(n_members):
            slots = frame.member_slots(c, m)
            if len(slots[UPLINK]) != frame.pair_slots or len(slots[DOWNLINK]) != frame.pair_slots:
                raise ValueError(f"member ({c}, {m}) lacks its slot pair")
