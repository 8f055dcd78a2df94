"""Slot-accurate simulation of the demand-response control loop.

One tick is one TDMA slot. Appliance switching events are quantized to
ticks and played from a bucket queue; uplink reports and downlink commands
cross the wireless links with per-slot success draws; controllers aggregate
and reallocate at period boundaries over an ideal backbone. A lost uplink
leaves the controller on the stale report; a lost downlink leaves the
gateway on its previous shed set.
"""

from __future__ import annotations

import math

import numpy as np

from .config import APPLIANCE_PLANE, GATEWAY_PLANE, ITERATIVE, ScenarioConfig
from .control import allocate_limits, build_tree, select_turnoff
from .loads import LOW_PRIORITY, SwitchProcess
from .metrics import MetricsLog
from .radio import simulate_throughput_bps, success_probability
from .tdma import CENTRALIZED_2HOP, DISTRIBUTED, DOWNLINK, UPLINK, build_frame


def place_houses(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n_houses
    if cfg.placement == "grid":
        side = math.ceil(math.sqrt(n))
        spacing = cfg.area_side_m / side
        idx = np.arange(n)
        return np.column_stack(
            ((idx % side + 0.5) * spacing, (idx // side + 0.5) * spacing)
        )
    return rng.random((n, 2)) * cfg.area_side_m


def cluster_order(pos: np.ndarray, n_clusters: int, cluster_size: int) -> np.ndarray:
    """Permutation making contiguous index blocks spatially compact.

    Houses are banded by y with one band per controller row, then sorted by
    x inside each band, so cluster i's block [i*N_cs, (i+1)*N_cs) is a tile.
    """
    n = pos.shape[0]
    if n_clusters == 1:
        return np.arange(n)
    rows = max(1, round(math.sqrt(n_clusters)))
    base, extra = divmod(n_clusters, rows)
    row_clusters = [base + 1] * extra + [base] * (rows - extra)
    by_y = np.argsort(pos[:, 1], kind="stable")
    chunks = []
    start = 0
    for rc in row_clusters:
        count = min(rc * cluster_size, n - start)
        band = by_y[start : start + count]
        chunks.append(band[np.argsort(pos[band, 0], kind="stable")])
        start += count
    return np.concatenate(chunks)


class Simulation:
    """Engine state for one scenario run. Use `run(cfg)` unless you need to
    poke at internals (tests do)."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        radio = cfg.radio
        self.t_slot = radio.slot_duration_s
        self.supply_w = cfg.resolved_supply_w()
        self.n_ticks = int(round(cfg.duration_s / self.t_slot))

        seq = np.random.SeedSequence(cfg.seed)
        s_load, s_place, s_shadow, s_link = seq.spawn(4)
        self.load_rng = np.random.default_rng(s_load)
        place_rng = np.random.default_rng(s_place)
        shadow_rng = np.random.default_rng(s_shadow)
        self.link_rng = np.random.default_rng(s_link)

        # --- catalog and load arrays -----------------------------------
        catalog = cfg.resolved_catalog()
        self.catalog = catalog
        n, K = cfg.n_houses, len(catalog)
        self.n_houses, self.n_appl = n, K
        self.rated = np.array([a.rated_power_w for a in catalog])
        self.cls = [a.priority_class for a in catalog]
        self.rank_order = sorted(range(K), key=lambda k: catalog[k].priority_rank)
        self.rated_by_rank = [self.rated[k] for k in self.rank_order]
        self.cls_by_rank = [self.cls[k] for k in self.rank_order]
        duties = np.array([a.duty_target for a in catalog])
        self.mean_on_s = np.array(
            [SwitchProcess.from_duty(d, cfg.mean_cycle_s).mean_holding_s(True) for d in duties]
        )
        self.mean_off_s = np.array(
            [SwitchProcess.from_duty(d, cfg.mean_cycle_s).mean_holding_s(False) for d in duties]
        )

        self.on = self.load_rng.random((n, K)) < duties
        self.forced = np.zeros((n, K), dtype=bool)
        self.demand_house = self.on @ self.rated
        self.consumed_house = self.demand_house.copy()
        self.total_demand = float(self.demand_house.sum())
        self.total_consumed = float(self.consumed_house.sum())

        self.buckets: dict[int, list[tuple[int, int]]] = {}
        self._seed_switch_events()

        # --- geometry, tree, links --------------------------------------
        pos = place_houses(cfg, place_rng)
        tree = build_tree(n, cfg.n_clusters, cfg.degree)
        self.tree = tree
        order = cluster_order(pos, cfg.n_clusters, tree.cluster_size)
        self.pos = pos[order]
        tree.init_limits(self.supply_w)
        self.n_clusters = cfg.n_clusters
        self.cluster_start = [tree.cluster_house_range(c)[0] for c in range(cfg.n_clusters)]
        self.ctrl_pos = [
            self.pos[slice(*tree.cluster_house_range(c))].mean(axis=0)
            for c in range(cfg.n_clusters)
        ]

        self._build_members()
        self._build_frame_tables()
        self._build_links(shadow_rng)

        # --- controller-side member state -------------------------------
        self.age_cap = cfg.report_age_cap
        self.backbone_ticks = int(math.ceil(cfg.backbone_latency_s / self.t_slot))
        big_neg = -(10**9)
        self.last_report = [np.zeros(m) for m in self.members_per_cluster]
        self.last_heard = [np.full(m, big_neg, dtype=np.int64) for m in self.members_per_cluster]
        self.last_sample_tick = [
            np.full(m, -1, dtype=np.int64) for m in self.members_per_cluster
        ]
        init_shares = [
            np.full(m, tree.bottom[c].limit_w / m)
            for c, m in enumerate(self.members_per_cluster)
        ]
        if cfg.member_plane == APPLIANCE_PLANE:
            init_shares = [self.member_rated[c].astype(float).copy() for c in range(cfg.n_clusters)]
        self.assigned_limit = init_shares
        self.pending_limit = [a.copy() for a in self.assigned_limit]
        self.pending_off = [np.zeros(m, dtype=bool) for m in self.members_per_cluster]
        self.pending_ref = [np.full(m, -1, dtype=np.int64) for m in self.members_per_cluster]
        self.dispatch_tick = [0] * cfg.n_clusters
        self.ul_draw = [np.ones(m, dtype=bool) for m in self.members_per_cluster]
        self.dl_draw = [np.ones(m, dtype=bool) for m in self.members_per_cluster]

        # --- metrics -----------------------------------------------------
        self.sample_every = cfg.resolved_sample_every()
        n_boundaries = (self.n_ticks - 1) // self.frame_slots + 1
        max_w = int(math.ceil(float(self.rated.sum()))) + 1
        self.log = MetricsLog(
            t_slot_s=self.t_slot,
            frame_slots=self.frame_slots,
            n_ticks=self.n_ticks,
            n_periods=n_boundaries,
            n_houses=n,
            supply_limit_w=self.supply_w,
            power_counts=np.zeros(max_w + 1, dtype=np.int64),
            delay_sum_ticks=np.zeros(n, dtype=np.int64),
            delay_samples=np.zeros(n, dtype=np.int64),
            root_reported_w=np.zeros(n_boundaries),
        )
        self._trace_ticks: list[int] = []
        self._trace_demand: list[float] = []
        self._trace_consumed: list[float] = []
        self._last_flush = 0
        self.n_off_applied = np.zeros(cfg.n_clusters, dtype=np.int64)
        self.residual_applied = np.zeros(cfg.n_clusters)

    # ------------------------------------------------------------ setup

    def _seed_switch_events(self) -> None:
        n, K = self.n_houses, self.n_appl
        mean = np.where(self.on, self.mean_on_s, self.mean_off_s)
        draw = self.load_rng.exponential(1.0, (n, K))
        hold = np.where(np.isinf(mean), np.inf, draw * mean)
        finite = np.isfinite(hold)
        ticks = np.maximum(1, np.rint(hold[finite] / self.t_slot)).astype(np.int64)
        for (h, k), t in zip(np.argwhere(finite), ticks):
            if t < self.n_ticks:
                self.buckets.setdefault(int(t), []).append((int(h), int(k)))

    def _build_members(self) -> None:
        """Member (c, m) maps to a house (gateway plane) or to a specific
        appliance, rank-ascending within the cluster (appliance plane)."""
        cfg = self.cfg
        tree = self.tree
        self.member_house: list[np.ndarray] = []
        self.member_appl: list[np.ndarray] = []
        self.member_rated: list[np.ndarray] = []
        self.member_cls: list[list[str]] = []
        for c in range(cfg.n_clusters):
            lo, hi = tree.cluster_house_range(c)
            houses = np.arange(lo, hi)
            if cfg.member_plane == GATEWAY_PLANE:
                self.member_house.append(houses)
                self.member_appl.append(np.full(houses.size, -1))
                self.member_rated.append(np.zeros(houses.size))
                self.member_cls.append([])
            else:
                pairs = [(k, h) for k in self.rank_order for h in houses]
                self.member_house.append(np.array([h for _k, h in pairs]))
                self.member_appl.append(np.array([k for k, _h in pairs]))
                self.member_rated.append(np.array([self.rated[k] for k, _h in pairs]))
                self.member_cls.append([self.cls[k] for k, _h in pairs])
        self.members_per_cluster = [arr.size for arr in self.member_house]

    def _build_frame_tables(self) -> None:
        cfg = self.cfg
        n_members, n_cs_members = cfg.frame_size()
        self.frame = build_frame(
            cfg.topology,
            n_members,
            n_cs_members if cfg.topology == DISTRIBUTED else None,
            slot_duration_s=self.t_slot,
        )
        self.frame_slots = self.frame.slots_per_period
        self.hop_slots = self.frame.pair_slots
        self.dl_at: list[list[tuple[int, int]]] = [[] for _ in range(self.frame_slots)]
        self.ul_at: list[list[tuple[int, int]]] = [[] for _ in range(self.frame_slots)]
        finals: dict[tuple[int, int, str], int] = {}
        for a in self.frame.assignments:
            if a.direction in (UPLINK, DOWNLINK) and a.member >= 0:
                key = (a.cluster, a.member, a.direction)
                finals[key] = max(finals.get(key, -1), a.slot)
        for (c, m, direction), slot in sorted(finals.items(), key=lambda kv: kv[1]):
            (self.ul_at if direction == UPLINK else self.dl_at)[slot].append((c, m))

    def _build_links(self, shadow_rng: np.random.Generator) -> None:
        """Static per-member success probability per logical transmission.

        Shadowing is frozen per link; the remaining per-slot fading makes
        each slot an independent Bernoulli draw with this probability.
        Uplink and downlink share the link statistics; a relayed hop pair
        multiplies its two hop probabilities.
        """
        cfg = self.cfg
        radio = cfg.radio
        two_hop = cfg.topology == CENTRALIZED_2HOP
        self.p_link: list[np.ndarray] = []
        for c in range(self.n_clusters):
            houses = self.member_house[c]
            d = np.hypot(*(self.pos[houses] - self.ctrl_pos[c]).T)
            d = np.maximum(d, 1.0)  # controller never sits inside a meter
            if cfg.ideal_links:
                self.p_link.append(np.ones(houses.size))
                continue
            if two_hop:
                shadow = shadow_rng.normal(0.0, radio.shadowing_sigma_db, (houses.size, 2))
                p = np.array(
                    [
                        success_probability(dist / 2.0, radio, s1)
                        * success_probability(dist / 2.0, radio, s2)
                        for dist, (s1, s2) in zip(d, shadow)
                    ]
                )
            else:
                shadow = shadow_rng.normal(0.0, radio.shadowing_sigma_db, houses.size)
                p = np.array(
                    [success_probability(dist, radio, s) for dist, s in zip(d, shadow)]
                )
            self.p_link.append(p)

    # ------------------------------------------------------------- run

    def run(self) -> MetricsLog:
        frame_slots = self.frame_slots
        sample_every = self.sample_every
        for tick in range(self.n_ticks):
            s = tick % frame_slots
            if s == 0:
                self._boundary(tick)
            events = self.buckets.pop(tick, None)
            if events:
                self._apply_switches(tick, events)
            if tick % sample_every == 0:
                # State at slot start; command effects land at slot end.
                self._trace_ticks.append(tick)
                self._trace_demand.append(self.total_demand)
                self._trace_consumed.append(self.total_consumed)
            for c, m in self.dl_at[s]:
                self._deliver_dl(tick, c, m)
            for c, m in self.ul_at[s]:
                self._deliver_ul(tick, c, m)
        self._flush(self.n_ticks)
        log = self.log
        log.trace_tick = np.array(self._trace_ticks, dtype=np.int64)
        log.trace_demand_w = np.array(self._trace_demand)
        log.trace_consumed_w = np.array(self._trace_consumed)
        return log

    # ------------------------------------------------------- tick pieces

    def _flush(self, tick: int) -> None:
        """Integrate the piecewise-constant consumption up to `tick`."""
        span = tick - self._last_flush
        if span > 0:
            over = self.total_consumed - self.supply_w
            if over > 0:
                self.log.overload_integral_w_ticks += over * span
                if over > self.log.max_overload_w:
                    self.log.max_overload_w = over
            self.log.consumed_integral_w_ticks += self.total_consumed * span
            self._last_flush = tick

    def _member_known(self, c: int, period: int) -> tuple[np.ndarray, np.ndarray]:
        """Stale-substituted member values and report ticks for cluster c."""
        fresh = (period - self.last_heard[c]) <= self.age_cap
        known = np.where(fresh, self.last_report[c], self.assigned_limit[c])
        refs = np.where(fresh, self.last_sample_tick[c], -1)
        return known, refs

    def _boundary(self, tick: int) -> None:
        period = tick // self.frame_slots
        tree = self.tree
        knowns = []
        refs = []
        for c in range(self.n_clusters):
            known, ref = self._member_known(c, period)
            knowns.append(known)
            refs.append(ref)
            tree.bottom[c].reported_w = float(known.sum())
        tree.propagate_up()
        tree.allocate_down()
        for c in range(self.n_clusters):
            node = tree.bottom[c]
            if self.cfg.member_plane == GATEWAY_PLANE:
                limits = allocate_limits(node.limit_w, knowns[c])
                self.pending_limit[c] = limits
                self.assigned_limit[c] = limits.copy()
            else:
                # A zero report caused by our own shed command still counts
                # as candidate demand, otherwise release/shed oscillates.
                on_view = (knowns[c] > 0.0) | self.pending_off[c]
                decision = select_turnoff(
                    node.limit_w,
                    list(zip(self.member_rated[c], on_view, self.member_cls[c])),
                )
                off = np.zeros(self.members_per_cluster[c], dtype=bool)
                off[list(decision.shed)] = True
                self.pending_off[c] = off
                self.assigned_limit[c] = np.where(off, 0.0, self.member_rated[c])
            self.pending_ref[c] = refs[c]
            self.dispatch_tick[c] = tick + self.backbone_ticks
            self.log.cluster_rows.append(
                (
                    tick,
                    period,
                    c,
                    node.limit_w,
                    node.reported_w,
                    int(self.n_off_applied[c]),
                    float(self.residual_applied[c]),
                )
            )
            self.n_off_applied[c] = 0
            self.residual_applied[c] = 0.0
            n_m = self.members_per_cluster[c]
            self.dl_draw[c] = self.link_rng.random(n_m) < self.p_link[c]
            self.ul_draw[c] = self.link_rng.random(n_m) < self.p_link[c]
        self.log.root_reported_w[period] = tree.root.reported_w
        counts = np.rint(self.consumed_house).astype(np.int64)
        self.log.power_counts += np.bincount(counts, minlength=self.log.power_counts.size)
        self.log.n_power_samples += self.n_houses

    def _apply_switches(self, tick: int, events: list[tuple[int, int]]) -> None:
        self._flush(tick)
        rng = self.load_rng
        t_slot = self.t_slot
        for h, k in events:
            now_on = not self.on[h, k]
            self.on[h, k] = now_on
            delta = self.rated[k] if now_on else -self.rated[k]
            self.demand_house[h] += delta
            self.total_demand += delta
            if not self.forced[h, k]:
                self.consumed_house[h] += delta
                self.total_consumed += delta
            mean = self.mean_on_s[k] if now_on else self.mean_off_s[k]
            if math.isfinite(mean):
                # Quantized to the nearest slot, at least one tick ahead.
                nxt = tick + max(1, int(round(rng.exponential(mean) / t_slot)))
                if nxt < self.n_ticks:
                    self.buckets.setdefault(nxt, []).append((h, k))

    def _gateway_limit(self, c: int, m: int, tick: int) -> tuple[float, int]:
        """Command content for member m: staged in batch mode, computed
        just-in-time from the running aggregate in iterative mode."""
        if self.cfg.control_mode == ITERATIVE:
            period = tick // self.frame_slots
            known, refs = self._member_known(c, period)
            limits = allocate_limits(self.tree.bottom[c].limit_w, known)
            self.assigned_limit[c][m] = limits[m]
            return float(limits[m]), int(refs[m])
        return float(self.pending_limit[c][m]), int(self.pending_ref[c][m])

    def _deliver_dl(self, tick: int, c: int, m: int) -> None:
        if tick < self.dispatch_tick[c]:
            return  # command still in flight on the backbone; slot goes idle
        if not self.dl_draw[c][m]:
            self.log.dl_lost += 1
            return
        self.log.dl_ok += 1
        h = int(self.member_house[c][m])
        if self.cfg.member_plane == GATEWAY_PLANE:
            limit, ref = self._gateway_limit(c, m, tick)
            ons = self.on[h]
            decision = select_turnoff(
                limit,
                [
                    (p, bool(ons[k]), cl)
                    for p, cl, k in zip(self.rated_by_rank, self.cls_by_rank, self.rank_order)
                ],
            )
            new_consumed = float(sum(decision.commands))
            self._flush(tick + 1)  # actuation completes at the slot end
            self.total_consumed += new_consumed - self.consumed_house[h]
            self.consumed_house[h] = new_consumed
            self.forced[h, :] = False
            for pos_idx in decision.shed:
                self.forced[h, self.rank_order[pos_idx]] = True
            self.n_off_applied[c] += decision.n_off
            self.residual_applied[c] += decision.residual_overload_w
            self.log.total_sheds += decision.n_off
        else:
            if self.cfg.control_mode == ITERATIVE:
                period = tick // self.frame_slots
                known, refs = self._member_known(c, period)
                on_view = (known > 0.0) | self.pending_off[c]
                decision = select_turnoff(
                    self.tree.bottom[c].limit_w,
                    list(zip(self.member_rated[c], on_view, self.member_cls[c])),
                )
                off = np.zeros(self.members_per_cluster[c], dtype=bool)
                off[list(decision.shed)] = True
                self.pending_off[c] = off
                want_off = bool(off[m])
                self.assigned_limit[c][m] = 0.0 if want_off else self.member_rated[c][m]
                ref = int(refs[m])
            else:
                want_off = bool(self.pending_off[c][m])
                ref = int(self.pending_ref[c][m])
            k = int(self.member_appl[c][m])
            if self.forced[h, k] != want_off:
                self._flush(tick + 1)  # actuation completes at the slot end
                self.forced[h, k] = want_off
                if self.on[h, k]:
                    delta = -self.rated[k] if want_off else self.rated[k]
                    self.consumed_house[h] += delta
                    self.total_consumed += delta
                if want_off:
                    self.n_off_applied[c] += 1
                    self.log.total_sheds += 1
        if ref >= 0:
            self.log.delay_sum_ticks[h] += (tick + 1) - ref
            self.log.delay_samples[h] += 1

    def _deliver_ul(self, tick: int, c: int, m: int) -> None:
        if not self.ul_draw[c][m]:
            self.log.ul_lost += 1
            return
        self.log.ul_ok += 1
        h = int(self.member_house[c][m])
        if self.cfg.member_plane == GATEWAY_PLANE:
            value = float(self.consumed_house[h])
        else:
            k = int(self.member_appl[c][m])
            value = float(self.rated[k]) if self.on[h, k] and not self.forced[h, k] else 0.0
        self.last_report[c][m] = value
        self.last_heard[c][m] = tick // self.frame_slots
        self.last_sample_tick[c][m] = tick - (self.hop_slots - 1)


def run(cfg: ScenarioConfig) -> MetricsLog:
    """Run one scenario to completion and return its metrics."""
    return Simulation(cfg).run()


def measure_control_delay(cfg: ScenarioConfig) -> float:
    """Mean report-to-command delay in seconds (t0 on an ideal channel)."""
    return run(cfg).mean_delay_s()


def power_histogram(log: MetricsLog, bin_w: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Normalized per-house instantaneous power distribution from a run."""
    return log.power_histogram(bin_w)


def throughput_sweep(
    cfg: ScenarioConfig,
    distances: list[float],
    n_slots: int = 20_000,
    hops: tuple[int, ...] = (1, 2),
) -> list[tuple[float, int, float]]:
    """Monte Carlo goodput rows (distance_m, hops, bps) over the link model."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    rows = []
    for d in distances:
        if d <= 0:
            raise ValueError(f"distances must be positive, got {d}")
        for h in hops:
            rows.append((d, h, simulate_throughput_bps(d, cfg.radio, rng, n_slots, h)))
    return rows
