"""Drop/slot simulation loop and result aggregation.

A drop samples one random layout, builds its channel models and link-gain
table once, then simulates scheduling slots: the macro schedules groups, the
active small-cell set follows the coordination policy, SINRs come from the
deterministic equivalents, and long-term group rates are slot averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .channel import build_channel_models, build_path_gains
from .coordination import (policy_none, policy_offload, policy_onoff,
                           tin_select)
from .detequiv import (LinkGainTable, build_link_gain_table,
                       macro_sinr_de, offloaded_sinr_de, powers_from_params,
                       smallcell_sinr_de)
from .geometry import (Layout, POLICIES, SimParams, assign_small_cells,
                       sample_layout)
from .scheduler import ScheduleState, select_user_groups, update_priorities

KIND_MACRO, KIND_SMALLCELL, KIND_OFFLOADED = "macro", "smallcell", "offloaded"


@dataclass
class DropResult:
    """Long-term rates and accounting for one random layout."""

    rates: np.ndarray             # (n,) per-group long-term rate, bit/s/Hz
    group_kind: np.ndarray        # (n,) macro | smallcell | offloaded
    macro_total: float
    smallcell_total: float
    offload_fraction: float
    policy: str
    seed: int | None = None
    config_hash: str = ""
    diagnostics: list = field(default_factory=list)


@dataclass
class Summary:
    """Aggregate over drops: tradeoff point, rate CDF pool, offload stats."""

    n_drops: int
    macro_total_mean: float
    smallcell_total_mean: float
    macro_total_ci: float         # 95% half-width, normal approximation
    smallcell_total_ci: float
    offload_fraction_mean: float
    rate_samples: np.ndarray      # pooled per-group rates across drops
    rate_kinds: np.ndarray        # matching kind labels


def _slot_rates(table: LinkGainTable, selected, active, offload_map,
                shares, p0, p1) -> np.ndarray:
    """Per-group rates of one slot (group-aggregate spectral efficiencies)."""
    rates = np.zeros(table.n_groups)
    for g in selected:
        sinr = macro_sinr_de(g, selected, active, table, p0, p1)
        rates[g] = table.s_g[g] * np.log2(1.0 + sinr)
    active_set = set(int(f) for f in active)
    for f in active:
        sinr = smallcell_sinr_de(f, selected, active, table, p0, p1)
        rates[f] = table.s_bar * np.log2(1.0 + sinr) / shares.get(int(f), 1)
    for g, f in offload_map.items():
        if int(f) in active_set:
            sinr = offloaded_sinr_de(g, f, selected, active, table, p0, p1)
            rates[g] = table.s_bar * np.log2(1.0 + sinr) / shares[int(f)]
    return rates


def run_drop(params: SimParams, policy: str, rng: np.random.Generator | int,
             layout: Layout | None = None,
             keep_diagnostics: bool = False) -> DropResult:
    """Simulate one drop under the given coordination policy.

    ``rng`` may be a Generator or an integer seed.  A fixed ``layout`` can be
    supplied for scripted geometries; by default a fresh layout is sampled
    and small cells are assigned per ``params.deployment``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    if layout is None:
        layout = sample_layout(params, rng)
        layout = assign_small_cells(layout, params.deployment, params.n_f, rng)
    pathgains = build_path_gains(layout, params)
    models = build_channel_models(layout, pathgains, params)
    table = build_link_gain_table(layout, models, pathgains, params)
    p0, p1 = powers_from_params(params)

    offload_map: dict[int, int] = {}
    if policy == "offload":
        offload_map = policy_offload(table, params.gamma, p0, p1)
    shares = {}
    for f in table.smallcell_set:
        shares[int(f)] = 1
    for g, f in offload_map.items():
        shares[int(f)] += 1

    candidates = np.flatnonzero(table.schedulable)
    if offload_map:
        candidates = np.setdiff1d(candidates, np.fromiter(offload_map, dtype=int))
    universe = (np.concatenate((candidates, table.smallcell_set))
                if policy == "tin" else candidates)
    state = ScheduleState.fresh(table.n_groups, universe, offload_map)

    rate_sum = np.zeros(table.n_groups)
    diagnostics = []
    for _ in range(params.slots_per_drop):
        if policy == "tin":
            selected, active = tin_select(state.priorities, table,
                                          params.g_max, p0, p1)
            served = list(selected) + list(active)
        else:
            if candidates.size:
                selected = select_user_groups(state, candidates, params.g_max,
                                              table, p0, rng)
            else:
                selected = []  # zero feasible macro groups this slot
            if policy == "onoff":
                active = policy_onoff(selected, table, params.epsilon1,
                                      params.epsilon2, p0, p1)
            else:
                active = policy_none(table)
            served = list(selected)
        state.selected, state.active_cells = list(selected), list(active)
        rates = _slot_rates(table, selected, active, offload_map, shares, p0, p1)
        rate_sum += rates
        if keep_diagnostics:
            diagnostics.append({"selected": list(map(int, selected)),
                                "active_cells": list(map(int, active))})
        update_priorities(state, served)

    rates = rate_sum / params.slots_per_drop
    kind = np.full(table.n_groups, KIND_MACRO, dtype=object)
    kind[table.smallcell_set] = KIND_SMALLCELL
    for g in offload_map:
        kind[g] = KIND_OFFLOADED
    kind = kind.astype(str)
    macro_mask = kind == KIND_MACRO
    n_macro_side = int((~layout.smallcell_mask).sum())
    return DropResult(
        rates=rates, group_kind=kind,
        macro_total=float(rates[macro_mask].sum()),
        smallcell_total=float(rates[~macro_mask].sum()),
        offload_fraction=len(offload_map) / n_macro_side if n_macro_side else 0.0,
        policy=policy, seed=seed, diagnostics=diagnostics,
    )


def aggregate(drops: list[DropResult]) -> Summary:
    """Pool drops into a tradeoff point, a rate-CDF sample, and offload stats."""
    if not drops:
        raise ValueError("aggregate needs at least one drop")
    n = len(drops)
    mt = np.array([d.macro_total for d in drops])
    st = np.array([d.smallcell_total for d in drops])
    of = np.array([d.offload_fraction for d in drops])

    def half_width(x):
        return 1.96 * x.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0

    return Summary(
        n_drops=n,
        macro_total_mean=float(mt.mean()),
        smallcell_total_mean=float(st.mean()),
        macro_total_ci=float(half_width(mt)),
        smallcell_total_ci=float(half_width(st)),
        offload_fraction_mean=float(of.mean()),
        rate_samples=np.concatenate([d.rates for d in drops]),
        rate_kinds=np.concatenate([d.group_kind for d in drops]),
    )
