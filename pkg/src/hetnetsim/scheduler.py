"""Priority-based, interference-aware selection of macro user groups.

Every schedulable group carries an integer priority that grows while the
group waits; each slot the macro greedily picks, among the longest-waiting
groups whose angular supports do not overlap the already selected ones, the
group that radiates the least worst-case inter-group interference.  The
priority rule makes equal air time emerge without any fading feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .channel import GroupChannelModel
from .detequiv import LinkGainTable


@dataclass
class ScheduleState:
    """Persistent scheduler state across the slot loop of one drop."""

    priorities: np.ndarray             # (n,) int, >= 1
    schedulable: np.ndarray            # (n,) bool: may appear in a schedule
    offload_map: dict[int, int] = field(default_factory=dict)  # group -> serving cell
    selected: list[int] = field(default_factory=list)          # current slot
    active_cells: list[int] = field(default_factory=list)      # current slot

    @classmethod
    def fresh(cls, n_groups: int, schedulable, offload_map=None) -> "ScheduleState":
        mask = np.zeros(n_groups, dtype=bool)
        mask[np.asarray(list(schedulable), dtype=int)] = True
        return cls(priorities=np.ones(n_groups, dtype=int), schedulable=mask,
                   offload_map=dict(offload_map or {}))


def angular_interval_disjoint(g: int, g2: int,
                              models: list[GroupChannelModel]) -> bool:
    """True iff the two groups' angular supports are disjoint closed intervals.

    Touching endpoints count as overlap.
    """
    lo1, hi1 = models[g].interval
    lo2, hi2 = models[g2].interval
    return hi1 < lo2 or hi2 < lo1


def select_user_groups(state: ScheduleState, candidates, g_max: int,
                       table: LinkGainTable, p0: float,
                       rng: np.random.Generator) -> list[int]:
    """Greedy schedule of up to ``g_max`` interval-disjoint groups.

    Seeds with a uniformly random member of the highest-priority candidate
    set, then repeatedly: drop candidates whose support overlaps any selected
    group, score the survivors by the worst interference they would cause to
    the selected groups under the re-divided per-stream power
    p0 * S_cand / (S_selected + S_cand), and among the highest-priority
    survivors add the one with the smallest worst-case score (ties: lowest
    group index).  Stops when no survivor remains or g_max is reached.
    """
    cand = np.unique(np.asarray(list(candidates), dtype=int))
    if cand.size == 0:
        raise ValueError("no schedulable candidates")
    pri = state.priorities
    top = cand[pri[cand] == pri[cand].max()]
    g_star = int(rng.choice(top))
    selected = [g_star]
    s_tot = int(table.s_g[g_star])
    residual = cand[cand != g_star]
    lo, hi = table.intervals[:, 0], table.intervals[:, 1]
    while residual.size and len(selected) < g_max:
        g_new = selected[-1]
        keep = (hi[residual] < lo[g_new]) | (hi[g_new] < lo[residual])
        residual = residual[keep]
        if residual.size == 0:
            break
        s_cand = table.s_g[residual]
        power = p0 * s_cand / (s_tot + s_cand)
        i_max = power * table.xgain[np.ix_(selected, residual)].max(axis=0)
        top = pri[residual] == pri[residual].max()
        pool = residual[top]
        g_star = int(pool[np.argmin(i_max[top])])
        selected.append(g_star)
        s_tot += int(table.s_g[g_star])
        residual = residual[residual != g_star]
    return selected


def update_priorities(state: ScheduleState, selected) -> ScheduleState:
    """Increment the priority of every schedulable group that was not served."""
    mask = state.schedulable.copy()
    sel = np.asarray(list(selected), dtype=int)
    if sel.size:
        mask[sel] = False
    state.priorities[mask] += 1
    return state
