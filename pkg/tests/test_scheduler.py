import itertools

import numpy as np
import pytest

from hetnetsim import (ScheduleState, SimParams, angular_interval_disjoint,
                       build_group_model, select_user_groups,
                       update_priorities)
from hetnetsim.detequiv import LinkGainTable

from conftest import build_scene, small_params


def _synthetic_table(intervals, s_g=None, xgain=None):
    """Minimal table for scheduler tests: intervals + cross gains only."""
    n = len(intervals)
    s_g = np.ones(n, dtype=int) if s_g is None else np.asarray(s_g, dtype=int)
    xgain = np.zeros((n, n)) if xgain is None else np.asarray(xgain, dtype=float)
    return LinkGainTable(
        s_bar=8, l_antennas=10, a0=np.ones(n), agg=np.eye(n), s_g=s_g,
        r_g=s_g + 1, m=np.ones(n), F=np.zeros(n), d_mc=np.ones(n),
        xgain=xgain, schedulable=np.ones(n, dtype=bool),
        degenerate=np.zeros(n, dtype=bool),
        smallcell_mask=np.zeros(n, dtype=bool),
        intervals=np.asarray(intervals, dtype=float),
    )


def _disjoint_intervals(n, width=0.02):
    lo = np.linspace(-0.45, 0.35, n)
    return np.column_stack((lo, lo + width))


def test_gmax_one_returns_uniform_highest_priority():
    table = _synthetic_table(_disjoint_intervals(6))
    state = ScheduleState.fresh(6, range(6))
    state.priorities[:] = [3, 1, 3, 1, 3, 1]
    rng = np.random.default_rng(0)
    picks = {select_user_groups(state, range(6), 1, table, 1.0, rng)[0]
             for _ in range(200)}
    assert picks == {0, 2, 4}


def test_overlapping_pair_yields_single_pick():
    table = _synthetic_table([[0.0, 0.1], [0.05, 0.15]])
    state = ScheduleState.fresh(2, range(2))
    out = select_user_groups(state, range(2), 2, table, 1.0,
                             np.random.default_rng(1))
    assert len(out) == 1


def test_empty_candidates_error():
    table = _synthetic_table(_disjoint_intervals(3))
    state = ScheduleState.fresh(3, range(3))
    with pytest.raises(ValueError):
        select_user_groups(state, [], 2, table, 1.0, np.random.default_rng(2))


def _feasible_maximal(intervals, chosen, g_max):
    """Brute-force oracle: chosen is pairwise disjoint and not extendable."""
    lo, hi = intervals[:, 0], intervals[:, 1]

    def disjoint(i, j):
        return hi[i] < lo[j] or hi[j] < lo[i]

    if not all(disjoint(i, j) for i, j in itertools.combinations(chosen, 2)):
        return False
    if len(chosen) == g_max:
        return True
    rest = [g for g in range(len(intervals)) if g not in chosen]
    return not any(all(disjoint(g, c) for c in chosen) for g in rest)


def test_selection_is_disjoint_and_maximal_vs_bruteforce():
    rng = np.random.default_rng(3)
    for trial in range(30):
        lo = rng.uniform(-0.5, 0.45, 8)
        intervals = np.column_stack((lo, lo + rng.uniform(0.01, 0.2, 8)))
        table = _synthetic_table(intervals,
                                 xgain=rng.uniform(0, 1, (8, 8)))
        state = ScheduleState.fresh(8, range(8))
        out = select_user_groups(state, range(8), 4, table, 10.0, rng)
        assert _feasible_maximal(intervals, out, 4), (trial, out)


def test_update_priorities_rules():
    table = _synthetic_table(_disjoint_intervals(4))
    state = ScheduleState.fresh(4, range(4))
    update_priorities(state, [0, 1, 2, 3])
    assert np.array_equal(state.priorities, [1, 1, 1, 1])  # all served
    update_priorities(state, [])
    assert np.array_equal(state.priorities, [2, 2, 2, 2])  # none served
    update_priorities(state, [1])
    assert np.array_equal(state.priorities, [3, 2, 3, 3])


def test_round_robin_emerges():
    # non-conflicting groups, G_max=1: the priority rule makes aligned n-slot
    # cycles that serve every group exactly once (random order inside each
    # cycle), so air time is equal and no gap exceeds 2n-1
    n = 7
    table = _synthetic_table(_disjoint_intervals(n))
    state = ScheduleState.fresh(n, range(n))
    rng = np.random.default_rng(4)
    served_at = {g: [] for g in range(n)}
    horizon = 10 * n
    for t in range(horizon):
        sel = select_user_groups(state, range(n), 1, table, 1.0, rng)
        served_at[sel[0]].append(t)
        update_priorities(state, sel)
    for g, times in served_at.items():
        assert len(times) == horizon // n          # equal air time
        assert all(c * n <= s < (c + 1) * n for c, s in enumerate(times))
        assert np.max(np.diff([-1] + times)) <= 2 * n - 1


def test_interval_disjoint_cases():
    params = SimParams()
    m60 = build_group_model(np.radians(60), np.radians(5), 1.0, params)
    m_m60 = build_group_model(np.radians(-60), np.radians(5), 1.0, params)
    models = [m60, m_m60, m60]
    assert angular_interval_disjoint(0, 1, models)
    assert not angular_interval_disjoint(0, 2, models)  # identical groups
    # touching endpoints count as overlap (closed intervals)
    d = 0.05
    t1 = build_group_model(d, d, 1.0, params)    # interval [-sin(2d)/2, 0]
    t2 = build_group_model(-d, d, 1.0, params)   # interval [0, sin(2d)/2]
    assert t1.interval[1] == pytest.approx(t2.interval[0], abs=1e-15)
    assert not angular_interval_disjoint(0, 1, [t1, t2])


def test_selection_ignores_fading_seed(scene24, powers24):
    params, layout, pg, models, table = scene24
    p0, _ = powers24
    cand = np.flatnonzero(table.schedulable)
    outs = []
    for _ in range(2):
        state = ScheduleState.fresh(table.n_groups, cand)
        outs.append(select_user_groups(state, cand, 4, table, p0,
                                       np.random.default_rng(5)))
    assert outs[0] == outs[1]


def test_schedule_always_interval_disjoint(scene24, powers24):
    params, layout, pg, models, table = scene24
    p0, _ = powers24
    cand = np.flatnonzero(table.schedulable)
    state = ScheduleState.fresh(table.n_groups, cand)
    rng = np.random.default_rng(6)
    for _ in range(40):
        sel = select_user_groups(state, cand, params.g_max, table, p0, rng)
        for i, j in itertools.combinations(sel, 2):
            assert table.interval_disjoint(i, j)
        update_priorities(state, sel)
