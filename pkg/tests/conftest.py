import numpy as np
import pytest

from hetnetsim import (SimParams, assign_small_cells, build_channel_models,
                       build_link_gain_table, build_path_gains,
                       layout_from_positions, powers_from_params,
                       sample_layout)


def small_params(**over):
    """Compact parameter set for fast table builds in unit tests."""
    base = dict(n_u=24, n_f=8, M=48, L=10, slots_per_drop=20, n_drops=4)
    base.update(over)
    return SimParams(**base)


def build_scene(params, seed=0, mode="uniform"):
    """Layout + path gains + models + link table, one call."""
    rng = np.random.default_rng(seed)
    layout = assign_small_cells(sample_layout(params, rng), mode, params.n_f, rng)
    pathgains = build_path_gains(layout, params)
    models = build_channel_models(layout, pathgains, params)
    table = build_link_gain_table(layout, models, pathgains, params)
    return layout, pathgains, models, table


def two_group_scene(r_m, theta_deg, params, macro_dist=200.0):
    """The two-group toy: macro group on the x axis, covered group at (r, theta)."""
    th = np.radians(theta_deg)
    positions = [[macro_dist, 0.0], [r_m * np.cos(th), r_m * np.sin(th)]]
    layout = layout_from_positions(positions, params, smallcell_set=[1])
    pathgains = build_path_gains(layout, params)
    models = build_channel_models(layout, pathgains, params)
    table = build_link_gain_table(layout, models, pathgains, params)
    return layout, pathgains, models, table


@pytest.fixture(scope="session")
def scene24():
    """Shared medium scene: 24 groups, 8 small cells, M=48."""
    params = small_params()
    return params, *build_scene(params, seed=11)


@pytest.fixture(scope="session")
def powers24(scene24):
    return powers_from_params(scene24[0])
