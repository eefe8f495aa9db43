import numpy as np
import pytest
from scipy.stats import kstest

from hetnetsim import (SimParams, angular_spread, assign_small_cells,
                       layout_from_positions, sample_layout)

from conftest import small_params


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(beta=1.5)
    with pytest.raises(ValueError):
        SimParams(n_f=600, n_u=500)
    with pytest.raises(ValueError):
        SimParams(r_excl=2000.0)
    with pytest.raises(ValueError):
        SimParams(deployment="ring")


def test_distances_within_annulus():
    params = SimParams(n_u=500)
    layout = sample_layout(params, np.random.default_rng(1))
    assert layout.dist_macro.min() >= 100.0
    assert layout.dist_macro.max() <= 1000.0
    assert layout.smallcell_set.size == 0
    assert np.all((-np.pi <= layout.theta) & (layout.theta < np.pi))
    assert np.all((0 < layout.delta) & (layout.delta < np.pi / 2))


def test_degenerate_annulus_pushes_to_rim():
    params = SimParams(n_u=2000, r_excl=1000.0 - 1e-6, r_u=30.0)
    layout = sample_layout(params, np.random.default_rng(2))
    assert abs(layout.dist_macro.mean() - 1000.0) < 1e-3


def test_uniform_area_law_ks():
    # oracle: closed-form CDF of the uniform-in-area radial law
    r0, r1 = 100.0, 1000.0
    cdf = lambda r: (r**2 - r0**2) / (r1**2 - r0**2)
    params = SimParams(n_u=100_000)
    layout = sample_layout(params, np.random.default_rng(3))
    assert kstest(layout.dist_macro, cdf).statistic <= 0.01


def test_assign_all_groups_forced():
    params = small_params()
    layout = sample_layout(params, np.random.default_rng(4))
    for mode in ("uniform", "interior", "edge"):
        out = assign_small_cells(layout, mode, params.n_u, np.random.default_rng(5))
        assert np.array_equal(out.smallcell_set, np.arange(params.n_u))


def test_assign_rejects_too_many():
    params = small_params()
    layout = sample_layout(params, np.random.default_rng(6))
    with pytest.raises(ValueError):
        assign_small_cells(layout, "uniform", params.n_u + 1, np.random.default_rng(6))


def test_uniform_single_pick_is_uniform():
    params = SimParams(n_u=10, n_f=1)
    layout = sample_layout(params, np.random.default_rng(7))
    rng = np.random.default_rng(8)
    counts = np.zeros(10)
    trials = 5000
    for _ in range(trials):
        counts[assign_small_cells(layout, "uniform", 1, rng).smallcell_set[0]] += 1
    # chi-square against uniform, well under the 99.9% quantile (27.9 for 9 dof)
    chi2 = np.sum((counts - trials / 10) ** 2 / (trials / 10))
    assert chi2 < 27.9


@pytest.mark.parametrize("mode,cdf", [
    ("interior", lambda r: (r - 100.0) / 900.0),
    ("edge", lambda r: (r**3 - 100.0**3) / (1000.0**3 - 100.0**3)),
])
def test_deployment_law_ks(mode, cdf):
    # oracle: the stated distance CDFs, renormalized to the annulus
    params = SimParams(n_u=500, n_f=50)
    rng = np.random.default_rng(9)
    pooled = []
    for _ in range(300):
        layout = sample_layout(params, rng)
        sel = assign_small_cells(layout, mode, 50, rng)
        pooled.append(sel.dist_macro[sel.smallcell_set])
    assert kstest(np.concatenate(pooled), cdf).statistic <= 0.05


def test_selection_is_a_set():
    params = small_params()
    layout = sample_layout(params, np.random.default_rng(10))
    rng = np.random.default_rng(11)
    for mode in ("uniform", "interior", "edge"):
        out = assign_small_cells(layout, mode, params.n_f, rng)
        assert out.smallcell_set.size == params.n_f
        assert np.unique(out.smallcell_set).size == params.n_f


def test_angular_spread_values():
    assert angular_spread(30.0 / np.tan(0.1), 30.0) == pytest.approx(0.1, abs=1e-12)
    assert angular_spread(300.0, 30.0) == pytest.approx(np.arctan(0.1), abs=1e-12)
    with pytest.raises(ValueError):
        angular_spread(30.0, 30.0)  # boundary d = r_u rejected
    with pytest.raises(ValueError):
        angular_spread(10.0, 30.0)


def test_angular_spread_strictly_decreasing():
    d = np.linspace(40.0, 2000.0, 200)
    spread = angular_spread(d, 30.0)
    assert np.all(np.diff(spread) < 0)


def test_layout_from_positions_roundtrip():
    params = small_params()
    layout = layout_from_positions([[200.0, 0.0], [0.0, 300.0]], params,
                                   smallcell_set=[1])
    assert layout.dist_macro == pytest.approx([200.0, 300.0])
    assert layout.theta == pytest.approx([0.0, np.pi / 2])
    assert np.array_equal(layout.macro_set, [0])
    with pytest.raises(ValueError):
        layout_from_positions([[10.0, 0.0]], params)  # inside the exclusion ball
