"""Massive-MIMO macrocell + small-cell downlink simulator.

A single macro base station with a large antenna array serves clustered user
hotspots through covariance-based two-stage beamforming while co-channel
small cells cover a subset of the hotspots.  The package provides the random
geometry, one-ring channel models, deterministic-equivalent SINR machinery,
a finite-antenna Monte-Carlo oracle, the priority scheduler, four inter-tier
coordination policies, and a sweep harness with CSV/JSON outputs.
"""

__version__ = "0.1.0"

from .geometry import (DEPLOYMENT_MODES, POLICIES, Layout, SimParams,
                       angular_spread, assign_small_cells,
                       layout_from_positions, sample_layout)
from .channel import (GroupChannelModel, PathGainMatrix, build_channel_models,
                      build_group_model, build_path_gains, eigen_model,
                      one_ring_covariance, one_ring_lags, path_gain,
                      support_interval, wall_count)
from .detequiv import (DegenerateLoadingError, FixedPointError,
                       FixedPointSolution, LinkGainTable,
                       build_link_gain_table, intergroup_gain, macro_sinr_de,
                       offloaded_sinr_de, powers_from_params,
                       smallcell_sinr_de, solve_fixed_point)
from .mcoracle import (ChannelRealization, Precoders,
                       RankDeficientChannelError, compare_de_to_empirical,
                       draw_channels, empirical_sinr, zf_precoders)
from .scheduler import (ScheduleState, angular_interval_disjoint,
                        select_user_groups, update_priorities)
from .coordination import (TinLinkView, build_tin_link_view, policy_none,
                           policy_offload, policy_onoff, tin_addable,
                           tin_condition_holds, tin_select)
from .simharness import DropResult, Summary, aggregate, run_drop
from .cli import ExperimentConfig, load_config, run_experiment

__all__ = [
    "DEPLOYMENT_MODES", "POLICIES", "Layout", "SimParams", "angular_spread",
    "assign_small_cells", "layout_from_positions", "sample_layout",
    "GroupChannelModel", "PathGainMatrix", "build_channel_models",
    "build_group_model", "build_path_gains", "eigen_model",
    "one_ring_covariance", "one_ring_lags", "path_gain", "support_interval",
    "wall_count",
    "DegenerateLoadingError", "FixedPointError", "FixedPointSolution",
    "LinkGainTable", "build_link_gain_table", "intergroup_gain",
    "macro_sinr_de", "offloaded_sinr_de", "powers_from_params",
    "smallcell_sinr_de", "solve_fixed_point",
    "ChannelRealization", "Precoders", "RankDeficientChannelError",
    "compare_de_to_empirical", "draw_channels", "empirical_sinr",
    "zf_precoders",
    "ScheduleState", "angular_interval_disjoint", "select_user_groups",
    "update_priorities",
    "TinLinkView", "build_tin_link_view", "policy_none", "policy_offload",
    "policy_onoff", "tin_addable", "tin_condition_holds", "tin_select",
    "DropResult", "Summary", "aggregate", "run_drop",
    "ExperimentConfig", "load_config", "run_experiment",
]
