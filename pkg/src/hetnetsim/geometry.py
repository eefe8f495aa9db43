"""Random layouts of user hotspots on a macrocell disk.

User groups (hotspots) are dropped uniformly in area on the annulus between
the exclusion radius and the cell radius.  A subset of groups is covered by
a co-located small cell according to one of three deployment laws
(``uniform`` / ``interior`` / ``edge``) that shape the distance distribution
of the covered groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import numpy as np

DEPLOYMENT_MODES = ("uniform", "interior", "edge")
POLICIES = ("none", "onoff", "offload", "tin")


@dataclass(frozen=True)
class SimParams:
    """Simulation parameters (distances in meters, losses/SNRs in dB).

    Defaults follow the standard single-macrocell configuration: 500 hotspots
    on a 1 km disk with a 100 m exclusion ball, path-loss cutoff 50 m,
    exponent 3.5, 5 dB per wall, loading factor 0.8, and small cells 20 dB
    below the macro peak power.
    """

    n_u: int = 500                  # number of user groups (hotspots)
    n_f: int = 20                   # number of small cells
    r_mc: float = 1000.0            # macrocell radius
    r_excl: float = 100.0           # exclusion radius around the macro BS
    d0: float = 50.0                # path-loss cutoff distance
    alpha: float = 3.5              # path-loss exponent
    w_db: float = 5.0               # wall penetration loss per wall
    beta: float = 0.8               # loading factor: streams per covariance rank
    M: int = 100                    # macro BS antennas
    L: int = 10                     # small-cell antennas
    r_u: float = 30.0               # scattering ring radius around each hotspot
    cell_edge_snr_db: float = 10.0  # macro SNR at the cell edge (single antenna)
    p1_over_p0_db: float = -20.0    # small-cell peak power relative to macro
    g_max: int = 5                  # user groups served per slot by the macro
    epsilon1: float = 0.1           # ON/OFF threshold: interference received
    epsilon2: float = 0.1           # ON/OFF threshold: interference caused
    gamma: float = 1.0              # offload threshold
    slots_per_drop: int = 200
    n_drops: int = 100
    deployment: str = "uniform"
    rank_threshold: float = 1e-3    # spectral mass discarded by the effective rank

    def __post_init__(self):
        if not (0 < self.n_u):
            raise ValueError(f"n_u must be positive, got {self.n_u}")
        if not (0 <= self.n_f <= self.n_u):
            raise ValueError(f"need 0 <= n_f <= n_u, got n_f={self.n_f}, n_u={self.n_u}")
        if not (0 < self.r_excl < self.r_mc):
            raise ValueError(f"need 0 < r_excl < r_mc, got {self.r_excl}, {self.r_mc}")
        if not (0 < self.beta < 1):
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if not (0 < self.r_u < self.r_excl):
            raise ValueError(f"need 0 < r_u < r_excl, got r_u={self.r_u}")
        for name in ("d0", "alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("M", "L", "g_max", "slots_per_drop", "n_drops"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if int(np.floor(self.beta * self.L)) < 1:
            raise ValueError("beta*L < 1: a small cell would serve zero users")
        if self.deployment not in DEPLOYMENT_MODES:
            raise ValueError(f"unknown deployment {self.deployment!r}, "
                             f"expected one of {DEPLOYMENT_MODES}")
        if not (0 < self.rank_threshold < 1):
            raise ValueError("rank_threshold must be in (0,1)")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.epsilon1 < 0 or self.epsilon2 < 0:
            raise ValueError("epsilon1/epsilon2 must be nonnegative")

    @property
    def s_bar(self) -> int:
        """Users served per small cell per slot."""
        return int(np.floor(self.beta * self.L))


@dataclass(frozen=True)
class Layout:
    """One realization of hotspot positions and the small-cell assignment.

    ``smallcell_set`` holds the (sorted, unique) indices of groups covered by
    a small cell; all other groups form the macro-served set.
    """

    positions: np.ndarray      # (n_u, 2)
    theta: np.ndarray          # (n_u,) angle of arrival seen from the macro BS
    dist_macro: np.ndarray     # (n_u,) distance from the macro BS
    delta: np.ndarray          # (n_u,) angular spread of the scattering ring
    smallcell_set: np.ndarray  # sorted unique group indices covered by a cell

    def __post_init__(self):
        sc = np.asarray(self.smallcell_set, dtype=int)
        if sc.size != np.unique(sc).size:
            raise ValueError("smallcell_set contains duplicates")
        if sc.size and (sc.min() < 0 or sc.max() >= self.n_groups):
            raise ValueError("smallcell_set index out of range")

    @property
    def n_groups(self) -> int:
        return self.positions.shape[0]

    @property
    def macro_set(self) -> np.ndarray:
        """Group indices not covered by a small cell (sorted)."""
        mask = np.ones(self.n_groups, dtype=bool)
        mask[self.smallcell_set] = False
        return np.flatnonzero(mask)

    @property
    def smallcell_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_groups, dtype=bool)
        mask[self.smallcell_set] = True
        return mask


def angular_spread(dist_macro, r_u: float):
    """Angular spread of a scattering ring of radius ``r_u`` seen at distance d.

    Returns arctan(r_u / d).  Requires d > r_u (the ring must not engulf the
    macro BS side of the geometry); accepts scalars or arrays.
    """
    d = np.asarray(dist_macro, dtype=float)
    if np.any(d <= r_u):
        raise ValueError(f"angular_spread requires dist_macro > r_u ({r_u})")
    out = np.arctan(r_u / d)
    return float(out) if np.isscalar(dist_macro) else out


def sample_layout(params: SimParams, rng: np.random.Generator) -> Layout:
    """Drop ``params.n_u`` groups i.i.d. uniform in area on the annulus.

    The small-cell set is left empty; use :func:`assign_small_cells` to fill
    it according to a deployment law.
    """
    u = rng.random(params.n_u)
    r = np.sqrt(params.r_excl**2 + u * (params.r_mc**2 - params.r_excl**2))
    phi = rng.uniform(-np.pi, np.pi, params.n_u)
    positions = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    layout = Layout(
        positions=positions,
        theta=phi,
        dist_macro=r,
        delta=angular_spread(r, params.r_u),
        smallcell_set=np.empty(0, dtype=int),
    )
    _check_annulus(layout, params)
    return layout


def layout_from_positions(positions, params: SimParams,
                          smallcell_set=()) -> Layout:
    """Build a Layout from explicit positions (toy / scripted geometries)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    r = np.linalg.norm(positions, axis=1)
    layout = Layout(
        positions=positions,
        theta=np.arctan2(positions[:, 1], positions[:, 0]),
        dist_macro=r,
        delta=angular_spread(r, params.r_u),
        smallcell_set=np.sort(np.asarray(list(smallcell_set), dtype=int)),
    )
    _check_annulus(layout, params)
    return layout


def assign_small_cells(layout: Layout, mode: str, n_f: int,
                       rng: np.random.Generator) -> Layout:
    """Select ``n_f`` groups (without replacement) to receive a small cell.

    ``uniform`` makes every subset equiprobable.  ``interior`` / ``edge``
    bias the selection so the covered groups' distance R from the center
    follows F(r) = r/r_mc resp. r^3/r_mc^3 (renormalized to the annulus):
    selection weights are the target density divided by the uniform-in-area
    density of the underlying positions, drawn by exponential-key weighted
    sampling without replacement.
    """
    if n_f > layout.n_groups:
        raise ValueError(f"n_f={n_f} exceeds the number of groups {layout.n_groups}")
    if mode not in DEPLOYMENT_MODES:
        raise ValueError(f"unknown deployment {mode!r}")
    if n_f == layout.n_groups:
        chosen = np.arange(layout.n_groups)
    elif mode == "uniform":
        chosen = rng.choice(layout.n_groups, size=n_f, replace=False)
    else:
        r = layout.dist_macro
        # uniform-in-area radial density is ~ r; targets are ~ 1 (interior), ~ r^2 (edge)
        weights = 1.0 / r if mode == "interior" else r
        keys = rng.random(layout.n_groups) ** (1.0 / weights)
        chosen = np.argpartition(keys, -n_f)[-n_f:]
    return replace(layout, smallcell_set=np.sort(np.asarray(chosen, dtype=int)))


def _check_annulus(layout: Layout, params: SimParams) -> None:
    d = layout.dist_macro
    if np.any(d < params.r_excl - 1e-9) or np.any(d > params.r_mc + 1e-9):
        raise ValueError("group distances violate [r_excl, r_mc]")
