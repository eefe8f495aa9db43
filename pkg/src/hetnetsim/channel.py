"""Path gains, one-ring channel covariances, and per-group channel models.

The macro BS sees each hotspot through a ring of scatterers, which yields a
Toeplitz covariance parameterized by the group's angle of arrival and angular
spread.  Small-cell links are isotropic with a distance/wall path-loss gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import toeplitz

from .geometry import Layout, SimParams

MACRO = 0  # transmitter index of the macro BS in the path-gain matrix


class QuadratureError(RuntimeError):
    """Covariance quadrature failed to reach the requested tolerance."""


def path_gain(d, n_w, params: SimParams):
    """Linear path gain through ``n_w`` walls at distance ``d``.

    w^{n_w} / (1 + (d/d0)^alpha) with w the linear per-wall loss.
    Accepts scalars or broadcastable arrays.
    """
    w_lin = 10.0 ** (-params.w_db / 10.0)
    return w_lin ** np.asarray(n_w) / (1.0 + (np.asarray(d, dtype=float) / params.d0) ** params.alpha)


def wall_count(g: int, f: int, layout: Layout) -> int:
    """Number of walls between transmitter indices g and f.

    Indices are 1-based group ids with 0 = the macro BS.  Groups covered by a
    small cell count as indoor (one wall each); macro-served groups and the
    elevated macro BS itself are wall-free endpoints.
    """
    if g == f:
        return 0
    in_s = layout.smallcell_mask
    side = lambda i: 0 if i == MACRO else int(in_s[i - 1])
    return side(g) + side(f)


@dataclass(frozen=True)
class PathGainMatrix:
    """All pairwise link gains; row/column 0 is the macro BS."""

    a: np.ndarray    # (n_u+1, n_u+1) linear gains, symmetric
    n_w: np.ndarray  # (n_u+1, n_u+1) wall counts

    @property
    def a0(self) -> np.ndarray:
        """Macro-to-group gains, indexed by group (0-based)."""
        return self.a[1:, 0]

    @property
    def agg(self) -> np.ndarray:
        """Group-to-group gains, 0-based on both axes."""
        return self.a[1:, 1:]


def build_path_gains(layout: Layout, params: SimParams) -> PathGainMatrix:
    n = layout.n_groups
    pos = np.vstack((np.zeros((1, 2)), layout.positions))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    indoor = np.concatenate(([0], layout.smallcell_mask.astype(int)))
    n_w = indoor[:, None] + indoor[None, :]
    np.fill_diagonal(n_w, 0)
    a = path_gain(dist, n_w, params)
    np.fill_diagonal(a, path_gain(0.0, 0, params))  # self links: no wall, d=0
    return PathGainMatrix(a=a, n_w=n_w)


@lru_cache(maxsize=16)
def _gl_nodes(n: int):
    return leggauss(n)


def one_ring_lags(theta: float, delta: float, a_g0: float, m_antennas: int,
                  tol: float = 1e-9, max_nodes: int = 8192) -> np.ndarray:
    """Lag sequence c(k), k = 0..M-1, of the one-ring Toeplitz covariance.

    c(k) = a_g0/(2*delta) * integral_{theta-delta}^{theta+delta}
           exp(-j*pi*k*sin(alpha)) d(alpha),
    computed by Gauss-Legendre quadrature with node doubling until two
    successive grids agree within ``tol`` per entry.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    k = np.arange(m_antennas)

    def estimate(n):
        x, w = _gl_nodes(n)
        # /(2*delta) cancels the interval half-length: 0.5 * sum w_j f(x_j)
        return 0.5 * np.exp(-1j * np.pi * np.outer(k, np.sin(theta + delta * x))) @ w

    n = 64
    prev = estimate(n)
    while n < max_nodes:
        n *= 2
        cur = estimate(n)
        if np.max(np.abs(cur - prev)) <= tol:
            return a_g0 * cur
        prev = cur
    raise QuadratureError(
        f"one-ring quadrature did not converge to {tol} within {max_nodes} nodes "
        f"(theta={theta}, delta={delta}, M={m_antennas})")


def one_ring_covariance(theta: float, delta: float, a_g0: float,
                        m_antennas: int, tol: float = 1e-9) -> np.ndarray:
    """M x M Hermitian PSD one-ring covariance with trace M*a_g0."""
    c = one_ring_lags(theta, delta, a_g0, m_antennas, tol)
    return toeplitz(c, c.conj())


def eigen_model(R: np.ndarray, beta: float, rank_threshold: float = 1e-3):
    """Eigen-structure, effective rank and stream count of a covariance.

    Returns (eigvals descending, U_star, r_g, b_g, s_g) where r_g is the
    smallest k whose top-k eigenvalues capture >= (1 - rank_threshold) of
    the trace, b_g = r_g, and s_g = max(1, floor(beta * r_g)).
    """
    R = np.asarray(R)
    tr = np.trace(R).real
    if not np.allclose(R, R.conj().T, atol=1e-9 * max(tr, 1.0)):
        raise ValueError("covariance is not Hermitian")
    ev, U = np.linalg.eigh(R)
    ev = ev[::-1]
    U = np.ascontiguousarray(U[:, ::-1])
    if ev[-1] < -1e-9 * max(tr, 1.0):
        raise ValueError("covariance is not PSD")
    ev = np.clip(ev, 0.0, None)
    if tr <= 0:
        raise ValueError("covariance has nonpositive trace")
    r_g = int(np.searchsorted(np.cumsum(ev), (1.0 - rank_threshold) * ev.sum()) + 1)
    s_g = max(1, int(np.floor(beta * r_g)))
    return ev, np.ascontiguousarray(U[:, :r_g]), r_g, r_g, s_g


def support_interval(theta: float, delta: float) -> tuple[float, float]:
    """Angular support of the covariance in spatial-frequency units.

    The endpoints -sin(theta +/- delta)/2 are sorted so the interval is
    well-ordered for any angle of arrival.
    """
    e1 = -0.5 * np.sin(theta + delta)
    e2 = -0.5 * np.sin(theta - delta)
    return (min(e1, e2), max(e1, e2))


@dataclass
class GroupChannelModel:
    """Second-order channel description of one user group at the macro BS."""

    theta: float
    delta: float
    a_g0: float
    m_antennas: int
    lags: np.ndarray      # (M,) first Toeplitz column of the covariance
    eigvals: np.ndarray   # (M,) descending, clipped at 0
    u_star: np.ndarray    # (M, r_g) dominant eigenbasis = pre-beamformer B
    r_g: int
    b_g: int
    s_g: int
    interval: tuple[float, float]
    _sqrt: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def pre_beamformer(self) -> np.ndarray:
        return self.u_star

    def covariance(self) -> np.ndarray:
        return toeplitz(self.lags, self.lags.conj())

    def sqrt_factor(self) -> np.ndarray:
        """M x M factor A with A A^H = R, for drawing channel vectors."""
        if self._sqrt is None:
            ev, U = np.linalg.eigh(self.covariance())
            self._sqrt = U * np.sqrt(np.clip(ev, 0.0, None))
        return self._sqrt


def build_group_model(theta: float, delta: float, a_g0: float,
                      params: SimParams) -> GroupChannelModel:
    lags = one_ring_lags(theta, delta, a_g0, params.M)
    R = toeplitz(lags, lags.conj())
    ev, u_star, r_g, b_g, s_g = eigen_model(R, params.beta, params.rank_threshold)
    return GroupChannelModel(
        theta=theta, delta=delta, a_g0=a_g0, m_antennas=params.M,
        lags=lags, eigvals=ev, u_star=u_star, r_g=r_g, b_g=b_g, s_g=s_g,
        interval=support_interval(theta, delta),
    )


def build_channel_models(layout: Layout, pathgains: PathGainMatrix,
                         params: SimParams) -> list[GroupChannelModel]:
    """One-ring model of every group, with the macro-link gain baked in."""
    return [
        build_group_model(layout.theta[g], layout.delta[g], pathgains.a0[g], params)
        for g in range(layout.n_groups)
    ]
