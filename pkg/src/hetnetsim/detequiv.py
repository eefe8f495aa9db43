"""Deterministic-equivalent link gains and SINRs.

Large-dimension random-matrix approximations replace all fading-dependent
SINR terms by quantities that depend only on the channel covariances: a
per-group fixed point m_g gives the zero-forcing beamforming gain, and a
trace functional of the source group's resolvent gives every cross gain.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .channel import GroupChannelModel, PathGainMatrix
from .geometry import Layout, SimParams


class FixedPointError(RuntimeError):
    """Fixed-point iteration did not converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate: float, iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class DegenerateLoadingError(ValueError):
    """Stream count >= positive spectrum size: the fixed point collapses to 0."""


@dataclass
class FixedPointSolution:
    m: float
    T: np.ndarray        # (b, b) Hermitian, I + (S/b) * B^H R B / m
    F: float             # in [0, 1) for a valid loading
    converged: bool
    iterations: int


def _spectrum_fixed_point(lam: np.ndarray, s_g: int, b_g: int,
                          tol: float = 1e-10, max_iter: int = 500):
    """Solve m = (1/b) sum_i lam_i / (1 + (S/b) lam_i / m) on a spectrum.

    Returns (m, F, iterations).  Raises DegenerateLoadingError when the
    loading admits no positive solution (S >= number of positive eigenvalues).
    """
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    if lam.sum() <= 0:
        raise DegenerateLoadingError("degenerate loading: zero spectrum")
    m = lam.sum() / b_g
    if s_g == 0:
        return m, 0.0, 1
    r_pos = int(np.count_nonzero(lam > 1e-12 * lam.max()))
    if s_g >= r_pos:
        raise DegenerateLoadingError(
            f"degenerate loading: s_g={s_g} >= positive spectrum size {r_pos}")
    ratio = s_g / b_g

    def update(x):
        return np.sum(lam / (1.0 + ratio * lam / x)) / b_g

    it = 0
    for it in range(1, max_iter + 1):
        m_new = update(m)
        if abs(m_new - m) <= tol * abs(m):
            # Aitken extrapolation: the iteration is linearly convergent, so
            # a small relative *change* can still leave an O(tol) residual
            m1 = m_new
            m2 = update(m1)
            denom = (m2 - m1) - (m1 - m)
            if denom != 0.0:
                m_acc = m2 - (m2 - m1) ** 2 / denom
                if np.isfinite(m_acc) and m_acc > 0:
                    m2 = update(m_acc)
            m = m2
            break
        m = m_new
    else:
        raise FixedPointError(
            f"fixed point not converged after {max_iter} iterations", m, max_iter)
    t = lam / (1.0 + ratio * lam / m)
    F = (s_g / b_g**2) * np.sum(t**2) / m**2
    return m, F, it


def solve_fixed_point(B: np.ndarray, R: np.ndarray, s_g: int,
                      tol: float = 1e-10, max_iter: int = 500) -> FixedPointSolution:
    """Fixed point of the zero-forcing deterministic equivalent.

    B is the (column-orthonormal) pre-beamformer, R the group covariance,
    s_g the number of served streams.  The direct-link DE gain is b_g * m.
    """
    E = B.conj().T @ R @ B
    E = 0.5 * (E + E.conj().T)
    b_g = E.shape[0]
    lam = np.linalg.eigvalsh(E)
    m, F, it = _spectrum_fixed_point(lam, s_g, b_g, tol, max_iter)
    T = np.eye(b_g) + (s_g / b_g) * E / m
    return FixedPointSolution(m=m, T=T, F=F, converged=True, iterations=it)


def intergroup_gain(B_g: np.ndarray, R_g: np.ndarray, R_src: np.ndarray,
                    fp: FixedPointSolution) -> tuple[float, float]:
    """Cross-link DE quantities (n, gain = n / m) for one victim covariance.

    (B_g, R_g, fp) belong to the group whose zero-forcing precoder radiates
    the interference; R_src is the covariance of the link it leaks into.
    The per-victim-user interference from that precoder is
    s_g * gain * (per-stream power).
    """
    if not fp.converged:
        raise ValueError("fixed point has not converged")
    if fp.F >= 1.0:
        raise ValueError(f"invalid loading: F={fp.F} >= 1")
    b_g = B_g.shape[1]
    E = B_g.conj().T @ R_g @ B_g
    Tinv = np.linalg.inv(fp.T)
    X = B_g.conj().T @ R_src @ B_g
    n = np.trace(E @ Tinv @ X @ Tinv).real / b_g / (1.0 - fp.F)
    return n, n / fp.m


def powers_from_params(params: SimParams) -> tuple[float, float]:
    """Macro and small-cell transmit powers, noise normalized to 1.

    P0 makes a single-antenna cell-edge link hit the configured SNR;
    P1 sits at the configured dB offset below P0.
    """
    p0 = 10.0 ** (params.cell_edge_snr_db / 10.0) * (1.0 + (params.r_mc / params.d0) ** params.alpha)
    return p0, p0 * 10.0 ** (params.p1_over_p0_db / 10.0)


@dataclass
class LinkGainTable:
    """All deterministic link gains of one layout.

    ``xgain[v, s]`` is the per-stream cross gain at victim group v from the
    macro precoder serving group s (columns are valid only where
    ``schedulable[s]``); ``agg`` are the isotropic group-to-group gains used
    for every small-cell-radiated link.
    """

    s_bar: int
    l_antennas: int
    a0: np.ndarray             # (n,) macro-to-group path gains
    agg: np.ndarray            # (n, n) group-to-group path gains
    s_g: np.ndarray            # (n,) macro streams per group (int)
    r_g: np.ndarray            # (n,) effective ranks (int)
    m: np.ndarray              # (n,) fixed-point solutions, 0 where unavailable
    F: np.ndarray              # (n,)
    d_mc: np.ndarray           # (n,) = b_g * m_g, 0 where unavailable
    xgain: np.ndarray          # (n, n) DE cross gains, victim-major
    schedulable: np.ndarray    # (n,) bool: macro-side group with a valid DE
    degenerate: np.ndarray     # (n,) bool: macro-side group with collapsed DE
    smallcell_mask: np.ndarray # (n,) bool
    intervals: np.ndarray      # (n, 2) angular supports (lo, hi)

    @property
    def n_groups(self) -> int:
        return self.a0.shape[0]

    @property
    def smallcell_set(self) -> np.ndarray:
        return np.flatnonzero(self.smallcell_mask)

    @property
    def macro_set(self) -> np.ndarray:
        return np.flatnonzero(~self.smallcell_mask)

    @property
    def sc_array_factor(self) -> int:
        """Zero-forcing array gain of a small cell: L - s_bar + 1."""
        return self.l_antennas - self.s_bar + 1

    @property
    def d_sc_own(self) -> np.ndarray:
        """Direct DE gain of each group if served by its co-located cell."""
        return np.diag(self.agg) * self.sc_array_factor

    def d_sc(self, g, f):
        """Direct DE gain of group g when served by the small cell at f."""
        return self.agg[g, f] * self.sc_array_factor

    def interval_disjoint(self, g: int, f: int) -> bool:
        lo, hi = self.intervals[:, 0], self.intervals[:, 1]
        return bool(hi[g] < lo[f] or hi[f] < lo[g])


def build_link_gain_table(layout: Layout, models: list[GroupChannelModel],
                          pathgains: PathGainMatrix, params: SimParams) -> LinkGainTable:
    """Fixed points and the full cross-gain table for one layout.

    Cross gains use the Toeplitz structure of the victim covariances:
    tr(K_s R_v) = sum_k lag_v(k) * diagsum_k(K_s), so each (victim, source)
    pair costs O(M) instead of O(M^2).
    """
    n = layout.n_groups
    M = params.M
    s_g = np.array([md.s_g for md in models], dtype=int)
    r_g = np.array([md.r_g for md in models], dtype=int)
    m = np.zeros(n)
    F = np.zeros(n)
    d_mc = np.zeros(n)
    schedulable = np.zeros(n, dtype=bool)
    degenerate = np.zeros(n, dtype=bool)
    sc_mask = layout.smallcell_mask

    # full lag rows, k = -(M-1) .. M-1, for every victim group
    lag_rows = np.empty((n, 2 * M - 1), dtype=complex)
    for v, md in enumerate(models):
        lag_rows[v, M - 1:] = md.lags
        lag_rows[v, :M - 1] = md.lags[:0:-1].conj()

    sources = []
    diag_sums = []
    scale = []
    for g in np.flatnonzero(~sc_mask):
        md = models[g]
        lam = md.eigvals[:md.r_g]
        try:
            m_g, F_g, _ = _spectrum_fixed_point(lam, md.s_g, md.b_g)
        except DegenerateLoadingError:
            degenerate[g] = True
            continue
        m[g], F[g] = m_g, F_g
        d_mc[g] = md.b_g * m_g
        schedulable[g] = True
        # K = U* diag(w) U*^H with w = lam / (1 + (S/b) lam/m)^2
        w = lam / (1.0 + (md.s_g / md.b_g) * lam / m_g) ** 2
        K = (md.u_star * w) @ md.u_star.conj().T
        ds = np.array([K.diagonal(k).sum() for k in range(-(M - 1), M)])
        sources.append(g)
        diag_sums.append(ds)
        scale.append(1.0 / (md.b_g * (1.0 - F_g) * m_g))

    xgain = np.zeros((n, n))
    if sources:
        D = np.column_stack(diag_sums)             # (2M-1, n_src)
        vals = (lag_rows @ D).real * np.asarray(scale)
        vals = np.clip(vals, 0.0, None)            # tiny negatives from roundoff
        xgain[:, sources] = vals
        xgain[sources, sources] = 0.0
    intervals = np.array([md.interval for md in models])
    return LinkGainTable(
        s_bar=params.s_bar, l_antennas=params.L,
        a0=pathgains.a0.copy(), agg=pathgains.agg.copy(),
        s_g=s_g, r_g=r_g, m=m, F=F, d_mc=d_mc, xgain=xgain,
        schedulable=schedulable, degenerate=degenerate,
        smallcell_mask=sc_mask, intervals=intervals,
    )


def _as_index(groups) -> np.ndarray:
    return np.asarray(list(groups), dtype=int)


def macro_sinr_de(g: int, selected, active_cells, table: LinkGainTable,
                  p0: float, p1: float) -> float:
    """DE SINR of a macro-served group under the given slot schedule."""
    G = _as_index(selected)
    if G.size == 0:
        raise ValueError("empty macro schedule")
    if g not in G:
        raise ValueError(f"group {g} is not in the schedule")
    S_A = _as_index(active_cells)
    s_tot = int(table.s_g[G].sum())
    others = G[G != g]
    den = 1.0
    if others.size:
        den += np.sum(table.xgain[g, others] * table.s_g[others]) * (p0 / s_tot)
    if S_A.size:
        den += np.sum(table.agg[g, S_A]) * p1
    return table.d_mc[g] * (p0 / s_tot) / den


def smallcell_sinr_de(f: int, selected, active_cells, table: LinkGainTable,
                      p0: float, p1: float) -> float:
    """DE SINR of a group served by its co-located small cell."""
    S_A = _as_index(active_cells)
    if f not in S_A:
        raise ValueError(f"small cell {f} is not active")
    G = _as_index(selected)
    den = 1.0
    if G.size:
        s_tot = int(table.s_g[G].sum())
        den += np.sum(table.xgain[f, G] * table.s_g[G]) * (p0 / s_tot)
    others = S_A[S_A != f]
    if others.size:
        den += np.sum(table.agg[f, others]) * p1
    return table.d_sc_own[f] * (p1 / table.s_bar) / den


def offloaded_sinr_de(g: int, serving: int, selected, active_cells,
                      table: LinkGainTable, p0: float, p1: float) -> float:
    """DE SINR of group g while absorbed (in TDMA) by the small cell at ``serving``."""
    S_A = _as_index(active_cells)
    if serving not in S_A:
        raise ValueError(f"serving cell {serving} is not active")
    G = _as_index(selected)
    den = 1.0
    if G.size:
        s_tot = int(table.s_g[G].sum())
        den += np.sum(table.xgain[g, G] * table.s_g[G]) * (p0 / s_tot)
    others = S_A[S_A != serving]
    if others.size:
        den += np.sum(table.agg[g, others]) * p1
    return table.d_sc(g, serving) * (p1 / table.s_bar) / den
