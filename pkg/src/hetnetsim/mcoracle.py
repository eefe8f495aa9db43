"""Finite-antenna Monte-Carlo oracle for the deterministic equivalents.

Draws explicit Gaussian channels, builds the two-stage (pre-beamformer +
zero-forcing) macro precoders and the small cells' zero-forcing precoders,
and evaluates the received SINRs term by term.  Used to validate the
covariance-only SINR approximations.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .channel import GroupChannelModel, PathGainMatrix
from .detequiv import LinkGainTable, macro_sinr_de, smallcell_sinr_de
from .geometry import Layout


class RankDeficientChannelError(RuntimeError):
    """Effective channel lost rank; resample users."""


@dataclass
class ChannelRealization:
    """One small-scale fading draw for a fixed slot schedule.

    ``h_macro[v]`` is the M x (users of v) matrix of macro-BS channels for
    every victim group v (scheduled macro groups and active small-cell
    groups).  ``h_sc[(v, f)]`` is the L x (users of v) channel matrix from
    the small cell at f to the users of group v, i.i.d. with per-entry
    variance a(v, f).
    """

    h_macro: dict[int, np.ndarray]
    h_sc: dict[tuple[int, int], np.ndarray]
    users: dict[int, int]
    selected: np.ndarray
    active_cells: np.ndarray


def _cgauss(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channels(layout: Layout, models: list[GroupChannelModel],
                  selected, active_cells, s_bar: int, l_antennas: int,
                  pathgains: PathGainMatrix,
                  rng: np.random.Generator) -> ChannelRealization:
    """Draw the fading realization needed to evaluate one slot's SINRs.

    Macro channels follow each group's one-ring covariance (h = A w with
    A A^H = R and w standard complex Gaussian, independent across users);
    small-cell channels are i.i.d. with the pairwise path-gain variance.
    """
    G = np.asarray(list(selected), dtype=int)
    S_A = np.asarray(list(active_cells), dtype=int)
    users = {int(g): int(models[g].s_g) for g in G}
    users.update({int(f): s_bar for f in S_A})
    h_macro = {}
    for v in users:
        A = models[v].sqrt_factor()
        h_macro[v] = A @ _cgauss(rng, (A.shape[1], users[v]))
    h_sc = {}
    for f in S_A:
        for v in users:
            std = np.sqrt(pathgains.agg[v, int(f)])
            h_sc[(v, int(f))] = std * _cgauss(rng, (l_antennas, users[v]))
    return ChannelRealization(h_macro=h_macro, h_sc=h_sc, users=users,
                              selected=G, active_cells=S_A)


@dataclass
class Precoders:
    """Unit-norm per-stream precoders for one realization."""

    p_macro: dict[int, np.ndarray]  # g -> (b_g, S_g), columns unit norm
    q_sc: dict[int, np.ndarray]     # f -> (L, s_bar), columns unit norm


def _normalized_zf(h_eff: np.ndarray) -> np.ndarray:
    """Column-normalized Moore-Penrose pseudo-inverse precoder of h_eff (dims x users)."""
    gram = h_eff.conj().T @ h_eff
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise RankDeficientChannelError("rank-deficient effective channel: resample users")
    p = h_eff @ np.linalg.inv(gram)
    return p / np.linalg.norm(p, axis=0, keepdims=True)


def zf_precoders(real: ChannelRealization, models: list[GroupChannelModel]) -> Precoders:
    """Per-group macro ZF on the projected channels and per-cell ZF."""
    p_macro = {}
    for g in real.selected:
        B = models[g].pre_beamformer
        p_macro[int(g)] = _normalized_zf(B.conj().T @ real.h_macro[int(g)])
    q_sc = {}
    for f in real.active_cells:
        q_sc[int(f)] = _normalized_zf(real.h_sc[(int(f), int(f))])
    return Precoders(p_macro=p_macro, q_sc=q_sc)


def empirical_sinr(real: ChannelRealization, precoders: Precoders,
                   models: list[GroupChannelModel], p0: float, p1: float,
                   s_bar: int) -> dict[tuple[str, int], np.ndarray]:
    """Per-user received SINRs of one realization, evaluated term by term.

    Returns {("mc", g): array of S_g user SINRs, ("sc", f): array of s_bar}.
    Intra-group streams are exactly nulled by ZF and carry no term.
    """
    G, S_A = real.selected, real.active_cells
    s_tot = sum(real.users[int(g)] for g in G)
    out = {}
    for g in G:
        g = int(g)
        B = models[g].pre_beamformer
        h_eff = real.h_macro[g].conj().T @ B           # (users, b)
        sig = np.abs(np.einsum("ub,bu->u", h_eff, precoders.p_macro[g])) ** 2 * (p0 / s_tot)
        den = np.ones(real.users[g])
        for g2 in G:
            g2 = int(g2)
            if g2 == g:
                continue
            B2 = models[g2].pre_beamformer
            leak = real.h_macro[g].conj().T @ B2 @ precoders.p_macro[g2]
            den += np.linalg.norm(leak, axis=1) ** 2 * (p0 / s_tot)
        for f in S_A:
            leak = real.h_sc[(g, int(f))].conj().T @ precoders.q_sc[int(f)]
            den += np.linalg.norm(leak, axis=1) ** 2 * (p1 / s_bar)
        out[("mc", g)] = sig / den
    for f in S_A:
        f = int(f)
        h_own = real.h_sc[(f, f)]
        sig = np.abs(np.einsum("ul,lu->u", h_own.conj().T, precoders.q_sc[f])) ** 2 * (p1 / s_bar)
        den = np.ones(real.users[f])
        for g in G:
            g = int(g)
            B = models[g].pre_beamformer
            leak = real.h_macro[f].conj().T @ B @ precoders.p_macro[g]
            den += np.linalg.norm(leak, axis=1) ** 2 * (p0 / s_tot)
        for f2 in S_A:
            f2 = int(f2)
            if f2 == f:
                continue
            leak = real.h_sc[(f, f2)].conj().T @ precoders.q_sc[f2]
            den += np.linalg.norm(leak, axis=1) ** 2 * (p1 / s_bar)
        out[("sc", f)] = sig / den
    return out


def compare_de_to_empirical(layout: Layout, models: list[GroupChannelModel],
                            pathgains: PathGainMatrix, table: LinkGainTable,
                            selected, active_cells, p0: float, p1: float,
                            n_draws: int, l_antennas: int,
                            rng: np.random.Generator) -> dict[tuple[str, int], dict]:
    """DE SINR vs the empirical median over ``n_draws`` fading draws.

    Returns {("mc"/"sc", group): {"de":, "empirical_median":, "rel_err":}}.
    """
    samples: dict[tuple[str, int], list] = {}
    for _ in range(n_draws):
        real = draw_channels(layout, models, selected, active_cells,
                             table.s_bar, l_antennas, pathgains, rng)
        prec = zf_precoders(real, models)
        for key, vals in empirical_sinr(real, prec, models, p0, p1, table.s_bar).items():
            samples.setdefault(key, []).extend(vals)
    out = {}
    for key, vals in samples.items():
        kind, g = key
        de = (macro_sinr_de(g, selected, active_cells, table, p0, p1) if kind == "mc"
              else smallcell_sinr_de(g, selected, active_cells, table, p0, p1))
        med = float(np.median(vals))
        out[key] = {"de": de, "empirical_median": med,
                    "rel_err": abs(de - med) / med}
    return out
