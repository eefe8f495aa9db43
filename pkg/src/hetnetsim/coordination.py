"""Inter-tier coordination policies: none, ON/OFF, OFFLOAD, and TIN selection.

All four policies are pure functions of the deterministic link-gain table and
the slot schedule; none of them reads instantaneous fading.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .detequiv import LinkGainTable


def policy_none(table: LinkGainTable) -> np.ndarray:
    """No coordination: every small cell transmits on every slot."""
    return table.smallcell_set.copy()


def policy_onoff(selected, table: LinkGainTable, eps1: float, eps2: float,
                 p0: float, p1: float) -> np.ndarray:
    """Keep a small cell ON iff both cross-tier interference tests pass.

    Cell f stays ON when (i) the total macro interference its users receive
    is at most eps1 times their useful signal, and (ii) the interference it
    causes to every scheduled macro group g is at most eps2 times that
    group's useful signal.  With an empty macro schedule every cell is ON.
    """
    sc = table.smallcell_set
    G = np.asarray(list(selected), dtype=int)
    if G.size == 0 or sc.size == 0:
        return sc.copy()
    s_tot = int(table.s_g[G].sum())
    p0s = p0 / s_tot
    j_from_macro = table.xgain[np.ix_(sc, G)] @ table.s_g[G]        # per cell
    cond1 = p0s * j_from_macro <= eps1 * table.d_sc_own[sc] * (p1 / table.s_bar)
    # worst scheduled group for each cell
    lhs = table.agg[np.ix_(G, sc)] * p1                              # (|G|, |sc|)
    rhs = (eps2 * table.d_mc[G] * p0s)[:, None]
    cond2 = (lhs <= rhs).all(axis=0)
    return sc[cond1 & cond2]


def policy_offload(table: LinkGainTable, gamma: float, p0: float,
                   p1: float) -> dict[int, int]:
    """Absorb macro groups into their strongest small cell when it wins.

    Group g (macro side) is offloaded to f* = argmax_f a(g, f) iff its
    small-cell DE gain a(g,f*)(L-s_bar+1)(p1/s_bar) exceeds gamma times its
    isolated macro DE gain d_mc[g](p0/S_g).  Computed once per layout.
    """
    sc = table.smallcell_set
    out: dict[int, int] = {}
    if sc.size == 0:
        return out
    for g in table.macro_set:
        gains = table.agg[g, sc]
        f_star = int(sc[np.argmax(gains)])
        lhs = table.d_sc(g, f_star) * (p1 / table.s_bar)
        rhs = gamma * table.d_mc[g] * (p0 / table.s_g[g])
        if lhs > rhs:  # gamma=inf with d_mc=0 gives nan: comparison stays False
            out[g] = f_star
    return out


@dataclass
class TinLinkView:
    """Per-stream link view of a candidate schedule for the TIN test.

    ``cross[i, j]`` is the gain at the receiver of link i from the
    transmitter of link j (diagonal unused); ``power`` holds per-stream
    transmit powers.
    """

    direct: np.ndarray  # (n,)
    power: np.ndarray   # (n,)
    cross: np.ndarray   # (n, n)


def tin_condition_holds(view: TinLinkView) -> bool:
    """Treating-interference-as-noise optimality test.

    For every link i the direct power must dominate the product of the worst
    interference it receives and the worst interference it causes:
    direct_i * P_i >= (max_j cross[i,j] P_j) * (max_j cross[j,i] P_i).
    Maxima over an empty set are 0, so a single link always passes.
    """
    n = view.direct.shape[0]
    if n <= 1:
        return True
    recv = view.cross * view.power[None, :]
    caused = view.cross.T * view.power[:, None]
    np.fill_diagonal(recv, 0.0)
    np.fill_diagonal(caused, 0.0)
    lhs = view.direct * view.power
    rhs = recv.max(axis=1) * caused.max(axis=1)
    return bool(np.all(lhs >= rhs))


def build_tin_link_view(selected, active_cells, table: LinkGainTable,
                        p0: float, p1: float) -> TinLinkView:
    """Induced per-stream link set of a schedule, at the final powers."""
    G = np.asarray(list(selected), dtype=int)
    S_A = np.asarray(list(active_cells), dtype=int)
    links = np.concatenate((G, S_A))
    n = links.size
    nm = G.size
    power = np.empty(n)
    direct = np.empty(n)
    if nm:
        p0s = p0 / int(table.s_g[G].sum())
        power[:nm] = p0s
        direct[:nm] = table.d_mc[G]
    power[nm:] = p1 / table.s_bar
    direct[nm:] = table.d_sc_own[S_A]
    cross = np.zeros((n, n))
    if nm:
        cross[:nm, :nm] = table.xgain[np.ix_(G, G)]
        cross[nm:, :nm] = table.xgain[np.ix_(S_A, G)]
        cross[:nm, nm:] = table.agg[np.ix_(G, S_A)]
    cross[nm:, nm:] = table.agg[np.ix_(S_A, S_A)]
    np.fill_diagonal(cross, 0.0)
    return TinLinkView(direct=direct, power=power, cross=cross)


def _safe_div(num, den):
    """Elementwise num/den with zero denominators mapped to +inf."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.full(np.broadcast(num, den).shape, np.inf)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _selected_maxes(G, S_A, table):
    """Leave-one-out interference maxima of the already selected links."""
    xg, ag = table.xgain, table.agg
    info = {}
    for i, g in enumerate(G):
        others = [m for m in G if m != g]
        info[("recv_mc", g)] = max((xg[g, m] for m in others), default=0.0)
        info[("caused_mc", g)] = max((xg[m, g] for m in others), default=0.0)
        info[("recv_from_sc", g)] = ag[g, S_A].max() if len(S_A) else 0.0
        info[("caused_to_sc", g)] = max((xg[f, g] for f in S_A), default=0.0)
    for f in S_A:
        others = [x for x in S_A if x != f]
        info[("recv_mc", f)] = max((xg[f, m] for m in G), default=0.0)
        info[("recv_from_sc", f)] = max((ag[f, x] for x in others), default=0.0)
        info[("caused", f)] = max(
            max((ag[m, f] for m in G), default=0.0),
            max((ag[x, f] for x in others), default=0.0))
    return info


def _macro_candidate_kappas(cands, G, S_A, s_n, table, p0, p1):
    """Kappa grids for macro candidates; returns (feasible mask, products)."""
    xg, ag = table.xgain, table.agg
    p1s = p1 / table.s_bar
    p0s = p0 / (s_n + table.s_g[cands])          # per candidate
    info = _selected_maxes(G, S_A, table)
    log_prod = np.zeros(cands.size)
    feasible = np.ones(cands.size, dtype=bool)

    def absorb(kappa):
        nonlocal log_prod, feasible
        feasible &= kappa > 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_prod = log_prod + np.where(kappa > 0, np.log(kappa), -np.inf)

    for g2 in G:  # does adding the candidate keep macro link g2 TIN-feasible?
        b1 = np.maximum(np.maximum(p0s * info[("recv_mc", g2)],
                                   p1s * info[("recv_from_sc", g2)]),
                        p0s * xg[g2, cands])
        b2 = np.maximum(np.maximum(p0s * info[("caused_mc", g2)],
                                   p0s * info[("caused_to_sc", g2)]),
                        p0s * xg[cands, g2])
        absorb(_safe_div(table.d_mc[g2] * p0s, b1 * b2))
    for f in S_A:  # ... and small-cell link f?
        b1 = np.maximum(np.maximum(p0s * info[("recv_mc", f)],
                                   p1s * info[("recv_from_sc", f)]),
                        p0s * xg[f, cands])
        b2 = np.maximum(p1s * info[("caused", f)], p1s * ag[cands, f])
        absorb(_safe_div(table.d_sc_own[f] * p1s, b1 * b2))
    # the candidate's own condition
    recv = np.maximum(
        p0s * (xg[np.ix_(cands, G)].max(axis=1) if len(G) else 0.0),
        p1s * (ag[np.ix_(cands, S_A)].max(axis=1) if len(S_A) else 0.0))
    caused = p0s * np.maximum(
        xg[np.ix_(G, cands)].max(axis=0) if len(G) else 0.0,
        xg[np.ix_(S_A, cands)].max(axis=0) if len(S_A) else 0.0)
    absorb(_safe_div(table.d_mc[cands] * p0s, recv * caused))
    return feasible, log_prod


def _sc_candidate_kappas(cands, G, S_A, s_n, table, p0, p1):
    """Kappa grids for small-cell candidates; returns (feasible mask, products)."""
    xg, ag = table.xgain, table.agg
    p1s = p1 / table.s_bar
    p0n = p0 / s_n if s_n > 0 else 0.0           # only multiplies empty maxima when G is empty
    info = _selected_maxes(G, S_A, table)
    log_prod = np.zeros(cands.size)
    feasible = np.ones(cands.size, dtype=bool)

    def absorb(kappa):
        nonlocal log_prod, feasible
        feasible &= kappa > 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_prod = log_prod + np.where(kappa > 0, np.log(kappa), -np.inf)

    for g2 in G:
        b1 = np.maximum(np.maximum(p0n * info[("recv_mc", g2)],
                                   p1s * info[("recv_from_sc", g2)]),
                        p1s * ag[g2, cands])
        b2 = np.maximum(np.maximum(p0n * info[("caused_mc", g2)],
                                   p0n * info[("caused_to_sc", g2)]),
                        p0n * xg[cands, g2])
        absorb(_safe_div(table.d_mc[g2] * p0n, b1 * b2))
    for f in S_A:
        b1 = np.maximum(np.maximum(p0n * info[("recv_mc", f)],
                                   p1s * info[("recv_from_sc", f)]),
                        p1s * ag[f, cands])
        b2 = np.maximum(p1s * info[("caused", f)], p1s * ag[cands, f])
        absorb(_safe_div(table.d_sc_own[f] * p1s, b1 * b2))
    recv = np.maximum(
        p0n * (xg[np.ix_(cands, G)].max(axis=1) if len(G) else 0.0),
        p1s * (ag[np.ix_(cands, S_A)].max(axis=1) if len(S_A) else 0.0))
    caused = p1s * np.maximum(
        ag[np.ix_(G, cands)].max(axis=0) if len(G) else 0.0,
        ag[np.ix_(S_A, cands)].max(axis=0) if len(S_A) else 0.0)
    absorb(_safe_div(table.d_sc_own[cands] * p1s, recv * caused))
    return feasible, log_prod


def tin_select(priorities: np.ndarray, table: LinkGainTable, g_max: int,
               p0: float, p1: float,
               rng: np.random.Generator | None = None) -> tuple[list[int], list[int]]:
    """Greedy maximal TIN-feasible schedule across both tiers.

    Seeds with the strongest highest-priority direct link, then repeatedly
    adds, among the highest-priority candidates whose addition keeps every
    link TIN-feasible (macro per-stream power re-divided on each macro
    addition), the candidate with the largest product of feasibility margins.
    Returns (macro groups, active small cells); the output always satisfies
    :func:`tin_condition_holds` and no further candidate is addable.
    """
    mcand = [int(g) for g in np.flatnonzero(table.schedulable)]
    scand = [int(f) for f in table.smallcell_set]
    if not mcand and not scand:
        raise ValueError("empty candidate universe")
    pri = priorities
    p1s = p1 / table.s_bar

    universe = np.array(mcand + scand, dtype=int)
    c_max = pri[universe].max()
    top_mc = [g for g in mcand if pri[g] == c_max]
    top_sc = [f for f in scand if pri[f] == c_max]
    val_mc = max(((table.d_mc[g] * p0 / table.s_g[g], -g) for g in top_mc),
                 default=(-np.inf, 0))
    val_sc = max(((table.d_sc_own[f] * p1s, -f) for f in top_sc),
                 default=(-np.inf, 0))
    G: list[int] = []
    S_A: list[int] = []
    if val_mc[0] > val_sc[0]:
        G.append(-val_mc[1])
    else:
        S_A.append(-val_sc[1])
    m_res = [g for g in mcand if g not in G]
    s_res = [f for f in scand if f not in S_A]

    while True:
        s_n = int(table.s_g[G].sum()) if G else 0
        mc_arr = np.array(m_res, dtype=int)
        sc_arr = np.array(s_res, dtype=int)
        feas_pairs = []
        if mc_arr.size and len(G) < g_max:
            ok, lp = _macro_candidate_kappas(mc_arr, G, S_A, s_n, table, p0, p1)
            feas_pairs += [(int(c), True, float(v)) for c, v in
                           zip(mc_arr[ok], lp[ok])]
        if sc_arr.size:
            ok, lp = _sc_candidate_kappas(sc_arr, G, S_A, s_n, table, p0, p1)
            feas_pairs += [(int(c), False, float(v)) for c, v in
                           zip(sc_arr[ok], lp[ok])]
        if not feas_pairs:
            break
        c_max = max(pri[c] for c, _, _ in feas_pairs)
        pool = [t for t in feas_pairs if pri[t[0]] == c_max]
        best_mc = max((t for t in pool if t[1]), default=None,
                      key=lambda t: (t[2], -t[0]))
        best_sc = max((t for t in pool if not t[1]), default=None,
                      key=lambda t: (t[2], -t[0]))
        if best_mc is not None and (best_sc is None or best_mc[2] > best_sc[2]):
            G.append(best_mc[0])
            m_res.remove(best_mc[0])
        else:
            S_A.append(best_sc[0])
            s_res.remove(best_sc[0])
    return G, S_A


def tin_addable(candidate: int, is_macro: bool, selected, active_cells,
                table: LinkGainTable, p0: float, p1: float) -> bool:
    """Would adding this single candidate keep the schedule TIN-feasible?"""
    G = [int(g) for g in selected]
    S_A = [int(f) for f in active_cells]
    s_n = int(table.s_g[G].sum()) if G else 0
    cands = np.array([candidate], dtype=int)
    fn = _macro_candidate_kappas if is_macro else _sc_candidate_kappas
    ok, _ = fn(cands, G, S_A, s_n, table, p0, p1)
    return bool(ok[0])
