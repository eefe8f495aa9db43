"""Experiment orchestration: config files, parameter sweeps, CSV/JSON output.

Config files are flat ``key = value`` text with comma-separated lists and
``a:b`` ranges for the macro group-count sweep.  Every output row carries the
master seed and a hash of the resolved configuration so runs are replayable.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import build_channel_models, build_path_gains
from .detequiv import build_link_gain_table, powers_from_params
from .geometry import DEPLOYMENT_MODES, POLICIES, SimParams, assign_small_cells, sample_layout
from .mcoracle import compare_de_to_empirical
from .scheduler import ScheduleState, select_user_groups
from .simharness import aggregate, run_drop

_FLOAT_FIELDS = {"r_mc", "r_excl", "d0", "alpha", "w_db", "beta", "r_u",
                 "cell_edge_snr_db", "p1_over_p0_db", "epsilon1", "epsilon2",
                 "rank_threshold"}
_INT_FIELDS = {"n_u", "M", "L"}


@dataclass
class ExperimentConfig:
    """Base simulation parameters plus the sweep axes."""

    params: SimParams = field(default_factory=SimParams)
    policies: list[str] = field(default_factory=lambda: ["none"])
    deployments: list[str] = field(default_factory=lambda: ["uniform"])
    g_list: list[int] = field(default_factory=lambda: [5])
    gamma_list: list[float] = field(default_factory=lambda: [1.0])
    nf_list: list[int] = field(default_factory=lambda: [20])
    seed: int = 0
    out_dir: str = "out"
    drops: int = 100
    slots: int = 200
    workers: int = 1
    write_ratecdf: bool = True

    def validate(self):
        for name in ("policies", "deployments", "g_list", "gamma_list", "nf_list"):
            if not getattr(self, name):
                raise ValueError(f"{name}: sweep list must be nonempty")
        for p in self.policies:
            if p not in POLICIES:
                raise ValueError(f"policy: unknown value {p!r}")
        for d in self.deployments:
            if d not in DEPLOYMENT_MODES:
                raise ValueError(f"deployment: unknown value {d!r}")
        if self.drops < 1 or self.slots < 1 or self.workers < 1:
            raise ValueError("drops, slots and workers must be >= 1")

    def resolved(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        d["library_version"] = __version__
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.resolved(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    return raw


def _parse_list(raw: str, cast):
    return [cast(tok.strip()) for tok in raw.split(",") if tok.strip()]


def _parse_g_spec(raw: str) -> list[int]:
    raw = raw.strip()
    if ":" in raw:
        a, b = raw.split(":")
        return list(range(int(a), int(b) + 1))
    return _parse_list(raw, int)


def load_config(path) -> ExperimentConfig:
    """Parse a flat key=value config file; unset keys take the defaults."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cfg = ExperimentConfig()
    overrides = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (tok.strip() for tok in line.split("=", 1))
        try:
            if key == "policy":
                cfg.policies = _parse_list(raw, str)
            elif key == "deployment":
                cfg.deployments = _parse_list(raw, str)
            elif key == "g":
                cfg.g_list = _parse_g_spec(raw)
            elif key == "gamma":
                cfg.gamma_list = _parse_list(raw, float)
            elif key == "nf":
                cfg.nf_list = _parse_list(raw, int)
            elif key == "seed":
                cfg.seed = int(raw)
            elif key == "out":
                cfg.out_dir = raw
            elif key == "drops":
                cfg.drops = int(raw)
            elif key == "slots":
                cfg.slots = int(raw)
            elif key == "workers":
                cfg.workers = int(raw)
            elif key == "write_ratecdf":
                cfg.write_ratecdf = raw.lower() in ("1", "true", "yes")
            elif key in {f.name for f in fields(SimParams)}:
                overrides[key] = _parse_value(key, raw)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {key}: {exc}") from exc
    try:
        cfg.params = replace(cfg.params, **overrides)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    cfg.validate()
    return cfg


def _sweep_points(cfg: ExperimentConfig):
    idx = 0
    for policy in cfg.policies:
        for dep in cfg.deployments:
            for g in cfg.g_list:
                for gamma in cfg.gamma_list:
                    for nf in cfg.nf_list:
                        yield idx, policy, dep, g, gamma, nf
                        idx += 1


def _run_point(args):
    """One sweep point: n_drops drops with derived per-drop seeds."""
    (idx, policy, dep, g, gamma, nf, base_params, drops, slots, seed, chash) = args
    params = replace(base_params, deployment=dep, g_max=g, gamma=gamma,
                     n_f=nf, slots_per_drop=slots)
    drop_seeds = np.random.SeedSequence(entropy=seed, spawn_key=(idx,)).generate_state(drops)
    results = []
    for ds in drop_seeds:
        res = run_drop(params, policy, np.random.default_rng(int(ds)))
        res.seed = seed
        res.config_hash = chash
        results.append(res)
    return idx, (policy, dep, g, gamma, nf), aggregate(results)


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run the sweep and write tradeoff/ratecdf/offload CSVs plus a manifest.

    Returns a process exit code (nonzero if any sweep point failed).
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = cfg.config_hash()
    points = list(_sweep_points(cfg))
    jobs = [(idx, pol, dep, g, gamma, nf, cfg.params, cfg.drops, cfg.slots,
             cfg.seed, chash) for idx, pol, dep, g, gamma, nf in points]
    results = {}
    failures = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for job, outcome in zip(jobs, pool.map(_run_point_safe, jobs)):
                _record(job, outcome, results, failures)
    else:
        for job in jobs:
            _record(job, _run_point_safe(job), results, failures)

    meta_cols = ["seed", "config_hash", "policy", "deployment", "G", "gamma", "N_f"]
    with open(out / "tradeoff.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(meta_cols + ["macro_total", "sc_total", "ci", "sc_ci"])
        for idx in sorted(results):
            key, summ = results[idx]
            wr.writerow([cfg.seed, chash, *key[:2], key[2], _fmt(key[3]), key[4],
                         _fmt(summ.macro_total_mean), _fmt(summ.smallcell_total_mean),
                         _fmt(summ.macro_total_ci), _fmt(summ.smallcell_total_ci)])
    if cfg.write_ratecdf:
        with open(out / "ratecdf.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(meta_cols + ["group_kind", "rate"])
            for idx in sorted(results):
                key, summ = results[idx]
                order = np.argsort(summ.rate_samples, kind="stable")
                for i in order:
                    wr.writerow([cfg.seed, chash, *key[:2], key[2], _fmt(key[3]),
                                 key[4], summ.rate_kinds[i], _fmt(summ.rate_samples[i])])
    with open(out / "offload.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(meta_cols + ["fraction"])
        for idx in sorted(results):
            key, summ = results[idx]
            if key[0] != "offload":
                continue
            wr.writerow([cfg.seed, chash, *key[:2], key[2], _fmt(key[3]), key[4],
                         _fmt(summ.offload_fraction_mean)])
    manifest = {
        "schema_version": 1,
        "library_version": __version__,
        "seed": cfg.seed,
        "config_hash": chash,
        "config": cfg.resolved(),
        "n_sweep_points": len(points),
        "failures": failures,
        "outputs": ["tradeoff.csv", "offload.csv"]
                   + (["ratecdf.csv"] if cfg.write_ratecdf else []),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    for f in failures:
        print(f"FAILED sweep point {f['point']}: {f['error']}", file=sys.stderr)
    return 1 if failures else 0


def _run_point_safe(job):
    try:
        return _run_point(job)
    except Exception as exc:  # recorded per point, reported at the end
        return ("error", job[0], f"{type(exc).__name__}: {exc}")


def _record(job, outcome, results, failures):
    if outcome[0] == "error":
        _, idx, msg = outcome
        failures.append({"point": idx, "error": msg})
    else:
        idx, key, summ = outcome
        results[idx] = (key, summ)


def validate_de(cfg: ExperimentConfig, n_layouts: int = 3, n_draws: int = 50) -> int:
    """Small deterministic-equivalent vs Monte-Carlo comparison, printed."""
    params = replace(cfg.params, deployment=cfg.deployments[0],
                     n_f=min(cfg.nf_list[0], cfg.params.n_u),
                     g_max=cfg.g_list[0])
    p0, p1 = powers_from_params(params)
    worst = 0.0
    for i in range(n_layouts):
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=cfg.seed, spawn_key=(10_000 + i,)).generate_state(1)[0])
        layout = assign_small_cells(sample_layout(params, rng),
                                    params.deployment, params.n_f, rng)
        pathgains = build_path_gains(layout, params)
        models = build_channel_models(layout, pathgains, params)
        table = build_link_gain_table(layout, models, pathgains, params)
        state = ScheduleState.fresh(table.n_groups, np.flatnonzero(table.schedulable))
        selected = select_user_groups(state, np.flatnonzero(table.schedulable),
                                      params.g_max, table, p0, rng)
        report = compare_de_to_empirical(layout, models, pathgains, table,
                                         selected, table.smallcell_set, p0, p1,
                                         n_draws, params.L, rng)
        errs = [v["rel_err"] for v in report.values()]
        worst = max(worst, max(errs))
        print(f"layout {i}: median rel err {np.median(errs):.3f}, "
              f"max {max(errs):.3f} over {len(errs)} links")
    print(f"worst relative error across layouts: {worst:.3f}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hetnetsim",
        description="Macro/small-cell downlink throughput sweeps with "
                    "deterministic-equivalent SINRs.")
    ap.add_argument("--config", metavar="PATH", help="key=value config file")
    ap.add_argument("--seed", type=int, metavar="U64", help="master seed")
    ap.add_argument("--out", metavar="DIR", help="output directory")
    ap.add_argument("--policy", metavar="LIST",
                    help=f"comma-separated subset of {','.join(POLICIES)}")
    ap.add_argument("--deployment", metavar="LIST",
                    help=f"comma-separated subset of {','.join(DEPLOYMENT_MODES)}")
    ap.add_argument("--sweep-g", metavar="A:B", help="macro group counts, inclusive range or list")
    ap.add_argument("--gamma", metavar="LIST", help="offload thresholds")
    ap.add_argument("--nf", metavar="LIST", help="small-cell counts")
    ap.add_argument("--drops", type=int, metavar="N", help="drops per sweep point")
    ap.add_argument("--slots", type=int, metavar="N", help="slots per drop")
    ap.add_argument("--workers", type=int, metavar="N", help="worker processes")
    ap.add_argument("--dry-run", action="store_true",
                    help="print the resolved config and exit without writing")
    ap.add_argument("--validate-de", action="store_true",
                    help="run the Monte-Carlo comparison suite instead of the sweep")
    return ap


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out:
            cfg.out_dir = args.out
        if args.policy:
            cfg.policies = _parse_list(args.policy, str)
        if args.deployment:
            cfg.deployments = _parse_list(args.deployment, str)
        if args.sweep_g:
            cfg.g_list = _parse_g_spec(args.sweep_g)
        if args.gamma:
            cfg.gamma_list = _parse_list(args.gamma, float)
        if args.nf:
            cfg.nf_list = _parse_list(args.nf, int)
        if args.drops:
            cfg.drops = args.drops
        if args.slots:
            cfg.slots = args.slots
        if args.workers:
            cfg.workers = args.workers
        cfg.validate()
    except (ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
        return 0
    if args.validate_de:
        return validate_de(cfg)
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
