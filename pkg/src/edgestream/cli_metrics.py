"""Experiment driver: scenario config, replications, sweeps, CSV/JSON output.

A scenario fixes the catalog, radio layout, client population, and control
parameters. Each replication draws placement, video choices, and session
start offsets from its own seed (base seed plus replication index) so every
scheme sees the identical workload within a replication. Results land in long-format CSV rows, one per
(scheme, replication), plus an optional JSON document with per-scheme means
and 95% confidence intervals.

Exit codes: 0 success, 2 configuration error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from multiprocessing import Pool

import numpy as np
from scipy import stats

from .ap_engine import SCHEMES, ApEngine
from .assign_core import QualityRequest, SolverParams
from .cache import LruChunkCache
from .catalog import PopularityModel, make_synthetic_catalog
from .client import DashClient
from .cph import brute_force_assign, cph_assign, dump_instance
from .radio import RadioConfig, link_capacity_bps, place_clients

METRIC_NAMES = (
    "mean_bitrate_kbps",
    "cache_bit_hit_ratio",
    "stall_ratio",
    "initial_latency_s",
    "backhaul_utilization",
    "no_valid_config_fraction",
)

CSV_COLUMNS = (
    "scheme", "replication", "seed", "param", "param_value",
    "n_clients", "n_videos", "backhaul_mbps", "gamma", "mu_c",
) + METRIC_NAMES

SWEEP_PARAMS = ("n_clients", "backhaul_mbps", "mu_c", "gamma", "n_videos")


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    schemes: tuple[str, ...] = SCHEMES
    n_clients: int = 10
    n_videos: int = 10
    levels: int = 19
    min_bitrate_bps: float = 100e3
    max_bitrate_bps: float = 15e6
    chunk_duration_s: float = 2.0
    chunk_count: int = 300
    zipf_exponent: float = 1.2
    gamma: int = 2
    mu_c: float = 1.3
    b_min_s: float = 4.0
    b_max_s: float = 15.0
    backhaul_mbps: float = 20.0
    t_ap_s: float = 0.5
    radius_m: float = 70.0
    start_offset_max_s: float = 35.0
    cache_capacity_bits: float = math.inf
    pareto_cap: int | None = None
    sufficient_chunks: float = 2.0
    reps: int = 20
    base_seed: int = 1
    max_time_s: float | None = None

    def validate(self) -> None:
        if not self.schemes:
            raise ConfigError("schemes must not be empty")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        positive = ("n_clients", "n_videos", "levels", "chunk_duration_s",
                    "chunk_count", "zipf_exponent", "mu_c", "b_min_s", "b_max_s",
                    "t_ap_s", "radius_m", "reps", "min_bitrate_bps", "max_bitrate_bps")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.backhaul_mbps < 0:
            raise ConfigError("backhaul_mbps must be >= 0")
        if self.start_offset_max_s < 0:
            raise ConfigError("start_offset_max_s must be >= 0")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.levels < 2:
            raise ConfigError("levels must be >= 2")
        if self.max_bitrate_bps <= self.min_bitrate_bps:
            raise ConfigError("max_bitrate_bps must exceed min_bitrate_bps")
        if self.b_max_s < self.b_min_s:
            raise ConfigError("b_max_s must be >= b_min_s")
        if self.pareto_cap is not None and self.pareto_cap < 1:
            raise ConfigError("pareto_cap must be >= 1 or none")
        if self.cache_capacity_bits <= 0:
            raise ConfigError("cache_capacity_bits must be > 0 (inf for unbounded)")


_INT_FIELDS = {"n_clients", "n_videos", "levels", "chunk_count", "gamma",
               "reps", "base_seed", "pareto_cap"}
_FLOAT_FIELDS = {"min_bitrate_bps", "max_bitrate_bps", "chunk_duration_s",
                 "zipf_exponent", "mu_c", "b_min_s", "b_max_s", "backhaul_mbps",
                 "t_ap_s", "radius_m", "start_offset_max_s", "cache_capacity_bits",
                 "sufficient_chunks", "max_time_s"}
_OPTIONAL_FIELDS = {"pareto_cap", "max_time_s"}


def _parse_value(key: str, raw: str):
    if key == "schemes":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if key in _OPTIONAL_FIELDS and raw.lower() in ("none", "null"):
        return None
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    raise ConfigError(f"unknown config key: {key}")


def load_config(path: str) -> ScenarioConfig:
    """Read `key = value` lines; # starts a comment; unknown keys are errors."""
    known = {f.name for f in fields(ScenarioConfig)}
    overrides = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, raw = (part.strip() for part in text.split("=", 1))
                if key not in known:
                    raise ConfigError(f"{path}:{lineno}: unknown config key: {key}")
                overrides[key] = _parse_value(key, raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = replace(ScenarioConfig(), **overrides)
    cfg.validate()
    return cfg


# ---- single replication ---------------------------------------------


def run_replication(cfg: ScenarioConfig, scheme: str, rep: int,
                    record_events: bool = False):
    """Simulate one scheme for one replication; returns the engine result."""
    seed = cfg.base_seed + rep
    rng = np.random.default_rng(seed)
    radio = RadioConfig(radius_m=cfg.radius_m)
    distances = place_clients(cfg.n_clients, radio, rng)
    popularity = PopularityModel(cfg.zipf_exponent, cfg.n_videos)
    videos = [popularity.sample_video(rng) for _ in range(cfg.n_clients)]
    offsets = [float(rng.uniform(0.0, cfg.start_offset_max_s))
               for _ in range(cfg.n_clients)]

    catalog = make_synthetic_catalog(
        video_count=cfg.n_videos, levels=cfg.levels,
        min_bps=cfg.min_bitrate_bps, max_bps=cfg.max_bitrate_bps,
        chunk_duration_s=cfg.chunk_duration_s, chunk_count=cfg.chunk_count,
    )
    clients = [
        DashClient(i, catalog.ladder(videos[i]), cfg.b_max_s,
                   start_time_s=offsets[i])
        for i in range(cfg.n_clients)
    ]
    capacities = {i: link_capacity_bps(distances[i], radio)
                  for i in range(cfg.n_clients)}
    params = SolverParams(
        gamma=cfg.gamma, mu_c=cfg.mu_c, b_min_s=cfg.b_min_s,
        b_max_s=cfg.b_max_s, pareto_cap=cfg.pareto_cap,
    )
    engine = ApEngine(
        scheme=scheme, catalog=catalog, clients=clients,
        link_capacities_bps=capacities,
        cache=LruChunkCache(cfg.cache_capacity_bits),
        backhaul_bps=cfg.backhaul_mbps * 1e6,
        t_ap_s=cfg.t_ap_s, params=params,
        sufficient_chunks=cfg.sufficient_chunks,
        record_events=record_events, max_time_s=cfg.max_time_s,
    )
    return engine.run()


def _result_row(cfg: ScenarioConfig, scheme: str, rep: int, result,
                param: str = "", param_value: str = "") -> dict:
    latencies = result.startup_latencies_s
    return {
        "scheme": scheme,
        "replication": rep,
        "seed": cfg.base_seed + rep,
        "param": param,
        "param_value": param_value,
        "n_clients": cfg.n_clients,
        "n_videos": cfg.n_videos,
        "backhaul_mbps": cfg.backhaul_mbps,
        "gamma": cfg.gamma,
        "mu_c": cfg.mu_c,
        "mean_bitrate_kbps": result.mean_bitrate_kbps,
        "cache_bit_hit_ratio": result.cache_bit_hit_ratio,
        "stall_ratio": (sum(result.stall_ratios) / len(result.stall_ratios)
                        if result.stall_ratios else 0.0),
        "initial_latency_s": (sum(latencies) / len(latencies)
                              if latencies else float("nan")),
        "backhaul_utilization": (
            result.pipe_bits / (cfg.backhaul_mbps * 1e6 * result.t_end_s)
            if cfg.backhaul_mbps > 0 and result.t_end_s > 0 else 0.0),
        "no_valid_config_fraction": result.no_valid_config_fraction,
    }


def _run_task(task):
    cfg, scheme, rep, param, param_value = task
    result = run_replication(cfg, scheme, rep)
    row = _result_row(cfg, scheme, rep, result, param, param_value)
    return row, result.violations


def _execute(tasks: list, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with Pool(processes=jobs) as pool:
        return pool.map(_run_task, tasks)


def run_scenario(cfg: ScenarioConfig, jobs: int = 1,
                 param: str = "", param_value: str = ""):
    """All (scheme, replication) rows for one configuration."""
    tasks = [(cfg, scheme, rep, param, param_value)
             for scheme in cfg.schemes for rep in range(cfg.reps)]
    outputs = _execute(tasks, jobs)
    rows = [row for row, _ in outputs]
    violations = [v for _, vs in outputs for v in vs]
    return rows, violations


def run_sweep(cfg: ScenarioConfig, param: str, values: list, jobs: int = 1):
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep param {param!r}; expected one of {SWEEP_PARAMS}")
    tasks = []
    for value in values:
        sub = replace(cfg, **{param: value})
        sub.validate()
        tasks.extend((sub, scheme, rep, param, repr(value))
                     for scheme in sub.schemes for rep in range(sub.reps))
    outputs = _execute(tasks, jobs)
    rows = [row for row, _ in outputs]
    violations = [v for _, vs in outputs for v in vs]
    return rows, violations


# ---- aggregation and output -----------------------------------------


def mean_ci(values: list[float]) -> tuple[float, float]:
    """Sample mean and half-width of the Student-t 95% interval."""
    n = len(values)
    if n == 0:
        return float("nan"), float("nan")
    mean = sum(values) / n
    if n == 1:
        return mean, float("nan")
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    half = stats.t.ppf(0.975, n - 1) * math.sqrt(var / n)
    return mean, half


def summarize(rows: list[dict]) -> dict:
    """Per (param, param_value, scheme): mean and CI of every metric."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["param"], row["param_value"], row["scheme"]), []).append(row)
    out = {}
    for key in sorted(groups, key=lambda k: (k[0], _value_sort_key(k[1]), k[2])):
        param, param_value, scheme = key
        block = {}
        for metric in METRIC_NAMES:
            vals = [r[metric] for r in groups[key] if not math.isnan(r[metric])]
            mean, half = mean_ci(vals)
            block[metric] = {"mean": mean, "ci95": half, "n": len(vals)}
        out.setdefault(param, {}).setdefault(param_value, {})[scheme] = block
    return out


def _value_sort_key(value: str):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def sort_rows(rows: list[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r["param"], _value_sort_key(r["param_value"]),
                                       r["scheme"], r["replication"]))


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: list[dict], path: str) -> None:
    ordered = sort_rows(rows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            writer.writerow([_format_cell(row[c]) for c in CSV_COLUMNS])


def write_json(cfg: ScenarioConfig, rows: list[dict], path: str) -> None:
    def scrub(value):
        if isinstance(value, float) and math.isinf(value):
            return "inf"
        if isinstance(value, float) and math.isnan(value):
            return "nan"
        return value

    config_doc = {f.name: scrub(getattr(cfg, f.name)) for f in fields(cfg)}
    doc = {
        "config": config_doc,
        "rows": [{k: scrub(v) for k, v in row.items()} for row in sort_rows(rows)],
        "summary": _scrub_tree(summarize(rows)),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _scrub_tree(node):
    if isinstance(node, dict):
        return {k: _scrub_tree(v) for k, v in node.items()}
    if isinstance(node, float) and (math.isnan(node) or math.isinf(node)):
        return repr(node).replace("float('", "").replace("')", "")
    return node


def print_summary(rows: list[dict], stream=sys.stdout) -> None:
    summary = summarize(rows)
    for param, by_value in summary.items():
        for param_value, by_scheme in by_value.items():
            title = f"{param}={param_value}" if param else "base scenario"
            print(f"== {title} ==", file=stream)
            for scheme, block in by_scheme.items():
                parts = []
                for metric in METRIC_NAMES:
                    cell = block[metric]
                    if math.isnan(cell["ci95"]):
                        parts.append(f"{metric}={cell['mean']:.4g}")
                    else:
                        parts.append(f"{metric}={cell['mean']:.4g}±{cell['ci95']:.2g}")
                print(f"  {scheme:13s} " + "  ".join(parts), file=stream)


# ---- randomized solver cross-check ----------------------------------


def gen_random_instance(rng: np.random.Generator):
    """Small random assignment instance for exhaustive cross-checking."""
    n_videos = int(rng.integers(1, 3))
    ladders = []
    for _ in range(n_videos):
        levels = int(rng.integers(2, 6))
        rates = np.sort(rng.uniform(1e5, 5e6, size=levels))
        rates = tuple(float(r) + 1e3 * i for i, r in enumerate(rates))
        ladders.append(rates)
    params = SolverParams(
        gamma=int(rng.integers(0, 3)),
        mu_c=float(rng.uniform(1.0, 2.0)),
        b_min_s=4.0,
        b_max_s=15.0,
    )
    n_clients = int(rng.integers(1, 5))
    shared_everything = bool(rng.random() < 0.4)
    tau = 2.0
    requests = []
    for cid in range(n_clients):
        for _ in range(int(rng.integers(1, 3))):
            if shared_everything:
                video, chunk = 0, 0
            else:
                video = int(rng.integers(0, n_videos))
                chunk = int(rng.integers(0, 3))
            rates = ladders[video]
            queued_chunks = int(rng.integers(0, 3))
            dlq_media = queued_chunks * tau
            dlq_bits = dlq_media * float(rng.uniform(rates[0], rates[-1]))
            requests.append(QualityRequest(
                client_id=cid,
                video_id=video,
                chunk_index=chunk,
                requested_quality=int(rng.integers(0, len(rates))),
                bitrates_bps=rates,
                chunk_duration_s=tau,
                buffer_s=float(rng.uniform(0.0, 15.0)),
                link_capacity_bps=float(rng.uniform(1e6, 3e7)),
                equal_share=1.0 / n_clients,
                dl_queue_bits=dlq_bits,
                dl_queue_media_s=dlq_media,
                fifo_backlog_bits=float(rng.choice([0.0, rng.uniform(0.0, 2e7)])),
                backhaul_rate_bps=float(rng.uniform(1e6, 4e7)),
            ))
    cache = LruChunkCache()
    for req in requests:
        for m in range(len(req.bitrates_bps)):
            if rng.random() < 0.25:
                size = req.bitrates_bps[m] * tau
                cache.insert(req.video_id, req.chunk_index, m, size)
    if rng.random() < 0.3:
        backhaul = float(rng.uniform(0.0, 3e5 * n_clients))
    else:
        backhaul = float(rng.uniform(1e6, 4e7))
    return requests, cache, backhaul, params


def oracle_check(instances: int, seed: int, dump_path: str | None = None):
    """Compare the compositional solver against exhaustive search."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    first_failure = None
    for i in range(instances):
        requests, cache, backhaul, params = gen_random_instance(rng)
        fast = cph_assign(requests, cache, backhaul, params)
        slow = brute_force_assign(requests, cache, backhaul, params)
        same = (fast.assignments == slow.assignments
                and fast.no_valid_config == slow.no_valid_config
                and fast.total_utility == slow.total_utility
                and fast.total_cost_bps == slow.total_cost_bps)
        if not same:
            mismatches += 1
            if first_failure is None:
                first_failure = (requests, cache, backhaul, params)
    if first_failure is not None and dump_path is not None:
        requests, cache, backhaul, params = first_failure
        dump_instance(dump_path, requests, cache, backhaul, params)
    return instances, mismatches


# ---- command line ----------------------------------------------------


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="scenario config file (key = value lines)")
    parser.add_argument("--scheme", action="append", choices=SCHEMES,
                        help="restrict to a scheme; repeatable")
    parser.add_argument("--clients", type=int)
    parser.add_argument("--videos", type=int)
    parser.add_argument("--backhaul-mbps", type=float)
    parser.add_argument("--gamma", type=int)
    parser.add_argument("--mu-c", type=float)
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out-csv")
    parser.add_argument("--out-json")


def _config_from_args(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.scheme:
        overrides["schemes"] = tuple(dict.fromkeys(args.scheme))
    if args.clients is not None:
        overrides["n_clients"] = args.clients
    if args.videos is not None:
        overrides["n_videos"] = args.videos
    if args.backhaul_mbps is not None:
        overrides["backhaul_mbps"] = args.backhaul_mbps
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.mu_c is not None:
        overrides["mu_c"] = args.mu_c
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _parse_sweep_values(param: str, raw: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("--values must list at least one value")
    caster = int if param in _INT_FIELDS else float
    try:
        return [caster(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad sweep value in {raw!r}") from None


def _finish(rows, violations, args) -> int:
    if args.out_csv:
        write_csv(rows, args.out_csv)
    if args.out_json:
        write_json(_config_from_args(args), rows, args.out_json)
    print_summary(rows)
    if violations:
        for v in violations[:20]:
            print(f"invariant violation: {v}", file=sys.stderr)
        print(f"{len(violations)} invariant violations", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="edgestream",
        description="cache-aware streaming simulation at a wireless access point")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_run_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="simulate across parameter values")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values for the swept parameter")

    p_oracle = sub.add_parser("oracle-check",
                              help="cross-check the solver against exhaustive search")
    p_oracle.add_argument("--instances", type=int, default=200)
    p_oracle.add_argument("--seed", type=int, default=1)
    p_oracle.add_argument("--dump", help="write the first failing instance here")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            rows, violations = run_scenario(cfg, jobs=args.jobs)
            return _finish(rows, violations, args)
        if args.command == "sweep":
            cfg = _config_from_args(args)
            values = _parse_sweep_values(args.param, args.values)
            rows, violations = run_sweep(cfg, args.param, values, jobs=args.jobs)
            return _finish(rows, violations, args)
        if args.command == "oracle-check":
            checked, mismatches = oracle_check(args.instances, args.seed, args.dump)
            print(f"checked {checked} instances, {mismatches} mismatches")
            return 3 if mismatches else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
