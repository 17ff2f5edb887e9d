"""Command-line front end: ``nsum <command> [options]``.

Every command writes its outputs plus a ``manifest.json`` into
``--output-dir``. A manifest (or any JSON object of config fields) can be
passed back with ``--config``; its values take precedence over flags.
``nsum rerun MANIFEST --output-dir DIR`` replays a run.

Exit codes: 0 success, 1 parameter error, 2 I/O error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, analytic
from .errors import (CaseConstructionError, IngestionError, NsumError, ParameterError,
                     UndefinedStatisticError)
from .estimators import EstimatorKind
from .ingest import (CaseSpec, build_cases, derive_candidate_groups, load_network,
                     register_candidates, write_cases_csv, write_candidates_csv)
from .montecarlo import (hypergeom_check, run_case, s1_degree_mc_check,
                         s1_prevalence_mc_check, validate_analytic, write_case_results,
                         write_survey_log)
from .netgen import BlockParams, assign_probe_group, generate_sbm

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass
class GenerateConfig:
    n: int = 1000
    nh: int = 100
    a: float = 1.0
    p: float = 0.01
    p_hh: float | None = None
    p_hl: float | None = None
    p_ll: float | None = None
    seed: int = 0
    output_dir: str = "out"


@dataclass
class IngestConfig:
    edges: str = ""
    attrs: str = ""
    min_prev: float = 0.001
    max_prev: float = 0.10
    k: int = 16
    sample_size: int = 500
    surveys: int = 500
    seed: int = 0
    output_dir: str = "out"


@dataclass
class SimulateConfig:
    edges: str | None = None
    attrs: str | None = None
    min_prev: float = 0.001
    max_prev: float = 0.10
    k: int = 16
    n: int = 2000
    nh: int = 100
    a: float = 1.0
    p: float = 0.01
    probes: int = 15
    probe_size: int = 50
    probes_within_l: bool = False
    replicates: int = 1
    surveys: int = 500
    sample_size: int = 500
    estimators: str = "drpr,drpa,dapa"
    term_exclusion: bool = True
    degree_reference: str = "all"
    threads: int = 1
    seed: int = 0
    output_dir: str = "out"


@dataclass
class GridConfig:
    preset: str = "fig1-top"
    p: list[float] = field(default_factory=lambda: [0.01])
    rk: list[float] = field(default_factory=lambda: [0.1])
    nn: list[float] = field(default_factory=lambda: [500_000.0])
    loga_min: float | None = None
    loga_max: float | None = None
    loga_step: float | None = None
    r_min: float | None = None
    r_max: float | None = None
    r_step: float | None = None
    variance_form: str = "derived"
    seed: int = 0
    output_dir: str = "out"


@dataclass
class ValidateConfig:
    suite: list[str] = field(default_factory=lambda: ["er-unbiased"])
    n: int | None = None
    nh: int | None = None
    r: list[float] | None = None
    a: float = 2.0
    p: float | None = None
    probe_size: int = 2000
    sample_size: int = 500
    reps: int | None = None
    d: int = 8
    mode: str = "model"
    fixed_network: bool = False
    variance_form: str = "derived"
    threads: int = 1
    seed: int = 0
    output_dir: str = "out"


@dataclass
class ReportConfig:
    results: list[str] = field(default_factory=list)
    seed: int = 0
    output_dir: str = "out"


CONFIGS = {"generate": GenerateConfig, "ingest": IngestConfig, "simulate": SimulateConfig,
           "grid": GridConfig, "validate": ValidateConfig, "report": ReportConfig}
SUITES = ("er-unbiased", "scaled-bias", "variance", "sign-regions", "s3-hypergeom",
          "s1-ordering")


def _dump_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)!r}")


def write_manifest(command: str, cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"tool": "nsum", "version": __version__, "command": command,
                "base_seed": cfg.seed, "config": asdict(cfg)}
    _dump_json(out / "manifest.json", manifest)
    return out


# --- commands -----------------------------------------------------------------

def cmd_generate(cfg: GenerateConfig) -> int:
    if cfg.p_hh is not None or cfg.p_hl is not None or cfg.p_ll is not None:
        if None in (cfg.p_hh, cfg.p_hl, cfg.p_ll):
            raise ParameterError("give all of --p-hh, --p-hl and --p-ll, or none")
        params = BlockParams(cfg.n, cfg.nh, cfg.p_hh, cfg.p_hl, cfg.p_ll)
    else:
        params = BlockParams.scaled(cfg.n, cfg.nh, cfg.a, cfg.p)
    net = generate_sbm(params, cfg.seed)
    out = write_manifest("generate", cfg)
    net.write_edges_csv(out / "edges.csv")
    net.write_labels_csv(out / "labels.csv")
    print(f"wrote {net.n_nodes} nodes, {net.n_edges} edges to {out}")
    return EXIT_OK


def _ingest_cases(edges, attrs, min_prev, max_prev, k, sample_size, surveys, seed):
    net, table = load_network(edges, attrs)
    candidates = derive_candidate_groups(net, table, min_prev, max_prev)
    cases = build_cases(candidates, k, sample_size, surveys, seed)
    register_candidates(net, candidates)
    return net, candidates, cases


def cmd_ingest(cfg: IngestConfig) -> int:
    if not cfg.edges or not cfg.attrs:
        raise ParameterError("ingest needs --edges and --attrs")
    net, candidates, cases = _ingest_cases(cfg.edges, cfg.attrs, cfg.min_prev, cfg.max_prev,
                                           cfg.k, cfg.sample_size, cfg.surveys, cfg.seed)
    out = write_manifest("ingest", cfg)
    write_candidates_csv(out / "candidates.csv", candidates)
    write_cases_csv(out / "cases.csv", cases)
    print(f"{len(candidates)} candidate groups, {len(cases)} cases written to {out}")
    return EXIT_OK


def _parse_kinds(text: str):
    kinds = [EstimatorKind.parse(t) for t in text.split(",") if t.strip()]
    if not kinds:
        raise ParameterError("no estimators selected")
    return kinds


def cmd_simulate(cfg: SimulateConfig) -> int:
    kinds = _parse_kinds(cfg.estimators)
    jobs = []
    if cfg.edges:
        net, _, cases = _ingest_cases(cfg.edges, cfg.attrs, cfg.min_prev, cfg.max_prev,
                                      cfg.k, cfg.sample_size, cfg.surveys, cfg.seed)
        jobs = [(net, c) for c in cases]
    else:
        for rep in range(cfg.replicates):
            params = BlockParams.scaled(cfg.n, cfg.nh, cfg.a, cfg.p)
            net = generate_sbm(params, cfg.seed + rep)
            net.register_group("H", net.hidden)
            probes = tuple(
                assign_probe_group(net, cfg.probe_size, cfg.probes_within_l,
                                   cfg.seed + rep * 1000 + j + 1)
                for j in range(cfg.probes)
            )
            jobs.append((net, CaseSpec(rep, "H", probes, cfg.sample_size, cfg.surveys,
                                       cfg.seed + rep * 100_003)))
    results = []
    for net, case in jobs:
        try:
            results.append(run_case(net, case, kinds, cfg.term_exclusion,
                                    cfg.degree_reference, cfg.threads))
        except NsumError as exc:
            raise type(exc)(f"case {case.case_id}: {exc}") from exc
    out = write_manifest("simulate", cfg)
    write_case_results(out / "case_results.csv", results)
    write_survey_log(out / "survey_log.csv", results)
    print(f"{len(results)} cases x {len(kinds)} estimators written to {out}")
    return EXIT_OK


def _grid_ranges(cfg: GridConfig):
    preset = analytic.PRESETS.get(cfg.preset)
    if preset is None:
        raise ParameterError(f"unknown preset {cfg.preset!r}; choose from "
                             f"{sorted(analytic.PRESETS)}")
    la = [cfg.loga_min, cfg.loga_max, cfg.loga_step]
    rr = [cfg.r_min, cfg.r_max, cfg.r_step]
    la = tuple(x if x is not None else d for x, d in zip(la, preset.log_a))
    rr = tuple(x if x is not None else d for x, d in zip(rr, preset.r))
    return la, rr


def cmd_grid(cfg: GridConfig) -> int:
    la, rr = _grid_ranges(cfg)
    out = write_manifest("grid", cfg)
    summaries = []
    for p in cfg.p:
        for rk in cfg.rk:
            for nn in cfg.nn:
                grid = analytic.winner_grid(p, rk, nn, la, rr, cfg.variance_form)
                name = f"grid_p{p:g}_rk{rk:g}_nn{nn:g}.csv"
                grid.write_csv(out / name)
                summary = analytic.grid_summary(grid)
                summary["file"] = name
                summaries.append(summary)
                print(f"{name}: dRpA wins RMSE in {summary['rmse']['dRpA']} cells")
    _dump_json(out / "grid_summary.json", summaries)
    return EXIT_OK


def _suite_analytic(cfg: ValidateConfig, suite: str) -> list[dict]:
    n_total = cfg.n or 20_000
    p = cfg.p if cfg.p is not None else 0.01
    reps = cfg.reps or 2000
    if suite == "er-unbiased":
        configs = [(1.0, r) for r in (cfg.r or [0.05, 0.25, 0.5])]
        keep = {"mean", "variance_ratio"}
    elif suite == "scaled-bias":
        configs = [(cfg.a, r) for r in (cfg.r or [0.25])]
        keep = {"mean"}
    else:
        configs = [(a, r) for r in (cfg.r or [0.25]) for a in (cfg.a, 1.0)]
        keep = {"variance"}
    reports = []
    for a, r in configs:
        nh = cfg.nh if cfg.nh is not None else int(round(r * n_total))
        params = BlockParams.scaled(n_total, nh, a, p)
        rep = validate_analytic(params, cfg.sample_size, cfg.probe_size, reps, cfg.mode,
                                cfg.seed, True, cfg.fixed_network, cfg.variance_form,
                                cfg.threads)
        rep.checks = [c for c in rep.checks if c.name in keep]
        reports.append({"a": a, "R": params.prevalence(), **rep.to_dict()})
    return reports


def _suite_sign_regions(cfg: ValidateConfig) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    n_points = cfg.reps or 10_000
    log_a = rng.uniform(-4, 4, n_points)
    rs = rng.uniform(0.001, 0.999, n_points)
    bad = 0
    for kind in analytic.KINDS:
        for la, r in zip(log_a, rs):
            a = math.exp(la)
            if analytic.bias_sign_region(kind, a, r) != analytic.sign_label(
                    analytic.bias_scaled(kind, a, r)):
                bad += 1
    boundary = [analytic.bias_sign_region("dRpR", 1.0, 0.3),
                analytic.bias_sign_region("dRpR", 2.0, 0.5),
                analytic.bias_sign_region("dRpA", 1.0, 0.3),
                analytic.bias_sign_region("dRpA", 3.0, 0.25)]
    passed = bad == 0 and all(b == "zero" for b in boundary)
    return [{"suite": "sign-regions", "passed": passed, "n_points": n_points,
             "disagreements": bad, "boundary": boundary}]


def _suite_hypergeom(cfg: ValidateConfig) -> list[dict]:
    res = hypergeom_check(cfg.n or 30, cfg.nh if cfg.nh is not None else 10,
                          cfg.p if cfg.p is not None else 0.3, cfg.d, cfg.reps or 1_000_000,
                          cfg.seed)
    return [{"suite": "s3-hypergeom", "passed": res.tv_distance < 0.02,
             "tv_distance": res.tv_distance, "n_hits": res.n_hits, "threshold": 0.02,
             "empirical": res.empirical, "exact": res.exact}]


def random_degree_vectors(rng, count: int, max_len: int = 20, low: int = 1, high: int = 200):
    """Positive integer vectors with at least two distinct entries."""
    out = []
    while len(out) < count:
        v = rng.integers(low, high, size=int(rng.integers(2, max_len + 1)))
        if np.unique(v).size > 1:
            out.append(v)
    return out


def _suite_ordering(cfg: ValidateConfig) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    prev_fail = sum(
        not (lambda v: v[0] < v[1])(analytic.s1_prevalence_variances(d, float(rng.uniform(0.01, 0.99))))
        for d in random_degree_vectors(rng, 1000)
    )
    deg_fail = 0
    for sizes in random_degree_vectors(rng, 1000, high=500):
        n_pop = int(sizes.sum() * rng.uniform(1.5, 50))
        roa, aor = analytic.s1_degree_variances(float(rng.uniform(1, 500)), n_pop, sizes)
        deg_fail += not roa < aor
    reps = cfg.reps or 1_000_000
    mc_prev = s1_prevalence_mc_check([10, 20], 0.2, reps, cfg.seed)
    mc_deg = s1_degree_mc_check(10, 1000, [100, 50], reps, cfg.seed + 1)
    return [{"suite": "s1-ordering",
             "passed": prev_fail == 0 and deg_fail == 0 and mc_prev.passed and mc_deg.passed,
             "closed_form_failures": {"prevalence": prev_fail, "degree": deg_fail},
             "mc_prevalence": asdict(mc_prev), "mc_degree": asdict(mc_deg)}]


def cmd_validate(cfg: ValidateConfig) -> int:
    results = []
    for suite in cfg.suite:
        if suite in ("er-unbiased", "scaled-bias", "variance"):
            for rep in _suite_analytic(cfg, suite):
                rep["suite"] = suite
                results.append(rep)
        elif suite == "sign-regions":
            results += _suite_sign_regions(cfg)
        elif suite == "s3-hypergeom":
            results += _suite_hypergeom(cfg)
        elif suite == "s1-ordering":
            results += _suite_ordering(cfg)
        else:
            raise ParameterError(f"unknown suite {suite!r}; choose from {SUITES}")
    out = write_manifest("validate", cfg)
    passed = all(r["passed"] for r in results)
    _dump_json(out / "validation.json", {"passed": passed, "results": results})
    for r in results:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['suite']}"
              + (f" a={r['a']:g} R={r['R']:g}" if "a" in r else ""))
        for c in r.get("checks", []):
            print(f"    {'ok ' if c['passed'] else 'BAD'} {c['name']:<15} {c['estimator']:<10}"
                  f" observed={c['observed']:.6g} expected={c['expected']:.6g}"
                  f" ({c['tolerance']}, stat={c['statistic']:.3g})")
    return EXIT_OK if passed else EXIT_VALIDATION


def _read_case_rows(paths):
    import csv
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            rows += list(csv.DictReader(fh))
    return rows


def cmd_report(cfg: ReportConfig) -> int:
    if not cfg.results:
        raise ParameterError("report needs at least one --results file")
    rows = _read_case_rows(cfg.results)
    by_case: dict[tuple, dict] = {}
    for row in rows:
        key = (row["case_id"], row["true_R"], row["degree_ratio"])
        by_case.setdefault(key, {"band": row["band"]})[row["estimator"]] = row
    bands = {}
    for case in by_case.values():
        b = bands.setdefault(case["band"], {"cases": 0, "drpa_better_rmse": 0,
                                             "drpa_better_bias": 0, "rel_rmse": {}})
        b["cases"] += 1
        if "dRpR" in case and "dRpA" in case:
            rr, ra = case["dRpR"], case["dRpA"]
            b["drpa_better_rmse"] += float(ra["rel_rmse"]) < float(rr["rel_rmse"])
            b["drpa_better_bias"] += abs(float(ra["rel_bias"])) < abs(float(rr["rel_bias"]))
        for est, row in case.items():
            if est == "band":
                continue
            lo_hi = b["rel_rmse"].setdefault(est, [math.inf, -math.inf])
            v = float(row["rel_rmse"])
            if math.isfinite(v):
                lo_hi[0], lo_hi[1] = min(lo_hi[0], v), max(lo_hi[1], v)
    out = write_manifest("report", cfg)
    summary = {"n_cases": len(by_case), "bands": dict(sorted(bands.items()))}
    _dump_json(out / "report.json", summary)
    for band, b in sorted(bands.items()):
        print(f"{band:>6}: {b['cases']} cases, dRpA lower relative RMSE in "
              f"{b['drpa_better_rmse']}, lower |bias| in {b['drpa_better_bias']}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "ingest": cmd_ingest, "simulate": cmd_simulate,
            "grid": cmd_grid, "validate": cmd_validate, "report": cmd_report}


# --- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output-dir")
        sp.add_argument("--config", help="JSON config or manifest; overrides flags")

    sp = sub.add_parser("generate", help="sample a two-group SBM network")
    sp.add_argument("--n", type=int)
    sp.add_argument("--nh", type=int)
    sp.add_argument("--a", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--p-hh", type=float)
    sp.add_argument("--p-hl", type=float)
    sp.add_argument("--p-ll", type=float)
    common(sp)

    sp = sub.add_parser("ingest", help="derive candidate probe groups and cases")
    sp.add_argument("--edges")
    sp.add_argument("--attrs")
    sp.add_argument("--min-prev", type=float)
    sp.add_argument("--max-prev", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--sample-size", type=int)
    sp.add_argument("--surveys", type=int)
    common(sp)

    sp = sub.add_parser("simulate", help="run replicate surveys over cases")
    sp.add_argument("--edges")
    sp.add_argument("--attrs")
    sp.add_argument("--min-prev", type=float)
    sp.add_argument("--max-prev", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--nh", type=int)
    sp.add_argument("--a", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--probes", type=int)
    sp.add_argument("--probe-size", type=int)
    sp.add_argument("--probes-within-l", action="store_const", const=True)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--surveys", type=int)
    sp.add_argument("--sample-size", type=int)
    sp.add_argument("--estimators")
    sp.add_argument("--no-term-exclusion", dest="term_exclusion", action="store_const",
                    const=False)
    sp.add_argument("--degree-reference", choices=["all", "rest"])
    sp.add_argument("--threads", type=int, help="0 = one per CPU")
    common(sp)

    sp = sub.add_parser("grid", help="analytic winner grids")
    sp.add_argument("--preset", choices=sorted(analytic.PRESETS))
    sp.add_argument("--p", type=float, action="append")
    sp.add_argument("--rk", type=float, action="append")
    sp.add_argument("--nn", type=float, action="append")
    for name in ("loga-min", "loga-max", "loga-step", "r-min", "r-max", "r-step"):
        sp.add_argument(f"--{name}", type=float)
    sp.add_argument("--variance-form", choices=analytic.VARIANCE_FORMS)
    common(sp)

    sp = sub.add_parser("validate", help="Monte Carlo checks of the closed forms")
    sp.add_argument("--suite", action="append", choices=SUITES)
    sp.add_argument("--n", type=int, help="population size N")
    sp.add_argument("--nh", type=int)
    sp.add_argument("--r", type=float, action="append")
    sp.add_argument("--a", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--probe-size", type=int)
    sp.add_argument("--sample-size", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--mode", choices=["model", "graph"])
    sp.add_argument("--fixed-network", action="store_const", const=True)
    sp.add_argument("--variance-form", choices=analytic.VARIANCE_FORMS)
    sp.add_argument("--threads", type=int)
    common(sp)

    sp = sub.add_parser("report", help="summarize case_results.csv files")
    sp.add_argument("--results", action="append")
    common(sp)

    sp = sub.add_parser("rerun", help="replay a run from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--output-dir", required=True)
    sp.add_argument("--threads", type=int)
    return parser


def resolve_config(command: str, args: argparse.Namespace, overrides: dict | None = None):
    """Merge config-file values, explicit flags, ``NSUM_SEED`` and defaults."""
    cls = CONFIGS[command]
    overrides = dict(overrides or {})
    unknown = set(overrides) - {f.name for f in fields(cls)}
    if unknown:
        raise ParameterError(f"unknown config keys for {command}: {sorted(unknown)}")
    values = {}
    for f in fields(cls):
        if f.name in overrides:
            values[f.name] = overrides[f.name]
            continue
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
        elif f.name == "seed" and os.environ.get("NSUM_SEED"):
            try:
                values["seed"] = int(os.environ["NSUM_SEED"])
            except ValueError:
                raise ParameterError("NSUM_SEED must be an integer") from None
    return cls(**values)


def _load_config_file(path) -> tuple[str | None, dict]:
    with open(path) as fh:
        data = json.load(fh)
    if "config" in data and "command" in data:
        return data["command"], data["config"]
    return None, data


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            command, overrides = _load_config_file(args.manifest)
            if command not in COMMANDS:
                raise ParameterError(f"{args.manifest} is not a manifest")
            overrides["output_dir"] = args.output_dir
            if args.threads is not None and "threads" in overrides:
                overrides["threads"] = args.threads
            cfg = resolve_config(command, argparse.Namespace(), overrides)
        else:
            command = args.command
            overrides = {}
            if args.config:
                file_command, overrides = _load_config_file(args.config)
                if file_command not in (None, command):
                    raise ParameterError(
                        f"config is a {file_command} manifest, not {command}")
            cfg = resolve_config(command, args, overrides)
        return COMMANDS[command](cfg)
    except (ParameterError, CaseConstructionError, UndefinedStatisticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (IngestionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
