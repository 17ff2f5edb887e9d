"""Replicate-survey experiments and Monte Carlo checks of the closed forms.

Replicate ``i`` of a run seeded with ``seed`` always uses
``numpy.random.default_rng(seed + i)``, so results do not depend on how
replicates are scheduled across threads.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import analytic
from .errors import InsufficientDataError, ParameterError, UndefinedStatisticError
from .estimators import EstimatorKind, Flag, estimate_all
from .ingest import CaseSpec, assortativity, degree_ratio, degree_ratio_band
from .netgen import BlockParams, Network, assign_probe_group, generate_sbm
from .survey import (ArdSample, ard_from_graph, ard_from_model, conditioned_respondents,
                     srs_without_replacement)

DEFAULT_KINDS = (EstimatorKind.DRPR, EstimatorKind.DRPA, EstimatorKind.DAPA)
MEAN_TOL_SE = 3.0
VAR_RTOL_ER = 0.10
VAR_RTOL = 0.25


def resolve_threads(threads: int | None) -> int:
    if not threads:
        return os.cpu_count() or 1
    return max(1, int(threads))


def _map(fn, items, threads: int | None):
    threads = resolve_threads(threads)
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class EstimatorSummary:
    mean: float
    sd: float
    bias: float
    rmse: float
    relative_bias: float
    relative_se: float
    relative_rmse: float
    n_valid: int
    n_nan: int
    n_inf: int


def summarize(values, flags, truth: float) -> EstimatorSummary:
    """Mean, sample sd (n-1), bias and RMSE over the unflagged surveys."""
    values = np.asarray(values, dtype=np.float64)
    flags = list(flags)
    ok = np.array([f is Flag.OK for f in flags], dtype=bool)
    n_nan = sum(f is Flag.NAN for f in flags)
    n_inf = sum(f in (Flag.INF, Flag.ZERO_DENOMINATOR) for f in flags)
    good = values[ok]
    mean = float(good.mean()) if good.size else math.nan
    sd = float(good.std(ddof=1)) if good.size > 1 else math.nan
    bias = mean - truth
    rmse = math.sqrt(bias ** 2 + sd ** 2)
    return EstimatorSummary(mean, sd, bias, rmse, bias / truth, sd / truth, rmse / truth,
                            int(ok.sum()), n_nan, n_inf)


@dataclass
class CaseResult:
    case_id: int
    true_prevalence: float
    degree_ratio: float
    degree_ratio_band: str
    degree_ratio_reference: str
    assortativity: float
    records: dict[EstimatorKind, EstimatorSummary]
    survey_log: list[tuple[int, EstimatorKind, object]] = field(default_factory=list, repr=False)

    def csv_rows(self):
        for kind, s in self.records.items():
            yield [self.case_id, kind.label, repr(s.mean), repr(s.sd), repr(s.bias),
                   repr(s.rmse), repr(s.relative_bias), repr(s.relative_se),
                   repr(s.relative_rmse), s.n_valid, s.n_nan, s.n_inf,
                   repr(self.true_prevalence), repr(self.degree_ratio),
                   self.degree_ratio_band, repr(self.assortativity)]


CASE_RESULT_HEADER = ["case_id", "estimator", "mean", "sd", "bias", "rmse", "rel_bias",
                      "rel_se", "rel_rmse", "n_valid", "n_nan", "n_inf", "true_R",
                      "degree_ratio", "band", "assortativity"]


def write_case_results(path, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASE_RESULT_HEADER)
        for res in results:
            w.writerows(res.csv_rows())


def write_survey_log(path, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "survey_id", "estimator", "value", "flag", "n_used"])
        for res in results:
            for survey_id, kind, out in res.survey_log:
                w.writerow([res.case_id, survey_id, kind.label, repr(out.value),
                            out.flag.value, out.n_used])


def run_case(network: Network, case: CaseSpec, kinds=DEFAULT_KINDS,
             term_exclusion: bool = True, degree_reference: str = "all",
             threads: int | None = 1) -> CaseResult:
    """Draw ``case.n_surveys`` SRS samples and evaluate each estimator on each."""
    hidden = network.group_mask(case.hidden_group_id)
    n_hidden = int(hidden.sum())
    if n_hidden == 0 or n_hidden == network.n_nodes:
        raise ParameterError(
            f"case {case.case_id}: hidden group must be a nonempty strict subset")
    if case.sample_size > network.n_nodes:
        raise ParameterError(f"case {case.case_id}: sample larger than population")
    probe_masks = [network.group_mask(g) for g in case.probe_group_ids]
    probe_sizes = np.array([m.sum() for m in probe_masks], dtype=np.float64)
    kinds = tuple(kinds)

    # neighbor counts for every node, shared read-only by all replicates
    y_hidden_all = network.neighbor_counts(hidden)
    y_probe_all = np.column_stack([network.neighbor_counts(m) for m in probe_masks])
    deg = network.degrees()

    def one(i):
        resp = srs_without_replacement(network.n_nodes, case.sample_size, case.seed + i)
        sample = ArdSample(resp, hidden[resp], y_hidden_all[resp], y_probe_all[resp], deg[resp])
        return estimate_all(sample, probe_sizes, network.n_nodes, kinds, term_exclusion)

    outcomes = _map(one, range(case.n_surveys), threads)
    truth = n_hidden / network.n_nodes
    records = {
        kind: summarize([o[kind].value for o in outcomes], [o[kind].flag for o in outcomes],
                        truth)
        for kind in kinds
    }
    log = [(i, kind, o[kind]) for i, o in enumerate(outcomes) for kind in kinds]
    ratio = degree_ratio(network, hidden, degree_reference)
    try:
        assort = assortativity(network, hidden)
    except UndefinedStatisticError:
        assort = math.nan
    return CaseResult(case.case_id, truth, ratio, degree_ratio_band(ratio), degree_reference,
                      assort, records, log)


def run_cases(network: Network, cases, **kwargs) -> list[CaseResult]:
    return [run_case(network, c, **kwargs) for c in cases]


def planted_cases(n_cases: int, n_total: int = 2000, a_range=(1.5, 4.0),
                  r_range=(0.02, 0.10), l_degree: float = 40.0, n_probes: int = 15,
                  probe_size_range=(20, 100), sample_size: int = 500, n_surveys: int = 200,
                  seed: int = 0) -> list[tuple[Network, CaseSpec]]:
    """Synthetic cases with an assortative hidden group of known size.

    Each case draws ``a`` and ``R`` uniformly from the given ranges, sets
    ``p_LL = l_degree / n_total`` and plants ``n_probes`` uniform probe groups.
    With ``a > 1`` the hidden group's mean degree sits below the population's.
    """
    if not 0 < r_range[0] <= r_range[1] < 1:
        raise ParameterError("r_range must lie inside (0, 1)")
    ss = np.random.SeedSequence(seed)
    out = []
    for case_id, child in enumerate(ss.spawn(n_cases)):
        net_seed, probe_seed, survey_seed = (int(s) for s in child.generate_state(3))
        rng = np.random.default_rng(child)
        a = float(rng.uniform(*a_range))
        r = float(rng.uniform(*r_range))
        p = l_degree / (n_total * a)
        params = BlockParams.scaled(n_total, int(round(r * n_total)), a, p)
        net = generate_sbm(params, net_seed)
        net.register_group("H", net.hidden)
        sizes = rng.integers(probe_size_range[0], probe_size_range[1] + 1, size=n_probes)
        probes = tuple(assign_probe_group(net, int(s), False, probe_seed + j)
                       for j, s in enumerate(sizes))
        out.append((net, CaseSpec(case_id, "H", probes, sample_size, n_surveys,
                                  survey_seed % 2**31)))
    return out


# --- validation of the closed forms ------------------------------------------

@dataclass
class Check:
    name: str
    estimator: str
    observed: float
    expected: float
    tolerance: str
    statistic: float
    passed: bool


@dataclass
class ValidationReport:
    suite: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "config": self.config,
                "checks": [asdict(c) for c in self.checks], "details": self.details}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")


def _mean_check(name, kind, values, expected) -> Check:
    se = values.std(ddof=1) / math.sqrt(values.size)
    z = (values.mean() - expected) / se if se > 0 else (0.0 if values.mean() == expected
                                                        else math.inf)
    return Check(name, kind, float(values.mean()), float(expected),
                 f"|z| <= {MEAN_TOL_SE:g}", float(z), bool(abs(z) <= MEAN_TOL_SE))


def _var_check(name, kind, values, expected, rtol) -> Check:
    ratio = values.var(ddof=1) / expected
    return Check(name, kind, float(values.var(ddof=1)), float(expected),
                 f"ratio within 1 +/- {rtol:g}", float(ratio), bool(abs(ratio - 1) <= rtol))


def simulate_drpr_drpa(params: BlockParams, n: int, probe_size: int, n_reps: int,
                       mode: str = "model", seed: int = 0, conditioned: bool = True,
                       fixed_network: bool = False, threads: int | None = 1):
    """Per-replicate dRpR and dRpA estimates with one probe group K inside L.

    Returns ``(values, flags)`` dicts keyed by ``"dRpR"``/``"dRpA"``.
    """
    r = params.prevalence()
    kinds = (EstimatorKind.DRPR, EstimatorKind.DRPA)
    probe_sizes = np.array([probe_size], dtype=np.float64)
    if mode not in ("model", "graph"):
        raise ParameterError(f"unknown validation mode {mode!r}")
    shared = None
    if mode == "graph" and fixed_network:
        shared = generate_sbm(params, seed)
        assign_probe_group(shared, probe_size, True, seed, group_id="K")

    def one(i):
        rng = np.random.default_rng(seed + i)
        if mode == "model":
            sample = ard_from_model(params, n, probe_size, r if conditioned else None, rng)
        else:
            net = shared
            if net is None:
                net = generate_sbm(params, seed + i)
                assign_probe_group(net, probe_size, True, seed + i, group_id="K")
            if conditioned:
                resp = conditioned_respondents(params.n_total, params.n_hidden, n, r, rng)
            else:
                resp = srs_without_replacement(params.n_total, n, rng)
            sample = ard_from_graph(net, resp, net.hidden, ["K"])
        return estimate_all(sample, probe_sizes, params.n_total, kinds)

    outcomes = _map(one, range(n_reps), threads)
    values, flags = {}, {}
    for kind in kinds:
        values[kind.label] = np.array([o[kind].value for o in outcomes])
        flags[kind.label] = [o[kind].flag for o in outcomes]
    return values, flags


def validate_analytic(params: BlockParams, n: int, probe_size: int, n_reps: int,
                      mode: str = "model", seed: int = 0, conditioned: bool = True,
                      fixed_network: bool = False, form: str = "derived",
                      threads: int | None = 1) -> ValidationReport:
    """Compare Monte Carlo moments of dRpR/dRpA with the first-order closed forms.

    Means must lie within 3 MC standard errors; variances within 10% when
    all link probabilities are equal and 25% otherwise. In the equal case
    the MC variance ratio dRpR/dRpA must also fall in [0.9, 1.1].
    """
    values, flags = simulate_drpr_drpa(params, n, probe_size, n_reps, mode, seed,
                                       conditioned, fixed_network, threads)
    r = params.prevalence()
    er = params.is_erdos_renyi()
    rtol = VAR_RTOL_ER if er else VAR_RTOL
    report = ValidationReport("analytic", {
        "n_total": params.n_total, "n_hidden": params.n_hidden, "p_hh": params.p_hh,
        "p_hl": params.p_hl, "p_ll": params.p_ll, "n": n, "probe_size": probe_size,
        "n_reps": n_reps, "mode": mode, "seed": seed, "conditioned": conditioned,
        "fixed_network": fixed_network, "variance_form": form,
    })
    valid = {}
    for kind in analytic.KINDS:
        ok = np.array([f is Flag.OK for f in flags[kind]])
        v = values[kind][ok]
        valid[kind] = v
        exp = analytic.expect_general(kind, params.p_hh, params.p_hl, params.p_ll, r)
        var = analytic.var_general(kind, params.p_hh, params.p_hl, params.p_ll, r, n,
                                   params.n_total, probe_size, form)
        report.checks.append(_mean_check("mean", kind, v, exp))
        report.checks.append(_var_check("variance", kind, v, var, rtol))
        report.details[kind] = {"n_valid": int(ok.sum()), "n_flagged": int((~ok).sum()),
                                "mc_sd": float(v.std(ddof=1))}
    if er:
        ratio = valid[analytic.DRPR].var(ddof=1) / valid[analytic.DRPA].var(ddof=1)
        report.checks.append(Check("variance_ratio", "dRpR/dRpA", float(ratio), 1.0,
                                   "within [0.9, 1.1]", float(ratio),
                                   bool(0.9 <= ratio <= 1.1)))
    return report


@dataclass
class HypergeomResult:
    tv_distance: float
    n_hits: int
    support: np.ndarray
    empirical: np.ndarray
    exact: np.ndarray


def hypergeom_check(n_total: int, n_hidden: int, p: float, d_condition: int, n_reps: int,
                    seed: int = 0, node_in_hidden: bool = False,
                    chunk: int = 100_000) -> HypergeomResult:
    """Empirical law of y given d for one node of an Erdos-Renyi graph.

    The node's ``N - 1`` potential links are simulated as independent
    Bernoulli(p) trials; ``y`` counts links into the hidden group. The
    result carries the total-variation distance between the empirical
    conditional pmf and the hypergeometric pmf with population ``N - 1``,
    ``N_H*`` successes and ``d`` draws.
    """
    if n_total > 100:
        raise ParameterError("hypergeom_check is meant for N <= 100")
    if not 0 < p < 1:
        raise ParameterError("p must lie in (0, 1)")
    if not 0 < n_hidden < n_total:
        raise ParameterError("need 0 < N_H < N")
    if not 0 <= d_condition <= n_total - 1:
        raise ParameterError("d must lie in [0, N-1]")
    nh_star = n_hidden - 1 if node_in_hidden else n_hidden
    rng = np.random.default_rng(seed)
    counts = np.zeros(nh_star + 1, dtype=np.int64)
    done = 0
    while done < n_reps:
        m = min(chunk, n_reps - done)
        links = rng.random((m, n_total - 1)) < p
        d = links.sum(axis=1)
        y = links[:, :nh_star].sum(axis=1)
        counts += np.bincount(y[d == d_condition], minlength=nh_star + 1)
        done += m
    hits = int(counts.sum())
    if hits == 0:
        raise InsufficientDataError(f"degree {d_condition} never observed in {n_reps} draws")
    support = np.arange(nh_star + 1)
    exact = stats.hypergeom(n_total - 1, nh_star, d_condition).pmf(support)
    empirical = counts / hits
    tv = 0.5 * float(np.abs(empirical - exact).sum())
    return HypergeomResult(tv, hits, support, empirical, exact)


def _var_se(x: np.ndarray) -> float:
    # large-sample standard error of the unbiased sample variance
    c = x - x.mean()
    m2 = np.mean(c ** 2)
    m4 = np.mean(c ** 4)
    return math.sqrt(max(m4 - m2 ** 2, 0.0) / x.size)


@dataclass
class OrderingReport:
    family: str
    empirical: tuple[float, float]
    closed_form: tuple[float, float]
    standard_errors: tuple[float, float]
    difference_se: float
    within_tolerance: bool
    ordering_holds: bool

    @property
    def passed(self) -> bool:
        return self.within_tolerance and self.ordering_holds


def _ordering_report(family, roa, aor, closed) -> OrderingReport:
    emp = (float(roa.var(ddof=1)), float(aor.var(ddof=1)))
    ses = (_var_se(roa), _var_se(aor))
    within = all(abs(e - c) <= MEAN_TOL_SE * s or e == c for e, c, s in zip(emp, closed, ses))
    diff_se = _var_se(aor - roa) if np.any(aor != roa) else 0.0
    strict = closed[0] < closed[1]
    holds = emp[0] < emp[1] if strict else abs(emp[1] - emp[0]) <= MEAN_TOL_SE * max(
        diff_se, 1e-300)
    return OrderingReport(family, emp, closed, ses, diff_se, bool(within), bool(holds))


def s1_prevalence_mc_check(degrees, r: float, n_reps: int, seed: int = 0) -> OrderingReport:
    """Simulate ``y_i ~ Binom(d_i, R)`` and compare RoA/AoR variances."""
    d = np.asarray(degrees, dtype=np.int64)
    closed = analytic.s1_prevalence_variances(d, r)
    rng = np.random.default_rng(seed)
    y = rng.binomial(d, r, size=(n_reps, d.size)).astype(np.float64)
    roa = y.sum(axis=1) / d.sum()
    aor = (y / d).mean(axis=1)
    return _ordering_report("prevalence", roa, aor, closed)


def s1_degree_mc_check(d_i: int, n_population: int, probe_sizes, n_reps: int,
                       seed: int = 0) -> OrderingReport:
    """Simulate ``y_ij ~ Binom(d_i, N_j/N)`` and compare degree-estimator variances."""
    sizes = np.asarray(probe_sizes, dtype=np.float64)
    closed = analytic.s1_degree_variances(d_i, n_population, sizes)
    rng = np.random.default_rng(seed)
    y = rng.binomial(d_i, sizes / n_population, size=(n_reps, sizes.size)).astype(np.float64)
    roa = n_population * y.sum(axis=1) / sizes.sum()
    aor = n_population * (y / sizes).mean(axis=1)
    return _ordering_report("degree", roa, aor, closed)

