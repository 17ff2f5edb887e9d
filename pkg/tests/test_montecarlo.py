import math

import numpy as np
import pytest
from scipy import stats

from nsum import analytic
from nsum.errors import InsufficientDataError, ParameterError
from nsum.estimators import EstimatorKind, Flag
from nsum.ingest import CaseSpec
from nsum.montecarlo import (hypergeom_check, planted_cases, run_case, s1_degree_mc_check,
                             s1_prevalence_mc_check, simulate_drpr_drpa, summarize,
                             validate_analytic, write_case_results, write_survey_log)
from nsum.netgen import BlockParams, assign_probe_group


def test_summarize_counts_flags():
    s = summarize([0.1, 0.3, math.nan, math.inf, math.inf],
                  [Flag.OK, Flag.OK, Flag.NAN, Flag.INF, Flag.ZERO_DENOMINATOR], 0.25)
    assert s.n_valid == 2 and s.n_nan == 1 and s.n_inf == 2
    assert s.mean == pytest.approx(0.2)
    assert s.sd == pytest.approx(np.std([0.1, 0.3], ddof=1))
    assert s.rmse == pytest.approx(math.hypot(s.bias, s.sd))
    assert s.relative_rmse == pytest.approx(s.rmse / 0.25)


def _case(net, n_probes=4, surveys=40, seed=9):
    net.register_group("H", net.hidden)
    probes = tuple(assign_probe_group(net, 30, True, seed + j) for j in range(n_probes))
    return CaseSpec(0, "H", probes, 100, surveys, seed)


def test_run_case_is_thread_independent(small_sbm):
    case = _case(small_sbm)
    kinds = list(EstimatorKind)
    a = run_case(small_sbm, case, kinds, threads=1)
    b = run_case(small_sbm, case, kinds, threads=4)
    assert list(a.csv_rows()) == list(b.csv_rows())
    assert [(i, k, o.value) for i, k, o in a.survey_log] == [
        (i, k, o.value) for i, k, o in b.survey_log]


def test_run_case_fields_and_writers(tmp_path, small_sbm):
    res = run_case(small_sbm, _case(small_sbm))
    assert res.true_prevalence == pytest.approx(0.1)
    assert res.degree_ratio_band == "low" and res.assortativity > 0
    assert set(res.records) == {EstimatorKind.DRPR, EstimatorKind.DRPA, EstimatorKind.DAPA}
    write_case_results(tmp_path / "c.csv", [res])
    write_survey_log(tmp_path / "s.csv", [res])
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 1 + 3
    log = (tmp_path / "s.csv").read_text().splitlines()
    assert log[0] == "case_id,survey_id,estimator,value,flag,n_used"
    assert len(log) == 1 + 3 * 40


def test_run_case_rejects_degenerate_cases(small_sbm):
    small_sbm.register_group("all", np.ones(small_sbm.n_nodes, dtype=bool))
    assign_probe_group(small_sbm, 10, False, 0)
    with pytest.raises(ParameterError):
        run_case(small_sbm, CaseSpec(0, "all", ("K0",), 10, 2, 0))
    small_sbm.register_group("H", small_sbm.hidden)
    with pytest.raises(ParameterError):
        run_case(small_sbm, CaseSpec(0, "H", ("K0",), 401, 2, 0))


def test_single_probe_cases_agree_between_degree_methods(small_sbm):
    case = _case(small_sbm, n_probes=1)
    res = run_case(small_sbm, case, [EstimatorKind.DRPA, EstimatorKind.DAPA])
    by_kind = {}
    for i, kind, out in res.survey_log:
        by_kind.setdefault(kind, []).append(out.value)
    assert by_kind[EstimatorKind.DRPA] == by_kind[EstimatorKind.DAPA]


def test_planted_cases_have_low_degree_ratio():
    cases = planted_cases(3, n_total=800, n_surveys=5, sample_size=50, seed=1)
    for net, case in cases:
        res = run_case(net, case)
        assert res.degree_ratio_band == "low"
        assert len(case.probe_group_ids) == 15
    again = planted_cases(3, n_total=800, n_surveys=5, sample_size=50, seed=1)
    assert [c.seed for _, c in cases] == [c.seed for _, c in again]
    assert np.array_equal(cases[0][0].indices, again[0][0].indices)


def test_drpr_model_moments_match_closed_forms():
    params = BlockParams.scaled(20_000, 5_000, 2.0, 0.01)
    rep = validate_analytic(params, 500, 2000, 600, seed=3)
    drpr = [c for c in rep.checks if c.estimator == analytic.DRPR]
    assert all(c.passed for c in drpr), drpr
    assert rep.details["dRpR"]["n_valid"] == 600


def test_graph_mode_tracks_model_mode():
    params = BlockParams.scaled(2000, 200, 2.0, 0.02)
    model, _ = simulate_drpr_drpa(params, 200, 400, 200, "model", seed=1)
    graph, _ = simulate_drpr_drpa(params, 200, 400, 40, "graph", seed=1)
    fixed, _ = simulate_drpr_drpa(params, 200, 400, 40, "graph", seed=1, fixed_network=True)
    for values in (graph, fixed):
        assert values["dRpR"].mean() == pytest.approx(model["dRpR"].mean(), rel=0.03)


def test_unknown_mode():
    with pytest.raises(ParameterError):
        simulate_drpr_drpa(BlockParams.scaled(100, 10, 1.0, 0.1), 10, 10, 2, "other")


def test_derived_drpa_variance_tracks_simulation_with_large_probe_counts():
    # with ~200 expected probe links per respondent the ratio expansion is accurate
    params = BlockParams.scaled(20_000, 5_000, 3.0, 0.05)
    derived = validate_analytic(params, 500, 4000, 1500, seed=5)
    swapped = validate_analytic(params, 500, 4000, 1500, seed=5, form="swapped")
    d = next(c for c in derived.checks if c.name == "variance" and c.estimator == "dRpA")
    p = next(c for c in swapped.checks if c.name == "variance" and c.estimator == "dRpA")
    assert abs(d.statistic - 1) < 0.1
    assert abs(p.statistic - 1) > 0.3


def test_drpa_mean_gap_shrinks_with_probe_links():
    # the gap is the second-order term E[1/Y_K] - 1/E[Y_K], roughly 1/(N_K p)
    gaps = []
    for p in (0.01, 0.1):
        params = BlockParams.scaled(20_000, 5_000, 1.0, p)
        values, _ = simulate_drpr_drpa(params, 500, 2000, 300, seed=7)
        gaps.append(values["dRpA"].mean() / 0.25 - 1)
    assert 0.03 < gaps[0] < 0.08
    assert gaps[1] < gaps[0] / 5


def test_hypergeom_check_small():
    res = hypergeom_check(30, 10, 0.3, 8, 200_000, seed=1)
    exact = stats.hypergeom(29, 10, 8).pmf(res.support)
    assert np.allclose(res.exact, exact)
    assert res.tv_distance < 0.03 and res.n_hits > 10_000
    with pytest.raises(InsufficientDataError):
        hypergeom_check(30, 10, 0.001, 25, 100, seed=1)


def test_s1_monte_carlo_checks():
    prev = s1_prevalence_mc_check([5, 50, 200], 0.3, 100_000, seed=2)
    deg = s1_degree_mc_check(40, 5000, [20, 300, 900], 100_000, seed=2)
    assert prev.passed and deg.passed
    assert prev.closed_form[0] < prev.closed_form[1]
    assert deg.closed_form[0] < deg.closed_form[1]
