import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsum.errors import (CaseConstructionError, IngestionError, ParameterError,
                         UndefinedStatisticError)
from nsum.ingest import (AttributeTable, CaseSpec, CandidateGroup, assortativity,
                         build_cases, degree_ratio, degree_ratio_band,
                         derive_candidate_groups, load_network, register_candidates,
                         write_cases_csv, write_candidates_csv)
from nsum.netgen import BlockParams, Network, generate_sbm


def _write(path, text):
    path.write_text(text)
    return path


def test_load_network_and_candidates(attribute_files):
    edges, attrs = attribute_files
    net, table = load_network(edges, attrs)
    assert net.n_nodes == 3000 and set(table.columns) == {"dorm", "year"}
    cands = derive_candidate_groups(net, table)
    assert all(0.001 <= c.prevalence <= 0.10 for c in cands)
    assert all(c.column == "dorm" for c in cands)
    assert [c.group_id for c in cands] == sorted(c.group_id for c in cands)
    assert len(cands) == 20


def test_candidate_interval_is_closed():
    net = Network.from_edges(1000, [0], [1])
    col = ["x"] * 1 + ["y"] * 100 + ["z"] * 899
    cands = derive_candidate_groups(net, AttributeTable(1000, {"c": col}))
    assert [c.group_id for c in cands] == ["c=x", "c=y"]


def test_missing_values_are_not_a_level():
    net = Network.from_edges(100, [0], [1])
    col = [None] * 5 + ["a"] * 5 + ["b"] * 90
    cands = derive_candidate_groups(net, AttributeTable(100, {"c": col}), 0.01, 0.1)
    assert [c.group_id for c in cands] == ["c=a"]


def test_build_cases_rotates_hidden_group(attribute_files):
    net, table = load_network(*attribute_files)
    cands = derive_candidate_groups(net, table)
    cases = build_cases(cands, k=16, seed=3)
    assert len(cases) == 16
    chosen = {c.hidden_group_id for c in cases}
    for case in cases:
        assert case.hidden_group_id not in case.probe_group_ids
        assert set(case.probe_group_ids) | {case.hidden_group_id} == chosen
        assert len(case.probe_group_ids) == 15
    sizes = {c.group_id: c.size for c in cands}
    assert min(sizes[g] for g in chosen) >= max(sizes[g] for g in sizes if g not in chosen)
    assert [c.seed for c in build_cases(cands, k=16, seed=3)] == [c.seed for c in cases]


def test_build_cases_reports_shortfall():
    cands = [CandidateGroup(f"c={i}", "c", str(i), np.array([i]), 0.01) for i in range(5)]
    with pytest.raises(CaseConstructionError, match="short by 11"):
        build_cases(cands, k=16)


def test_case_spec_validation():
    with pytest.raises(ParameterError):
        CaseSpec(0, "a", (), 10, 10, 0)
    with pytest.raises(ParameterError):
        CaseSpec(0, "a", ("a", "b"), 10, 10, 0)


@pytest.mark.parametrize("edges,msg", [
    ("a,b\n0,1\n", "header"),
    ("src,dst\n0,1\n1,x\n", "line 3"),
    ("src,dst\n0,1,2\n", "line 2"),
    ("src,dst\n0,0\n", "self-loop"),
])
def test_malformed_edges(tmp_path, edges, msg):
    path = _write(tmp_path / "e.csv", edges)
    with pytest.raises(IngestionError, match=msg):
        load_network(path)


def test_edge_ids_checked_against_attributes(tmp_path):
    e = _write(tmp_path / "e.csv", "src,dst\n0,5\n")
    a = _write(tmp_path / "a.csv", "node_id,c\n0,x\n1,y\n")
    with pytest.raises(IngestionError, match="out of range"):
        load_network(e, a)


@pytest.mark.parametrize("attrs", [
    "id,c\n0,x\n",
    "node_id,c\n0,x\n0,y\n",
    "node_id,c\n0,x\n2,y\n",
    "node_id,c\n0\n",
])
def test_malformed_attributes(tmp_path, attrs):
    e = _write(tmp_path / "e.csv", "src,dst\n0,1\n")
    a = _write(tmp_path / "a.csv", attrs)
    with pytest.raises(IngestionError):
        load_network(e, a)


def test_ingestion_error_names_file_and_line(tmp_path):
    path = _write(tmp_path / "e.csv", "src,dst\n0,1\nq,1\n")
    with pytest.raises(IngestionError) as info:
        load_network(path)
    assert "e.csv" in str(info.value) and "line 3" in str(info.value)


def test_assortativity_matches_networkx():
    net = generate_sbm(BlockParams.scaled(500, 80, 4.0, 0.01), seed=9)
    g = nx.Graph()
    g.add_nodes_from((i, {"h": bool(net.hidden[i])}) for i in range(net.n_nodes))
    g.add_edges_from(zip(*(x.tolist() for x in net.edges())))
    expected = nx.attribute_assortativity_coefficient(g, "h")
    assert assortativity(net, net.hidden) == pytest.approx(expected, abs=1e-12)
    assert assortativity(net, net.hidden) > 0


def test_assortativity_undefined_cases():
    with pytest.raises(UndefinedStatisticError):
        assortativity(Network.from_edges(3, [], []), [True, False, False])
    with pytest.raises(UndefinedStatisticError):
        assortativity(Network.from_edges(3, [0], [1]), [False, False, False])


def test_degree_ratio_and_band():
    # star: center 0 has degree 4, leaves degree 1
    net = Network.from_edges(5, [0, 0, 0, 0], [1, 2, 3, 4])
    assert degree_ratio(net, [0]) == pytest.approx(4 / 1.6)
    assert degree_ratio(net, [0], reference="rest") == pytest.approx(4.0)
    assert degree_ratio(net, [1, 2]) == pytest.approx(1 / 1.6)
    with pytest.raises(ParameterError):
        degree_ratio(net, [0], reference="other")
    with pytest.raises(ParameterError):
        degree_ratio(net, [])
    with pytest.raises(UndefinedStatisticError):
        degree_ratio(Network.from_edges(3, [], []), [0])
    assert [degree_ratio_band(x) for x in (0.79, 0.8, 1.2, 1.21)] == [
        "low", "near1", "near1", "high"]


def test_writers(tmp_path, attribute_files):
    net, table = load_network(*attribute_files)
    cands = derive_candidate_groups(net, table)
    register_candidates(net, cands)
    assert net.group_mask(cands[0].group_id).sum() == cands[0].size
    write_candidates_csv(tmp_path / "c.csv", cands)
    write_cases_csv(tmp_path / "k.csv", build_cases(cands))
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "group_id,column,level,size,prevalence"
    head, first = (tmp_path / "k.csv").read_text().splitlines()[:2]
    assert head == "case_id,hidden_group_id,probe_group_ids,seed"
    assert first.count(";") == 14


@settings(max_examples=40, deadline=None)
@given(n=st.integers(4, 60), p=st.floats(0.05, 0.6), seed=st.integers(0, 10**6),
       data=st.data())
def test_assortativity_bounds_and_symmetry(n, p, seed, data):
    net = generate_sbm(BlockParams(n, 1, p, p, p), seed)
    part = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    try:
        r = assortativity(net, part)
    except UndefinedStatisticError:
        return
    assert -1 - 1e-12 <= r <= 1 + 1e-12
    assert assortativity(net, ~part) == pytest.approx(r, abs=1e-12)
