import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsum.errors import ParameterError
from nsum.netgen import BlockParams, assign_probe_group
from nsum.survey import (ard_from_graph, ard_from_model, conditioned_respondents,
                         srs_without_replacement)


@settings(max_examples=50, deadline=None)
@given(n_pop=st.integers(1, 500), frac=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_srs_draws_distinct_ids(n_pop, frac, seed):
    n = int(frac * n_pop)
    ids = srs_without_replacement(n_pop, n, seed)
    assert ids.size == n and np.unique(ids).size == n
    assert ids.size == 0 or (ids.min() >= 0 and ids.max() < n_pop)


def test_srs_rejects_oversized_sample():
    with pytest.raises(ParameterError):
        srs_without_replacement(5, 6, 0)


def test_srs_is_reproducible():
    assert np.array_equal(srs_without_replacement(1000, 50, 7), srs_without_replacement(1000, 50, 7))


def test_ard_from_graph_counts_neighbors(small_sbm):
    gid = assign_probe_group(small_sbm, 60, within_l_only=False, seed=3)
    probe = small_sbm.group_mask(gid)
    resp = srs_without_replacement(small_sbm.n_nodes, 30, 1)
    s = ard_from_graph(small_sbm, resp, small_sbm.hidden, [gid])
    for row, node in enumerate(resp):
        nbrs = small_sbm.neighbors(node)
        assert s.y_hidden[row] == small_sbm.hidden[nbrs].sum()
        assert s.y_probe[row, 0] == probe[nbrs].sum()
        assert s.true_degrees[row] == nbrs.size
    assert s.is_hidden.tolist() == small_sbm.hidden[resp].tolist()


def test_ard_from_graph_rejects_bad_ids(small_sbm):
    with pytest.raises(ParameterError):
        ard_from_graph(small_sbm, [small_sbm.n_nodes], small_sbm.hidden, [])


def test_conditioned_composition():
    rng = np.random.default_rng(0)
    ids = conditioned_respondents(1000, 100, 50, 0.1, rng)
    assert (ids < 100).sum() == 5 and np.unique(ids).size == 50
    with pytest.raises(ParameterError):
        conditioned_respondents(1000, 10, 500, 0.5, rng)


def test_ard_from_model_moments():
    params = BlockParams(20_000, 5_000, 0.02, 0.01, 0.03)
    s = ard_from_model(params, 20_000, 2_000, condition_r=0.25, seed=1)
    h = s.is_hidden
    assert h.sum() == 5000
    assert s.y_hidden[h].mean() == pytest.approx(4999 * 0.02, rel=0.02)
    assert s.y_hidden[~h].mean() == pytest.approx(5000 * 0.01, rel=0.02)
    assert s.y_probe[h, 0].mean() == pytest.approx(2000 * 0.01, rel=0.02)
    assert s.y_probe[~h, 0].mean() == pytest.approx(2000 * 0.03, rel=0.02)


def test_ard_from_model_validation():
    params = BlockParams(100, 10, 0.1, 0.1, 0.1)
    with pytest.raises(ParameterError):
        ard_from_model(params, 10, 91)
    with pytest.raises(ParameterError):
        ard_from_model(params, 10, 5, condition_r=1.5)


def test_write_csv(tmp_path, small_sbm):
    gid = assign_probe_group(small_sbm, 20, False, 0)
    s = ard_from_graph(small_sbm, [0, 1, 2], small_sbm.hidden, [gid, gid])
    s.write_csv(tmp_path / "ard.csv")
    lines = (tmp_path / "ard.csv").read_text().splitlines()
    assert lines[0] == "respondent_id,is_hidden,y_hidden,degree,y_probe_1,y_probe_2"
    assert len(lines) == 4
