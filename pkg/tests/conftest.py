import csv

import numpy as np
import pytest

from nsum.netgen import BlockParams, generate_sbm


@pytest.fixture
def small_sbm():
    return generate_sbm(BlockParams.scaled(400, 40, 3.0, 0.02), seed=11)


def write_attribute_network(tmp_path, n=3000, n_groups=20, seed=5):
    """Edge list plus one categorical attribute with ``n_groups`` small levels."""
    rng = np.random.default_rng(seed)
    net = generate_sbm(BlockParams.scaled(n, 1, 1.0, 0.01), seed)
    edges = tmp_path / "edges.csv"
    attrs = tmp_path / "attrs.csv"
    net.write_edges_csv(edges)
    # level g gets roughly (g+1) * n / 300 members; the rest share a common level
    sizes = [(g + 1) * n // 300 for g in range(n_groups)]
    labels = np.full(n, "common", dtype=object)
    order = rng.permutation(n)
    start = 0
    for g, s in enumerate(sizes):
        labels[order[start:start + s]] = f"g{g:02d}"
        start += s
    year = np.where(rng.random(n) < 0.05, "", "2009")
    with open(attrs, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "dorm", "year"])
        for i in range(n):
            w.writerow([i, labels[i], year[i]])
    return edges, attrs


@pytest.fixture
def attribute_files(tmp_path):
    return write_attribute_network(tmp_path)


_verdicts = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record a one-line acceptance verdict shown in the terminal summary."""
    store = request.config.stash.setdefault(_verdicts, [])

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        store.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_verdicts, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
