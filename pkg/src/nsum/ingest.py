"""Attributed real networks: CSV loading, candidate probe groups and cases.

Interchange format:

* edges: ``src,dst`` header, one undirected edge per row, 0-based ids;
* attributes: ``node_id,<col1>,<col2>,...`` header, empty cell = missing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (CaseConstructionError, IngestionError, ParameterError,
                     UndefinedStatisticError)
from .netgen import Network, as_mask

DEGREE_RATIO_LOW = 0.8
DEGREE_RATIO_HIGH = 1.2


@dataclass
class AttributeTable:
    n_nodes: int
    columns: dict[str, list[str | None]] = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.columns.items():
            if len(values) != self.n_nodes:
                raise ParameterError(
                    f"column {name!r} has {len(values)} rows, expected {self.n_nodes}"
                )


@dataclass(frozen=True)
class CandidateGroup:
    group_id: str
    column: str
    level: str
    members: np.ndarray
    prevalence: float

    @property
    def size(self) -> int:
        return int(self.members.size)


@dataclass(frozen=True)
class CaseSpec:
    case_id: int
    hidden_group_id: str
    probe_group_ids: tuple[str, ...]
    sample_size: int
    n_surveys: int
    seed: int

    def __post_init__(self):
        if not self.probe_group_ids:
            raise ParameterError("a case needs at least one probe group")
        if self.hidden_group_id in self.probe_group_ids:
            raise ParameterError("the hidden group cannot also be a probe group")


def _read_attributes(path) -> AttributeTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "node_id":
            raise IngestionError("missing header starting with 'node_id'", path, 1)
        names = [h.strip() for h in header[1:]]
        rows: dict[int, list[str]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(f"expected {len(header)} fields, got {len(row)}",
                                     path, line_no)
            try:
                node = int(row[0])
            except ValueError:
                raise IngestionError(f"bad node id {row[0]!r}", path, line_no) from None
            if node in rows:
                raise IngestionError(f"duplicate node id {node}", path, line_no)
            rows[node] = row[1:]
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise IngestionError("node ids must be exactly 0..n-1", path)
    columns = {
        name: [rows[i][c].strip() or None for i in range(n)]
        for c, name in enumerate(names)
    }
    return AttributeTable(n, columns)


def _read_edges(path, n_nodes: int | None):
    src, dst = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["src", "dst"]:
            raise IngestionError("missing 'src,dst' header", path, 1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, got {len(row)}", path, line_no)
            try:
                u, v = int(row[0]), int(row[1])
            except ValueError:
                raise IngestionError(f"malformed row {row!r}", path, line_no) from None
            if u < 0 or v < 0 or (n_nodes is not None and max(u, v) >= n_nodes):
                raise IngestionError(f"node id out of range in row {u},{v}", path, line_no)
            if u == v:
                raise IngestionError(f"self-loop on node {u}", path, line_no)
            src.append(u)
            dst.append(v)
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)


def load_network(edges_path, attrs_path=None) -> tuple[Network, AttributeTable]:
    """Load an undirected network and its attribute table.

    Without an attribute file the node count is ``max id + 1``. Every node
    starts labelled L; hidden status is decided per case.
    """
    attrs = _read_attributes(attrs_path) if attrs_path is not None else None
    n_nodes = attrs.n_nodes if attrs is not None else None
    src, dst = _read_edges(edges_path, n_nodes)
    if n_nodes is None:
        n_nodes = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        attrs = AttributeTable(n_nodes)
    return Network.from_edges(n_nodes, src, dst), attrs


def derive_candidate_groups(network: Network, attrs: AttributeTable,
                            min_prev: float = 0.001, max_prev: float = 0.10
                            ) -> list[CandidateGroup]:
    """One candidate per (column, level) with prevalence in ``[min_prev, max_prev]``."""
    if not 0 < min_prev < max_prev < 1:
        raise ParameterError("need 0 < min_prev < max_prev < 1")
    if attrs.n_nodes != network.n_nodes:
        raise ParameterError("attribute table and network disagree on node count")
    out = []
    for column in sorted(attrs.columns):
        values = np.array([v if v is not None else "" for v in attrs.columns[column]],
                          dtype=object)
        present = values != ""
        for level in sorted(set(values[present].tolist())):
            members = np.flatnonzero(values == level)
            prevalence = members.size / network.n_nodes
            if min_prev <= prevalence <= max_prev:
                out.append(CandidateGroup(f"{column}={level}", column, level,
                                          members, prevalence))
    return out


def register_candidates(network: Network, candidates) -> None:
    for cand in candidates:
        if cand.group_id not in network.groups:
            network.register_group(cand.group_id, cand.members)


def build_cases(candidates, k: int = 16, sample_size: int = 500,
                n_surveys: int = 500, seed: int = 0) -> list[CaseSpec]:
    """Each of the ``k`` largest candidates is the hidden group once."""
    if len(candidates) < k:
        raise CaseConstructionError(
            f"need {k} candidate groups, found {len(candidates)} "
            f"(short by {k - len(candidates)})"
        )
    chosen = sorted(candidates, key=lambda c: (-c.size, c.group_id))[:k]
    ids = [c.group_id for c in chosen]
    seeds = np.random.SeedSequence(seed).generate_state(k, dtype=np.uint32)
    return [
        CaseSpec(
            case_id=i,
            hidden_group_id=ids[i],
            probe_group_ids=tuple(g for g in ids if g != ids[i]),
            sample_size=sample_size,
            n_surveys=n_surveys,
            seed=int(seeds[i]),
        )
        for i in range(k)
    ]


def assortativity(network: Network, partition) -> float:
    """Newman's nominal assortativity for a two-category node partition."""
    partition = np.asarray(partition, dtype=bool)
    src, dst = network.edges()
    if src.size == 0:
        raise UndefinedStatisticError("assortativity is undefined on an edgeless network")
    a, b = partition[src], partition[dst]
    m = src.size
    # symmetric mixing matrix over edge ends
    e11 = np.count_nonzero(a & b) / m
    e00 = np.count_nonzero(~a & ~b) / m
    e01 = 1.0 - e11 - e00
    a1 = e11 + e01 / 2
    a0 = e00 + e01 / 2
    expected = a0 * a0 + a1 * a1
    if expected >= 1.0:
        raise UndefinedStatisticError("all edges fall in a single category")
    return float((e00 + e11 - expected) / (1.0 - expected))


def degree_ratio(network: Network, hidden_members, reference: str = "all") -> float:
    """Mean degree of the hidden members over the mean degree of ``reference``.

    ``reference`` is ``"all"`` (every node) or ``"rest"`` (non-members).
    """
    mask = as_mask(network.n_nodes, hidden_members)
    if not mask.any():
        raise ParameterError("hidden set is empty")
    deg = network.degrees()
    if reference == "all":
        denom = deg.mean()
    elif reference == "rest":
        if mask.all():
            raise ParameterError("hidden set covers every node; 'rest' is empty")
        denom = deg[~mask].mean()
    else:
        raise ParameterError(f"unknown degree-ratio reference {reference!r}")
    if denom == 0:
        raise UndefinedStatisticError("reference mean degree is zero")
    return float(deg[mask].mean() / denom)


def degree_ratio_band(ratio: float) -> str:
    if ratio < DEGREE_RATIO_LOW:
        return "low"
    if ratio > DEGREE_RATIO_HIGH:
        return "high"
    return "near1"


def write_candidates_csv(path, candidates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "column", "level", "size", "prevalence"])
        for c in candidates:
            w.writerow([c.group_id, c.column, c.level, c.size, repr(c.prevalence)])


def write_cases_csv(path, cases) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "hidden_group_id", "probe_group_ids", "seed"])
        for c in cases:
            w.writerow([c.case_id, c.hidden_group_id, ";".join(c.probe_group_ids), c.seed])


def write_attributes_csv(path: str | Path, attrs: AttributeTable) -> None:
    names = list(attrs.columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", *names])
        for i in range(attrs.n_nodes):
            w.writerow([i, *[attrs.columns[c][i] or "" for c in names]])
