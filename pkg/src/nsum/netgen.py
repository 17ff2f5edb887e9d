"""Two-group stochastic block model networks and synthetic probe groups.

Nodes ``0 .. n_hidden-1`` form the hidden group H, the rest form L.
Adjacency is stored in CSR form (``indptr``/``indices``) with each node's
neighbor list sorted, and probe groups are boolean membership masks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class BlockParams:
    n_total: int
    n_hidden: int
    p_hh: float
    p_hl: float
    p_ll: float

    def __post_init__(self):
        if not 0 < self.n_hidden < self.n_total:
            raise ParameterError(
                f"need 0 < n_hidden < n_total, got n_hidden={self.n_hidden}, "
                f"n_total={self.n_total}"
            )
        for name in ("p_hh", "p_hl", "p_ll"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name}={value} is not a probability")

    @classmethod
    def scaled(cls, n_total: int, n_hidden: int, a: float, p: float) -> "BlockParams":
        """Within-group probabilities ``a*p``, between-group probability ``p``."""
        if a <= 0:
            raise ParameterError(f"a must be positive, got {a}")
        if a * p > 1.0:
            raise ParameterError(f"a*p exceeds 1 (a={a}, p={p})")
        return cls(n_total, n_hidden, a * p, p, a * p)

    @property
    def n_rest(self) -> int:
        return self.n_total - self.n_hidden

    def prevalence(self) -> float:
        return self.n_hidden / self.n_total

    def is_erdos_renyi(self) -> bool:
        return self.p_hh == self.p_hl == self.p_ll


@dataclass(frozen=True)
class ScaledParams:
    """The reduced parameterization used by the analytic grids."""

    a: float
    p: float
    prevalence_r: float
    r_k: float
    n_times_n: float

    def __post_init__(self):
        if self.a <= 0:
            raise ParameterError(f"a must be positive, got {self.a}")
        if not 0 < self.p <= 1:
            raise ParameterError(f"p must lie in (0, 1], got {self.p}")
        if self.a * self.p > 1:
            raise ParameterError(f"a*p exceeds 1 (a={self.a}, p={self.p})")
        if not 0 < self.prevalence_r < 1:
            raise ParameterError(f"R must lie in (0, 1), got {self.prevalence_r}")
        if not 0 < self.r_k < 1:
            raise ParameterError(f"r_k must lie in (0, 1), got {self.r_k}")
        if self.n_times_n <= 0:
            raise ParameterError("nN must be positive")

    def to_block(self, n_total: int) -> BlockParams:
        n_hidden = int(round(self.prevalence_r * n_total))
        return BlockParams(n_total, n_hidden, self.a * self.p, self.p, self.a * self.p)


@dataclass
class Network:
    """Undirected simple graph with an H/L labelling and named node groups.

    Treat instances as read-only once probe groups are registered; survey
    code shares them across threads.
    """

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    hidden: np.ndarray
    groups: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n_nodes, src, dst, hidden=None) -> "Network":
        """Build from an edge list; duplicates and reversed rows collapse."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise ParameterError("src and dst must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n_nodes:
                raise ParameterError("edge endpoint out of range")
            if np.any(src == dst):
                raise ParameterError("self-loops are not allowed")
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        keys = np.unique(lo * n_nodes + hi)
        lo, hi = keys // n_nodes, keys % n_nodes
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_nodes), out=indptr[1:])
        if hidden is None:
            hidden = np.zeros(n_nodes, dtype=bool)
        return cls(n_nodes, indptr, cols, np.asarray(hidden, dtype=bool))

    @property
    def n_edges(self) -> int:
        return int(self.indices.size // 2)

    @property
    def labels(self) -> np.ndarray:
        return np.where(self.hidden, "H", "L")

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoints with ``src < dst``, sorted lexicographically."""
        rows = np.repeat(np.arange(self.n_nodes), self.degrees())
        keep = rows < self.indices
        return rows[keep], self.indices[keep]

    def neighbor_counts(self, mask: np.ndarray, nodes=None) -> np.ndarray:
        """Number of neighbors inside ``mask`` for each node (or for ``nodes``)."""
        mask = np.asarray(mask, dtype=bool)
        if nodes is None:
            rows = np.repeat(np.arange(self.n_nodes), self.degrees())
            return np.bincount(rows, weights=mask[self.indices],
                               minlength=self.n_nodes).astype(np.int64)
        nodes = np.asarray(nodes, dtype=np.int64)
        starts = self.indptr[nodes]
        lengths = self.indptr[nodes + 1] - starts
        owner = np.repeat(np.arange(nodes.size), lengths)
        offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        flat = self.indices[np.repeat(starts, lengths) + offsets]
        return np.bincount(owner, weights=mask[flat], minlength=nodes.size).astype(np.int64)

    def register_group(self, group_id: str, members) -> str:
        if group_id in self.groups:
            raise ParameterError(f"group {group_id!r} already registered")
        mask = as_mask(self.n_nodes, members)
        self.groups[group_id] = mask
        return group_id

    def group_members(self, group_id: str) -> np.ndarray:
        try:
            return np.flatnonzero(self.groups[group_id])
        except KeyError:
            raise ParameterError(f"unknown group id {group_id!r}") from None

    def group_mask(self, group_id: str) -> np.ndarray:
        try:
            return self.groups[group_id]
        except KeyError:
            raise ParameterError(f"unknown group id {group_id!r}") from None

    def write_edges_csv(self, path) -> None:
        src, dst = self.edges()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["src", "dst"])
            writer.writerows(zip(src.tolist(), dst.tolist()))

    def write_labels_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["node_id", "group"])
            writer.writerows(enumerate(self.labels.tolist()))


def as_mask(n_nodes: int, members) -> np.ndarray:
    """Boolean membership mask from a mask, an id array or any id iterable."""
    if not isinstance(members, np.ndarray):
        members = np.fromiter(members, dtype=np.int64)
    if members.dtype == bool:
        if members.size != n_nodes:
            raise ParameterError("membership mask has wrong length")
        return members.copy()
    mask = np.zeros(n_nodes, dtype=bool)
    if members.size:
        if members.min() < 0 or members.max() >= n_nodes:
            raise ParameterError("member id out of range")
        mask[members.astype(np.int64)] = True
    return mask


def _bernoulli_positions(rng: np.random.Generator, m: int, p: float) -> np.ndarray:
    # Positions of successes among m Bernoulli(p) trials via geometric gaps.
    if m <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(m, dtype=np.int64)
    expected = m * p
    chunk = int(expected + 6.0 * math.sqrt(expected) + 16)
    pieces = []
    last = -1
    while True:
        # gaps past m are discarded anyway; clamping keeps the cumsum from overflowing
        gaps = np.minimum(rng.geometric(p, size=chunk), m + 1)
        pos = last + np.cumsum(gaps, dtype=np.int64)
        if pos[-1] >= m:
            pieces.append(pos[pos < m])
            break
        pieces.append(pos)
        last = int(pos[-1])
    return np.concatenate(pieces)


def _triangle_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Index k enumerates pairs (i, j), i < j, ordered by j then i.
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    j -= (j * (j - 1) // 2) > k
    j += ((j + 1) * j // 2) <= k
    i = k - j * (j - 1) // 2
    return i, j


def generate_sbm(params: BlockParams, seed: int) -> Network:
    """Sample a two-group SBM; H nodes get ids ``0 .. n_hidden-1``."""
    rng = np.random.default_rng(seed)
    nh, nl = params.n_hidden, params.n_rest

    k = _bernoulli_positions(rng, nh * (nh - 1) // 2, params.p_hh)
    hh_i, hh_j = _triangle_pairs(k)

    k = _bernoulli_positions(rng, nh * nl, params.p_hl)
    hl_i, hl_j = k // nl, nh + k % nl

    k = _bernoulli_positions(rng, nl * (nl - 1) // 2, params.p_ll)
    ll_i, ll_j = _triangle_pairs(k)
    ll_i, ll_j = ll_i + nh, ll_j + nh

    hidden = np.zeros(params.n_total, dtype=bool)
    hidden[:nh] = True
    return Network.from_edges(
        params.n_total,
        np.concatenate([hh_i, hl_i, ll_i]),
        np.concatenate([hh_j, hl_j, ll_j]),
        hidden=hidden,
    )


def generate_er(n_total: int, n_hidden: int, p: float, seed: int) -> Network:
    return generate_sbm(BlockParams(n_total, n_hidden, p, p, p), seed)


def assign_probe_group(network: Network, size: int, within_l_only: bool, seed: int,
                       group_id: str | None = None) -> str:
    """Register a uniformly random node subset of exactly ``size`` members."""
    pool = np.flatnonzero(~network.hidden) if within_l_only else np.arange(network.n_nodes)
    if size <= 0:
        raise ParameterError("probe group size must be positive")
    if size > pool.size:
        raise ParameterError(f"probe group size {size} exceeds eligible pool of {pool.size}")
    rng = np.random.default_rng(seed)
    members = np.sort(rng.choice(pool, size=size, replace=False))
    if group_id is None:
        n = len(network.groups)
        while f"K{n}" in network.groups:
            n += 1
        group_id = f"K{n}"
    return network.register_group(group_id, members)


def load_labels_csv(path: str | Path) -> np.ndarray:
    """Read a ``node_id,group`` file back into a hidden-membership mask."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    hidden = np.zeros(len(rows), dtype=bool)
    for row in rows:
        hidden[int(row["node_id"])] = row["group"] == "H"
    return hidden
