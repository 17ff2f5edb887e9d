"""Survey sampling and aggregated relational data (ARD) responses."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .netgen import BlockParams, Network, as_mask


@dataclass
class ArdSample:
    """Responses of one survey draw.

    ``y_probe`` has shape ``(n, K)``. ``true_degrees`` is only known when
    responses come from a realized network.
    """

    respondent_ids: np.ndarray
    is_hidden: np.ndarray
    y_hidden: np.ndarray
    y_probe: np.ndarray
    true_degrees: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.respondent_ids.size)

    @property
    def n_hidden_in_sample(self) -> int:
        return int(np.count_nonzero(self.is_hidden))

    def write_csv(self, path) -> None:
        k = self.y_probe.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["respondent_id", "is_hidden", "y_hidden", "degree",
                        *[f"y_probe_{j + 1}" for j in range(k)]])
            degrees = (self.true_degrees.tolist() if self.true_degrees is not None
                       else [""] * self.n)
            for i in range(self.n):
                w.writerow([int(self.respondent_ids[i]), int(self.is_hidden[i]),
                            int(self.y_hidden[i]), degrees[i],
                            *self.y_probe[i].tolist()])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def srs_without_replacement(n_population: int, n_sample: int, seed) -> np.ndarray:
    if not 0 <= n_sample <= n_population:
        raise ParameterError(
            f"cannot draw {n_sample} respondents from a population of {n_population}"
        )
    return _rng(seed).choice(n_population, size=n_sample, replace=False)


def ard_from_graph(network: Network, respondents, hidden, probes) -> ArdSample:
    """Count each respondent's neighbors in the hidden set and each probe group.

    ``hidden`` is a node-id collection or a boolean mask. Respondents never
    count themselves because the adjacency has no self-loops.
    """
    respondents = np.asarray(respondents, dtype=np.int64)
    if respondents.size and (respondents.min() < 0 or respondents.max() >= network.n_nodes):
        raise ParameterError("respondent id out of range")
    hidden_mask = as_mask(network.n_nodes, hidden)
    masks = [network.group_mask(g) for g in probes]
    y_hidden = network.neighbor_counts(hidden_mask, respondents)
    y_probe = np.empty((respondents.size, len(masks)), dtype=np.int64)
    for j, m in enumerate(masks):
        y_probe[:, j] = network.neighbor_counts(m, respondents)
    return ArdSample(
        respondent_ids=respondents,
        is_hidden=hidden_mask[respondents],
        y_hidden=y_hidden,
        y_probe=y_probe,
        true_degrees=network.degrees()[respondents],
    )


def conditioned_respondents(n_total: int, n_hidden: int, n_sample: int, r: float,
                            rng: np.random.Generator) -> np.ndarray:
    """SRS within H and within L with ``round(n*r)`` respondents from H."""
    n_h = int(round(n_sample * r))
    n_l = n_sample - n_h
    if n_h > n_hidden or n_l > n_total - n_hidden or n_h < 0:
        raise ParameterError(
            f"cannot place {n_h} hidden and {n_l} other respondents in a population "
            f"with {n_hidden} hidden of {n_total}"
        )
    h = rng.choice(n_hidden, size=n_h, replace=False)
    l = n_hidden + rng.choice(n_total - n_hidden, size=n_l, replace=False)
    return np.concatenate([h, l])


def ard_from_model(params: BlockParams, n_sample: int, probe_size: int,
                   condition_r: float | None = None, seed=0) -> ArdSample:
    """Draw responses straight from the binomial SBM response model.

    The single probe group K occupies ids ``n_hidden .. n_hidden+probe_size-1``
    (so K lies inside L). With ``condition_r`` the sample holds exactly
    ``round(n_sample * condition_r)`` hidden respondents; otherwise the
    composition follows from simple random sampling.
    """
    if not 0 < probe_size <= params.n_rest:
        raise ParameterError(f"probe size must lie in (0, {params.n_rest}]")
    rng = _rng(seed)
    if condition_r is None:
        ids = srs_without_replacement(params.n_total, n_sample, rng)
    else:
        if not 0 <= condition_r <= 1:
            raise ParameterError(f"conditioned R must lie in [0, 1], got {condition_r}")
        ids = conditioned_respondents(params.n_total, params.n_hidden, n_sample,
                                      condition_r, rng)
    is_h = ids < params.n_hidden
    in_k = (ids >= params.n_hidden) & (ids < params.n_hidden + probe_size)
    p_to_h = np.where(is_h, params.p_hh, params.p_hl)
    p_to_k = np.where(is_h, params.p_hl, params.p_ll)
    y_hidden = rng.binomial(params.n_hidden - is_h, p_to_h)
    y_k = rng.binomial(probe_size - in_k, p_to_k)
    return ArdSample(
        respondent_ids=ids,
        is_hidden=is_h,
        y_hidden=y_hidden.astype(np.int64),
        y_probe=y_k.astype(np.int64)[:, None],
    )
