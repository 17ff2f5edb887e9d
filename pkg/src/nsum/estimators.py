"""Degree estimators, prevalence estimators and their four compositions.

Naming follows (degree method, prevalence method): ``dRpA`` plugs the
ratio-of-averages degree estimate into the average-of-ratios prevalence
estimator, and so on.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


class Pooling(str, enum.Enum):
    ROA = "RoA"
    AOR = "AoR"


class EstimatorKind(enum.Enum):
    DRPR = (Pooling.ROA, Pooling.ROA)
    DRPA = (Pooling.ROA, Pooling.AOR)
    DAPA = (Pooling.AOR, Pooling.AOR)
    DAPR = (Pooling.AOR, Pooling.ROA)

    @property
    def degree_method(self) -> Pooling:
        return self.value[0]

    @property
    def prevalence_method(self) -> Pooling:
        return self.value[1]

    @property
    def label(self) -> str:
        return "d" + self.degree_method.value[0] + "p" + self.prevalence_method.value[0]

    @classmethod
    def parse(cls, name: str) -> "EstimatorKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ParameterError(f"unknown estimator {name!r}") from None

    def __str__(self):
        return self.label


class Flag(str, enum.Enum):
    OK = "ok"
    NAN = "nan_all_excluded"
    INF = "inf"
    ZERO_DENOMINATOR = "zero_denominator"


@dataclass(frozen=True)
class EstimateOutcome:
    value: float
    flag: Flag
    n_used: int
    n_nan_terms: int = 0

    @property
    def ok(self) -> bool:
        return self.flag is Flag.OK


def _check_probes(y, probe_sizes):
    y = np.asarray(y, dtype=np.float64)
    sizes = np.asarray(probe_sizes, dtype=np.float64)
    if sizes.ndim != 1 or sizes.size == 0:
        raise ParameterError("at least one probe group is required")
    if np.any(sizes <= 0):
        raise ParameterError("probe group sizes must be positive")
    if y.shape[-1] != sizes.size:
        raise ParameterError(
            f"{y.shape[-1]} responses per respondent but {sizes.size} probe sizes"
        )
    return y, sizes


def degree_roa(y_probe, probe_sizes, n_population: int):
    """``N * sum_j y_ij / sum_j N_j``; accepts one row or an ``(n, K)`` matrix."""
    y, sizes = _check_probes(y_probe, probe_sizes)
    return n_population * (y.sum(axis=-1) / sizes.sum())


def degree_aor(y_probe, probe_sizes, n_population: int):
    """``N * mean_j (y_ij / N_j)``."""
    y, sizes = _check_probes(y_probe, probe_sizes)
    if np.all(sizes == sizes[0]):
        # identical to the RoA form; skip the extra per-term rounding
        return n_population * (y.sum(axis=-1) / sizes.sum())
    return n_population * ((y / sizes).sum(axis=-1) / sizes.size)


def _check_pair(y, d):
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if y.shape != d.shape:
        raise ParameterError(f"length mismatch: {y.shape} responses vs {d.shape} degrees")
    if y.size == 0:
        raise ParameterError("no respondents")
    return y, d


def prevalence_roa(y_hidden, degrees) -> EstimateOutcome:
    y, d = _check_pair(y_hidden, degrees)
    num, den = y.sum(), d.sum()
    if den == 0:
        if num == 0:
            return EstimateOutcome(float("nan"), Flag.NAN, 0)
        return EstimateOutcome(float("inf"), Flag.ZERO_DENOMINATOR, y.size)
    return EstimateOutcome(float(num / den), Flag.OK, y.size)


def prevalence_aor(y_hidden, degrees, term_exclusion: bool = True) -> EstimateOutcome:
    """Mean of ``y_i / d_i`` with the 0/0 and y/0 policy.

    A term with ``y_i = d_i = 0`` is dropped (or, with ``term_exclusion``
    off, makes the whole survey NaN). Any term with ``d_i = 0 < y_i`` makes
    the survey estimate Inf.
    """
    y, d = _check_pair(y_hidden, degrees)
    zero = d == 0
    nan_terms = zero & (y == 0)
    inf_terms = zero & (y > 0)
    n_nan = int(np.count_nonzero(nan_terms))
    usable = ~zero
    n_used = int(np.count_nonzero(usable))
    if inf_terms.any():
        return EstimateOutcome(float("inf"), Flag.INF, n_used, n_nan)
    if n_used == 0 or (n_nan and not term_exclusion):
        return EstimateOutcome(float("nan"), Flag.NAN, n_used, n_nan)
    return EstimateOutcome(float(np.mean(y[usable] / d[usable])), Flag.OK, n_used, n_nan)


def estimated_degrees(y_probe, probe_sizes, n_population: int, method: Pooling):
    if method is Pooling.ROA:
        return degree_roa(y_probe, probe_sizes, n_population)
    return degree_aor(y_probe, probe_sizes, n_population)


def estimate(sample, probe_sizes, n_population: int, kind: EstimatorKind,
             term_exclusion: bool = True) -> EstimateOutcome:
    """Composite prevalence estimate for one survey."""
    if sample.y_probe.ndim != 2 or sample.y_probe.shape[1] == 0:
        raise ParameterError("sample has no probe responses")
    d_hat = estimated_degrees(sample.y_probe, probe_sizes, n_population, kind.degree_method)
    if kind.prevalence_method is Pooling.ROA:
        return prevalence_roa(sample.y_hidden, d_hat)
    return prevalence_aor(sample.y_hidden, d_hat, term_exclusion)


def estimate_all(sample, probe_sizes, n_population: int, kinds,
                 term_exclusion: bool = True) -> dict[EstimatorKind, EstimateOutcome]:
    """Like :func:`estimate` for several kinds, sharing degree estimates."""
    degrees = {}
    out = {}
    for kind in kinds:
        if kind.degree_method not in degrees:
            degrees[kind.degree_method] = estimated_degrees(
                sample.y_probe, probe_sizes, n_population, kind.degree_method)
        d_hat = degrees[kind.degree_method]
        if kind.prevalence_method is Pooling.ROA:
            out[kind] = prevalence_roa(sample.y_hidden, d_hat)
        else:
            out[kind] = prevalence_aor(sample.y_hidden, d_hat, term_exclusion)
    return out


def write_estimate_log(path, rows) -> None:
    """``rows`` yields ``(survey_id, kind, outcome)`` triples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["survey_id", "estimator", "value", "flag", "n_used"])
        for survey_id, kind, outcome in rows:
            w.writerow([survey_id, kind.label, repr(outcome.value), outcome.flag.value,
                        outcome.n_used])
