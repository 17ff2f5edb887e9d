"""First-order moments of the dRpR and dRpA estimators under a two-group SBM.

Setting: one probe group K inside L, simple random sampling with the
hidden share of the sample tending to R. Each closed form comes in a
general version (``p_hh, p_hl, p_ll``) and a scaled version with
``p_hh = p_ll = a * p`` and ``p_hl = p``.

Two variance forms exist for dRpA. ``"derived"`` (the default) applies
the first-order ratio expansion to every respondent's ``Y_iH / Y_iK``.
``"swapped"`` is an alternative closed form whose L-respondent term has
``p_hl`` and ``p_ll`` exchanged. The two agree only when ``a = 1``;
Monte Carlo runs track ``"derived"``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SingularityError

DRPR = "dRpR"
DRPA = "dRpA"
KINDS = (DRPR, DRPA)
TIE = "tie"
INVALID = "invalid"
TIE_RTOL = 1e-12
SIGN_ZERO_TOL = 1e-14
VARIANCE_FORMS = ("derived", "swapped")


def _kind(kind) -> str:
    name = getattr(kind, "label", kind)
    if name not in KINDS:
        raise ParameterError(f"closed forms exist only for dRpR and dRpA, not {name!r}")
    return name


def _form(form: str) -> str:
    if form not in VARIANCE_FORMS:
        raise ParameterError(f"variance form must be one of {VARIANCE_FORMS}")
    return form


@dataclass(frozen=True)
class MomentPair:
    expectation: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ParameterError("variance must be nonnegative")


def expect_general(kind, p_hh: float, p_hl: float, p_ll: float, r: float) -> float:
    kind = _kind(kind)
    if kind == DRPR:
        den = r * p_hl + (1 - r) * p_ll
        if den == 0:
            raise SingularityError("R*p_hl + (1-R)*p_ll is zero")
        return r * (r * p_hh + (1 - r) * p_hl) / den
    if p_hl == 0 or p_ll == 0:
        raise SingularityError("dRpA expectation needs p_hl > 0 and p_ll > 0")
    return r * (r * p_hh / p_hl + (1 - r) * p_hl / p_ll)


def var_general(kind, p_hh: float, p_hl: float, p_ll: float, r: float,
                n: float, n_total: float, n_probe: float, form: str = "derived") -> float:
    kind = _kind(kind)
    _form(form)
    if min(n, n_total, n_probe) <= 0:
        raise ParameterError("n, N and N_K must be positive")
    q = 1 - r
    if kind == DRPR:
        den = r * p_hl + q * p_ll
        if den == 0:
            raise SingularityError("R*p_hl + (1-R)*p_ll is zero")
        num = r * p_hh + q * p_hl
        var_y = r * p_hh * (1 - p_hh) + q * p_hl * (1 - p_hl)
        var_k = r * p_hl * (1 - p_hl) + q * p_ll * (1 - p_ll)
        return (r / (n * n_total) * var_y / den ** 2
                + r ** 2 / (n * n_probe) * num ** 2 * var_k / den ** 4)
    if p_hl == 0 or p_ll == 0:
        raise SingularityError("dRpA variance needs p_hl > 0 and p_ll > 0")
    if form == "swapped":
        return (r / (n * n_total * p_hl ** 2) * (r * p_hh * (1 - p_hh) + q * p_ll * (1 - p_hl))
                + r ** 2 / (n * n_probe * p_hl ** 3)
                * (r * p_hh ** 2 * (1 - p_hl) + q * p_hl ** 2 * (1 - p_ll)))
    # per-respondent Var(Y_H/Y_K) ~ [E(K)^2 Var(H) + E(H)^2 Var(K)] / E(K)^4
    h_term = (p_hh * (1 - p_hh) / p_hl ** 2 / n_total
              + r * p_hh ** 2 * (1 - p_hl) / p_hl ** 3 / n_probe)
    l_term = (p_hl * (1 - p_hl) / p_ll ** 2 / n_total
              + r * p_hl ** 2 * (1 - p_ll) / p_ll ** 3 / n_probe)
    return r / n * (r * h_term + q * l_term)


def moments_general(kind, p_hh, p_hl, p_ll, r, n, n_total, n_probe,
                    form: str = "derived") -> MomentPair:
    return MomentPair(expect_general(kind, p_hh, p_hl, p_ll, r),
                      var_general(kind, p_hh, p_hl, p_ll, r, n, n_total, n_probe, form))


def bias_scaled(kind, a, r):
    """Limiting bias with ``p_hh = p_ll = a * p``; independent of ``p``."""
    kind = _kind(kind)
    if kind == DRPR:
        return r * (a - 1) * (2 * r - 1) / ((1 - r) * a + r)
    return r * (a - 1) * ((a + 1) * r - 1) / a


def var_scaled(kind, a, r, p, r_k, n_times_n, form: str = "derived"):
    """Limiting variance in terms of ``a, R, p, r_K = N_K/N`` and ``nN``."""
    kind = _kind(kind)
    _form(form)
    q = 1 - r
    pre = r / (n_times_n * p)
    if kind == DRPR:
        s = r + q * a
        t = r * a + q
        first = (r * a + q - (r * a * a + q) * p) / s ** 2
        second = (r / r_k) * t ** 2 * (r + q * a - (r + q * a * a) * p) / s ** 4
        return pre * (first + second)
    if form == "swapped":
        return pre * (p * a * (1 - a) * r + (1 - p) * a
                      + ((((1 - p) * a * a + p * a - 1) * r * r + (1 - p * a) * r) / r_k))
    first = r * a * (1 - a * p) + q * (1 - p) / a ** 2
    second = (r / r_k) * (r * a * a * (1 - p) + q * (1 - a * p) / a ** 3)
    return pre * (first + second)


def rmse_scaled(kind, a, r, p, r_k, n_times_n, form: str = "derived"):
    return np.sqrt(bias_scaled(kind, a, r) ** 2 + var_scaled(kind, a, r, p, r_k, n_times_n, form))


def _is_close(x: float, y: float) -> bool:
    return abs(x - y) <= TIE_RTOL * max(1.0, abs(x), abs(y))


def bias_sign_region(kind, a: float, r: float) -> str:
    """Sign of the scaled bias from the piecewise case analysis.

    Returns ``"positive"``, ``"zero"`` or ``"negative"``.
    """
    kind = _kind(kind)
    if a <= 0 or not 0 < r < 1:
        raise ParameterError("need a > 0 and 0 < R < 1")
    if _is_close(a, 1.0):
        return "zero"
    if kind == DRPR:
        if _is_close(r, 0.5):
            return "zero"
        positive = (a > 1 and r > 0.5) or (a < 1 and r < 0.5)
    else:
        boundary = (1 - r) / r
        if _is_close(a, boundary):
            return "zero"
        positive = (a > 1 and a > boundary) or (a < 1 and a < boundary)
    return "positive" if positive else "negative"


def sign_label(x: float, tol: float = SIGN_ZERO_TOL) -> str:
    if abs(x) <= tol:
        return "zero"
    return "positive" if x > 0 else "negative"


def make_axis(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic axis with values rounded to clean decimals."""
    if step <= 0 or stop < start:
        raise ParameterError("axis needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def _winner(x_r: np.ndarray, x_a: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(x_r), np.abs(x_a))
    tie = np.abs(x_r - x_a) <= TIE_RTOL * scale
    return np.where(tie, TIE, np.where(x_a < x_r, DRPA, DRPR)).astype(object)


@dataclass(frozen=True)
class GridPreset:
    log_a: tuple[float, float, float]
    r: tuple[float, float, float]


PRESETS = {
    "fig1-top": GridPreset((-4.0, 4.0, 0.1), (0.01, 0.99, 0.02)),
    "fig1-bottom": GridPreset((0.0, 4.0, 0.05), (0.001, 0.1, 0.001)),
}
FIG1_FIXED = {"p": 0.01, "r_k": 0.1, "n_times_n": 500_000.0}


@dataclass
class WinnerGrid:
    """Analytic bias/variance/RMSE over a (log a, R) lattice.

    Arrays have shape ``(len(log_a_axis), len(r_axis))``; ``log`` is the
    natural logarithm. Cells with ``a*p > 1`` hold NaN and the ``invalid``
    label.
    """

    log_a_axis: np.ndarray
    r_axis: np.ndarray
    p: float
    r_k: float
    n_times_n: float
    form: str
    bias: dict[str, np.ndarray] = field(default_factory=dict)
    var: dict[str, np.ndarray] = field(default_factory=dict)
    rmse: dict[str, np.ndarray] = field(default_factory=dict)
    bias_winner: np.ndarray | None = None
    var_winner: np.ndarray | None = None
    rmse_winner: np.ndarray | None = None
    valid: np.ndarray | None = None

    def count(self, metric: str, label: str) -> int:
        winners = getattr(self, f"{metric}_winner")
        return int(np.count_nonzero(winners == label))

    def cell(self, log_a: float, r: float) -> dict:
        i = int(np.argmin(np.abs(self.log_a_axis - log_a)))
        j = int(np.argmin(np.abs(self.r_axis - r)))
        return self._row(i, j)

    def _row(self, i: int, j: int) -> dict:
        return {
            "log_a": float(self.log_a_axis[i]),
            "R": float(self.r_axis[j]),
            "bias_drpr": float(self.bias[DRPR][i, j]),
            "bias_drpa": float(self.bias[DRPA][i, j]),
            "var_drpr": float(self.var[DRPR][i, j]),
            "var_drpa": float(self.var[DRPA][i, j]),
            "rmse_drpr": float(self.rmse[DRPR][i, j]),
            "rmse_drpa": float(self.rmse[DRPA][i, j]),
            "bias_winner": self.bias_winner[i, j],
            "var_winner": self.var_winner[i, j],
            "rmse_winner": self.rmse_winner[i, j],
        }

    def rows(self):
        for i in range(self.log_a_axis.size):
            for j in range(self.r_axis.size):
                yield self._row(i, j)

    def fixed(self) -> dict:
        return {"p": self.p, "r_k": self.r_k, "n_times_n": self.n_times_n,
                "variance_form": self.form,
                "log_a_axis": [float(x) for x in self.log_a_axis],
                "r_axis": [float(x) for x in self.r_axis]}

    def write_csv(self, path, sidecar=True) -> None:
        header = ["log_a", "R", "bias_drpr", "bias_drpa", "var_drpr", "var_drpa",
                  "rmse_drpr", "rmse_drpa", "bias_winner", "var_winner", "rmse_winner"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in self.rows():
                w.writerow([repr(row[h]) if isinstance(row[h], float) else row[h]
                            for h in header])
        if sidecar:
            with open(str(path).removesuffix(".csv") + ".json", "w") as fh:
                json.dump(self.fixed(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def winner_grid(p: float = 0.01, r_k: float = 0.1, n_times_n: float = 500_000.0,
                log_a_range=(-4.0, 4.0, 0.1), r_range=(0.01, 0.99, 0.02),
                form: str = "derived") -> WinnerGrid:
    """Evaluate both estimators on a lattice and label per-metric winners.

    Ranges are ``(start, stop, step)`` triples with inclusive ``stop``.
    """
    _form(form)
    if not 0 < p <= 1 or not 0 < r_k < 1 or n_times_n <= 0:
        raise ParameterError("need 0 < p <= 1, 0 < r_k < 1 and nN > 0")
    log_a = make_axis(*log_a_range)
    rs = make_axis(*r_range)
    if rs[0] <= 0 or rs[-1] >= 1:
        raise ParameterError("R axis must lie inside (0, 1)")
    a = np.exp(log_a)[:, None]
    r = rs[None, :]
    valid = np.broadcast_to(a * p <= 1.0, (log_a.size, rs.size)).copy()
    grid = WinnerGrid(log_a, rs, p, r_k, n_times_n, form, valid=valid)
    with np.errstate(invalid="ignore"):
        for kind in KINDS:
            b = np.broadcast_to(bias_scaled(kind, a, r), valid.shape)
            v = np.broadcast_to(var_scaled(kind, a, r, p, r_k, n_times_n, form), valid.shape)
            grid.bias[kind] = np.where(valid, b, np.nan)
            grid.var[kind] = np.where(valid, v, np.nan)
            grid.rmse[kind] = np.sqrt(grid.bias[kind] ** 2 + grid.var[kind])
    for metric, values, transform in (("bias", grid.bias, np.abs),
                                      ("var", grid.var, lambda x: x),
                                      ("rmse", grid.rmse, lambda x: x)):
        labels = _winner(transform(values[DRPR]), transform(values[DRPA]))
        labels[~valid] = INVALID
        setattr(grid, f"{metric}_winner", labels)
    return grid


def preset_grid(name: str, p: float = 0.01, r_k: float = 0.1,
                n_times_n: float = 500_000.0, form: str = "derived") -> WinnerGrid:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return winner_grid(p, r_k, n_times_n, preset.log_a, preset.r, form)


def grid_sweep(fixed_sets, log_a_range=(-4.0, 4.0, 0.1), r_range=(0.01, 0.99, 0.02),
               form: str = "derived") -> list[WinnerGrid]:
    """One grid per ``(p, r_k, nN)`` triple, all on the same lattice."""
    return [winner_grid(p, r_k, nn, log_a_range, r_range, form) for p, r_k, nn in fixed_sets]


def s1_prevalence_variances(degrees, r: float, n: int | None = None) -> tuple[float, float]:
    """Exact binomial-model variances of the RoA and AoR prevalence estimators.

    Degrees are known; ``y_i ~ Binom(d_i, R)``. The AoR variance uses the
    harmonic mean of the degrees, the RoA variance the arithmetic mean.
    """
    d = np.asarray(degrees, dtype=np.float64)
    if d.size == 0 or np.any(d <= 0):
        raise ParameterError("degrees must be positive")
    if not 0 < r < 1:
        raise ParameterError("R must lie in (0, 1)")
    n = d.size if n is None else n
    base = r * (1 - r) / n
    return float(base / d.mean()), float(base * np.mean(1.0 / d))


def s1_degree_variances(d_i: float, n_population: int, probe_sizes) -> tuple[float, float]:
    """Exact variances of the RoA and AoR degree estimators for one respondent.

    Model: ``y_ij ~ Binom(d_i, N_j / N)`` independently across probe groups.
    """
    sizes = np.asarray(probe_sizes, dtype=np.float64)
    if sizes.size == 0:
        raise ParameterError("at least one probe group is required")
    if np.any(sizes <= 0):
        raise ParameterError("probe sizes must be positive")
    total = sizes.sum()
    if total >= n_population:
        raise ParameterError("probe sizes must sum to less than N")
    k = sizes.size
    var_roa = d_i * (n_population / total - np.sum(sizes ** 2) / total ** 2)
    var_aor = d_i * (n_population / k ** 2 * np.sum(1.0 / sizes) - 1.0 / k)
    return float(var_roa), float(var_aor)


def grid_summary(grid: WinnerGrid) -> dict:
    out = {"fixed": {k: v for k, v in grid.fixed().items() if not k.endswith("_axis")}}
    for metric in ("bias", "var", "rmse"):
        out[metric] = {lab: grid.count(metric, lab) for lab in (DRPR, DRPA, TIE, INVALID)}
    return out

