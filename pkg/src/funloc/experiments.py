"""Tuned Monte Carlo rate studies.

Sweeps a sample-size grid with seeded replications, records squared errors of
the local polynomial fit at a fixed site, fits the empirical convergence
exponent on the log-log scale and compares against the locally constant
baseline (degree bound 1, a uniform-kernel regressogram over the ball).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import FunctionVec
from .estimator import assemble_from_coords, solve_sym
from .multiindex import MultiIndexSet, enumerate_indices
from .simulate import (
    GaussianCovariateModel,
    NoiseModel,
    RegressionTarget,
    respond_rows,
    rng_stream,
    sample_coefficients,
)

__all__ = [
    "TuningRule",
    "ConditionCheck",
    "StudyConfig",
    "RateStudyResult",
    "ConfigurationAdvisory",
    "tune",
    "check_conditions",
    "fit_rate",
    "run_rate_study",
]

SMALLBALL_FLOOR = 0.05
EMPTY_ABORT_FRACTION = 0.20


class ConfigurationAdvisory(RuntimeError):
    """The study setup produced too many empty neighborhoods to be meaningful."""


@dataclass(frozen=True)
class TuningRule:
    """Sample-size driven choice of projection dimension and degree bound.

    Without overrides, J(n) = max(2, ceil((log n)^D0)) and
    K(n) = max(1, floor(D1 log n / log log n)).  gamma is the eigenvalue decay
    exponent used only by the condition check (0 when the model claims none).
    """

    D0: float
    D1: float
    gamma: float = 0.0
    c1: float = 1.0
    J_override: int | None = None
    K_override: int | None = None

    def __post_init__(self):
        if self.D0 <= 0 or self.D1 <= 0:
            raise ValueError("D0 and D1 must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


def tune(n: int, rule: TuningRule) -> tuple[int, int]:
    """(J, K) for sample size n; overrides win when present."""
    if n < 10:
        raise ValueError("tuning requires n >= 10")
    logn = math.log(n)
    J = rule.J_override if rule.J_override is not None \
        else max(2, math.ceil(logn ** rule.D0))
    K = rule.K_override if rule.K_override is not None \
        else max(1, math.floor(rule.D1 * logn / math.log(logn)))
    return int(J), int(K)


@dataclass(frozen=True)
class ConditionCheck:
    """Arithmetic of the rate conditions, in printed and sign-corrected forms.

    The printed middle condition is unsatisfiable together with its own first
    clause; the derived form flips the sign inside and is the one enforced.
    Both are reported.  kappa_target = 1 - (8 c1 + 3) D0 D1.
    """

    cond1_value: float
    cond1: bool
    cond2_printed_value: float
    cond2_printed: bool
    cond2_derived_value: float
    cond2_derived: bool
    cond3_value: float
    cond3: bool
    kappa_target: float


def check_conditions(rule: TuningRule) -> ConditionCheck:
    """Evaluate every rate condition for the given constants."""
    c1, D0, D1 = rule.c1, rule.D0, rule.D1
    cond1_value = rule.gamma * D0
    lin = (4.0 * c1 + 1.0) * D0
    printed_value = 2.0 * D1 * (lin - 1.0)
    derived_value = 2.0 * D1 * (1.0 - lin)
    cond3_value = (8.0 * c1 + 3.0) * D0 * D1
    return ConditionCheck(
        cond1_value=cond1_value, cond1=bool(cond1_value > 1.0),
        cond2_printed_value=printed_value,
        cond2_printed=bool(lin < 1.0 and printed_value > 1.0),
        cond2_derived_value=derived_value,
        cond2_derived=bool(derived_value > 1.0),
        cond3_value=cond3_value, cond3=bool(cond3_value < 1.0),
        kappa_target=1.0 - cond3_value,
    )


@dataclass(frozen=True)
class StudyConfig:
    """Everything a rate study needs; built by the config layer or directly."""

    model: GaussianCovariateModel
    target: RegressionTarget
    noise: NoiseModel
    site: FunctionVec
    delta: float
    n_grid: tuple[int, ...]
    replications: int
    rule: TuningRule
    seed: int
    config_digest: str = ""


@dataclass
class RateStudyResult:
    per_n: list            # row dicts, main arm then baseline, each sorted by n
    kappa_hat: float
    baseline_kappa_hat: float
    conditions: ConditionCheck
    seed: int
    config_digest: str
    advisories: list = field(default_factory=list)


def fit_rate(points: Sequence[tuple[float, float]]) -> float:
    """Negative slope of the least-squares line of log err on log n.

    Nonpositive errors are excluded with a warning; fewer than three usable
    points is an error.
    """
    usable = [(n, e) for n, e in points if e > 0.0]
    dropped = len(points) - len(usable)
    if dropped:
        warnings.warn(f"fit_rate: excluded {dropped} nonpositive error value(s)")
    if len(usable) < 3:
        raise ValueError(f"fit_rate needs >= 3 positive points, got {len(usable)}")
    logn = np.log([n for n, _ in usable])
    loge = np.log([e for _, e in usable])
    slope = np.polyfit(logn, loge, 1)[0]
    return float(-slope)


def _site_padded(x: FunctionVec, L: int) -> np.ndarray:
    out = np.zeros(L)
    out[: min(len(x), L)] = x.coeffs[:L]
    return out


def _replicate(cfg: StudyConfig, n: int, n_idx: int, rep: int, mset: MultiIndexSet,
               mset_base: MultiIndexSet, g_site: float) -> tuple[float, float, int]:
    """One seeded replication: squared errors of the main and baseline fits."""
    data_rng = rng_stream(cfg.seed, n_idx, rep, 0)
    noise_rng = rng_stream(cfg.seed, n_idx, rep, 1)
    C = sample_coefficients(cfg.model, n, data_rng)
    y, _ = respond_rows(cfg.target, cfg.noise, C, noise_rng)

    L = max(C.shape[1], mset.J, len(cfg.site))
    D = np.zeros((n, L))
    D[:, : C.shape[1]] = C
    D -= _site_padded(cfg.site, L)
    d2 = np.einsum("ij,ij->i", D, D) + cfg.site.tail_norm_sq
    mask = d2 <= cfg.delta * cfg.delta
    m = int(mask.sum())
    if m == 0:
        return g_site * g_site, g_site * g_site, 0

    y_loc = y[mask]
    coords = D[mask][:, : mset.J]
    M, Yv, _ = assemble_from_coords(coords, y_loc, mset)
    alpha, _, _ = solve_sym(M + np.diag(mset.regularizer_diagonal()), Yv)
    sq_main = (float(alpha[0]) - g_site) ** 2

    Mb, Yb, _ = assemble_from_coords(coords[:, : mset_base.J], y_loc, mset_base)
    ab, _, _ = solve_sym(Mb + np.diag(mset_base.regularizer_diagonal()), Yb)
    sq_base = (float(ab[0]) - g_site) ** 2
    return sq_main, sq_base, m


def run_rate_study(cfg: StudyConfig, threads: int = 1) -> RateStudyResult:
    """Sweep the n grid with seeded replications; aggregate and fit exponents.

    Replications are independent tasks keyed by (n index, replication index);
    results are aggregated in index order, so outputs are identical for every
    worker count.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    g_site = cfg.target.value(cfg.site)
    R = cfg.replications

    plans = []
    for n in cfg.n_grid:
        J, K = tune(n, cfg.rule)
        plans.append((n, J, K, enumerate_indices(J, K), enumerate_indices(J, 1)))

    sq_main = np.empty((len(cfg.n_grid), R))
    sq_base = np.empty((len(cfg.n_grid), R))
    n_local = np.empty((len(cfg.n_grid), R), dtype=np.int64)

    tasks = [(i, r) for i in range(len(cfg.n_grid)) for r in range(R)]

    def run_task(task):
        i, r = task
        n, _, _, mset, mset_base = plans[i]
        return _replicate(cfg, n, i, r, mset, mset_base, g_site)

    if threads == 1:
        results = [run_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_task, tasks))
    for (i, r), (a, b, m) in zip(tasks, results):
        sq_main[i, r] = a
        sq_base[i, r] = b
        n_local[i, r] = m

    advisories = []
    per_n_main = []
    per_n_base = []
    for i, (n, J, K, _, _) in enumerate(plans):
        empties = int(np.sum(n_local[i] == 0))
        if empties > EMPTY_ABORT_FRACTION * R:
            raise ConfigurationAdvisory(
                f"{empties}/{R} replications at n={n} had an empty neighborhood; "
                "increase delta or rescale the eigenvalues")
        smallball = float(n_local[i].mean()) / n
        if smallball < SMALLBALL_FLOOR:
            advisories.append(f"smallball_hat={smallball:.4g} at n={n} "
                              f"is below the floor {SMALLBALL_FLOOR}")
        for arm, errs, JJ, KK in (("main", sq_main[i], J, K),
                                  ("baseline", sq_base[i], J, 1)):
            per = {
                "arm": arm, "n": n, "J": JJ, "K": KK, "delta": cfg.delta,
                "median_sq_err": float(np.median(errs)),
                "mean_sq_err": float(errs.mean()),
                "q10": float(np.quantile(errs, 0.10)),
                "q90": float(np.quantile(errs, 0.90)),
                "mean_n_local": float(n_local[i].mean()),
                "smallball_hat": smallball,
                "n_empty": empties,
            }
            (per_n_main if arm == "main" else per_n_base).append(per)

    kappa = fit_rate([(row["n"], row["median_sq_err"]) for row in per_n_main])
    kappa_base = fit_rate([(row["n"], row["median_sq_err"]) for row in per_n_base])
    return RateStudyResult(per_n=per_n_main + per_n_base, kappa_hat=kappa,
                           baseline_kappa_hat=kappa_base,
                           conditions=check_conditions(cfg.rule),
                           seed=cfg.seed, config_digest=cfg.config_digest,
                           advisories=advisories)
