"""Monte Carlo measurement of the visit probability, blockade survival,
collision-type frequencies, W-curves, and arrival-distance symmetry.

Trials are independent substreams keyed by (seed, trial) so any partition of
trials across worker threads accumulates the exact same integer counts; all
merging is plain integer addition.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from . import checks
from .analytics import (r_formula, rk_formula, s_formula, sk_formula,
                        solve_q, theta_from_q)
from .configs import (RIGHT_HALF_LINE, TWO_SIDED, LEFT, RIGHT, STILL,
                      Configuration, ExperimentParams, _sample_with_rng,
                      sample_config, trial_rng)
from .laws import ClusterLaw
from .resolver import center_survives, resolve_stats

DEFAULT_CI_LEVEL = 0.95


def default_workers() -> int:
    return max(1, int(os.environ.get("CLUSTERBA_WORKERS", "1")))


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    estimate: float
    trials: int
    ci: Tuple[float, float]
    ci_level: float
    n_sites: int
    params: ExperimentParams
    analytic: Optional[float] = None
    extra: dict = field(default_factory=dict)


def wilson_ci(successes: int, trials: int, level: float = DEFAULT_CI_LEVEL):
    """Wilson score interval for a binomial proportion."""
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    z = norm.ppf(0.5 + level / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials
                       + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def _mean_ci(total, total_sq, trials, level=DEFAULT_CI_LEVEL):
    """Normal-approximation CI for a sample mean from exact integer sums."""
    mean = total / trials
    var = max(0.0, total_sq / trials - mean * mean)
    half = norm.ppf(0.5 + level / 2.0) * np.sqrt(var / trials)
    return mean, (mean - half, mean + half)


def _accumulate(trial_fn, trials: int, workers: Optional[int] = None):
    """Sum trial_fn(trial) (an int64 vector) over all trials.

    Integer addition is exact and commutative, so the result does not depend
    on the worker count or on how trials are chunked."""
    if workers is None:
        workers = default_workers()
    if workers <= 1 or trials < 2 * workers:
        total = trial_fn(0)
        for t in range(1, trials):
            total = total + trial_fn(t)
        return total

    def run(chunk):
        tot = trial_fn(int(chunk[0]))
        for t in chunk[1:]:
            tot = tot + trial_fn(int(t))
        return tot

    chunks = np.array_split(np.arange(trials), workers)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(run, [c for c in chunks if c.size]))
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def _prefix(config: Configuration, n: int) -> Configuration:
    return Configuration(config.positions[:n], config.velocities[:n],
                         config.sizes[:n], origin=config.origin,
                         side=config.side)


def estimate_q(params: ExperimentParams, n_ladder: Sequence[int],
               trials: int, workers: Optional[int] = None,
               ci_level: float = DEFAULT_CI_LEVEL) -> List[EstimateReport]:
    """Visit-probability estimates Q_n on nested windows of one realization.

    For each n in the increasing ladder, the reported estimate is the
    fraction of trials whose restriction to the first n sites leaves at
    least one surviving left arrow (which then exits past the origin).
    Within every trial the indicators are asserted nondecreasing in n; the
    largest-n estimate is a lower estimate of q (window bias Q_n <= q).
    """
    ladder = [int(n) for n in n_ladder]
    if not ladder or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("n_ladder must be a nonempty increasing list")
    if params.side != RIGHT_HALF_LINE:
        raise ValueError("estimate_q runs on the right half-line")
    run_params = params.with_(n=ladder[-1])
    L = len(ladder)

    def one(trial):
        config = sample_config(run_params, trial)
        counts = np.zeros(L + 1, np.int64)
        prev = 0
        for i, n in enumerate(ladder):
            st = resolve_stats(_prefix(config, n))
            visited = 1 if st.lefts > 0 else 0
            ok = visited >= prev
            checks.record(ok)
            if not ok:
                raise checks.InvariantViolation(
                    "window indicator decreased between n=%d and n=%d"
                    % (ladder[i - 1], n))
            counts[i] = visited
            prev = visited
        counts[L] = st.lefts  # exit count at the full window
        return counts

    totals = _accumulate(one, trials, workers)
    analytic = solve_q(params.law, params.p)
    reports = []
    for i, n in enumerate(ladder):
        k = int(totals[i])
        reports.append(EstimateReport(
            quantity="q", estimate=k / trials, trials=trials,
            ci=wilson_ci(k, trials, ci_level), ci_level=ci_level,
            n_sites=n, params=run_params.with_(n=n), analytic=analytic,
            extra={"bias": "lower", "successes": k,
                   "mean_exits_full_window": float(totals[L]) / trials}))
    return reports


def _sample_cluster_min1(law: ClusterLaw, rng, max_tries: int = 100000):
    for _ in range(max_tries):
        x = int(law.sample(rng, 1)[0])
        if x >= 1:
            return x
    raise RuntimeError("law never produced a cluster of size >= 1")


def estimate_theta(params: ExperimentParams, trials: int,
                   workers: Optional[int] = None,
                   ci_level: float = DEFAULT_CI_LEVEL) -> EstimateReport:
    """Survival probability of a distinguished central cluster.

    The window holds params.n sites split across the origin; the first site
    right of the origin is forced to a fresh cluster sampled conditioned on
    size >= 1 (a size-0 draw has nothing whose survival could be asked
    about).  Success means no arrow from either side ever reaches that site,
    so its multiplicity is intact at the end; the window bias is upward
    (survival is a decreasing event under window growth).
    """
    if params.side != TWO_SIDED:
        raise ValueError("estimate_theta runs on a two-sided window")
    if params.n < 2:
        raise ValueError("need at least one site on each side")
    center = params.n // 2

    def one(trial):
        config = sample_config(params, trial)
        size = _sample_cluster_min1(params.law,
                                    trial_rng(params.seed, trial, 2))
        # the freshly sampled arrays are trial-local, so patch in place
        config.velocities[center] = STILL
        config.sizes[center] = size
        survived = center_survives(config, center)
        return np.array([1 if survived else 0], np.int64)

    k = int(_accumulate(one, trials, workers)[0])
    analytic = theta_from_q(solve_q(params.law, params.p))
    return EstimateReport(
        quantity="theta", estimate=k / trials, trials=trials,
        ci=wilson_ci(k, trials, ci_level), ci_level=ci_level,
        n_sites=params.n, params=params, analytic=analytic,
        extra={"bias": "upper", "successes": k,
               "center_conditioned_min_size": 1})


@dataclass(frozen=True)
class SRReport:
    """Joint frequencies of the fate of the first site when it holds a
    right arrow, split by whether the origin was visited."""

    s_k: List[EstimateReport]   # visited and died on a cluster of initial size k
    r_k: List[EstimateReport]   # not visited, died on a cluster of size k
    s_total: EstimateReport     # visited, died on any cluster
    r_total: EstimateReport
    arrow_arrow: EstimateReport  # first right arrow annihilated with an arrow
    visited: EstimateReport      # origin visited at all (a q estimate)
    counts: Dict[str, int]


def estimate_sr(params: ExperimentParams, trials: int, k_max: int,
                workers: Optional[int] = None,
                ci_level: float = DEFAULT_CI_LEVEL) -> SRReport:
    """Estimate s_k, r_k, and the arrow-arrow closure piece.

    All frequencies are unconditional (divided by the total trial count),
    matching the analytic formulas which already carry the (1-p)/2 weight of
    the first site holding a right arrow."""
    if params.side != RIGHT_HALF_LINE:
        raise ValueError("estimate_sr runs on the right half-line")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    # layout: s_1..s_kmax, r_1..r_kmax, s_over, r_over, aa, survived,
    #         first_is_right, visited
    NS, NR = 0, k_max
    S_OVER, R_OVER, AA, SURV, IS_RIGHT, VISITED = (
        2 * k_max, 2 * k_max + 1, 2 * k_max + 2, 2 * k_max + 3,
        2 * k_max + 4, 2 * k_max + 5)

    def one(trial):
        config = sample_config(params, trial)
        st = resolve_stats(config)
        c = np.zeros(2 * k_max + 6, np.int64)
        visited = st.lefts > 0
        if visited:
            c[VISITED] = 1
        if config.velocities[0] != RIGHT:
            return c
        c[IS_RIGHT] = 1
        if st.first_kind == 0:
            c[AA] = 1
        elif st.first_kind == 1:
            size = int(config.sizes[st.first_partner])
            if size <= k_max:
                c[(NS if visited else NR) + size - 1] = 1
            else:
                c[S_OVER if visited else R_OVER] = 1
        else:
            c[SURV] = 1
        return c

    totals = _accumulate(one, trials, workers)
    p = params.p
    q = solve_q(params.law, p)

    def report(label, count, analytic):
        return EstimateReport(
            quantity=label, estimate=count / trials, trials=trials,
            ci=wilson_ci(count, trials, ci_level), ci_level=ci_level,
            n_sites=params.n, params=params, analytic=analytic,
            extra={"successes": count})

    s_reports = [report("s_%d" % k, int(totals[NS + k - 1]),
                        sk_formula(params.law, p, q, k))
                 for k in range(1, k_max + 1)]
    r_reports = [report("r_%d" % k, int(totals[NR + k - 1]),
                        rk_formula(params.law, p, q, k))
                 for k in range(1, k_max + 1)]
    s_all = int(totals[NS:NS + k_max].sum() + totals[S_OVER])
    r_all = int(totals[NR:NR + k_max].sum() + totals[R_OVER])
    aa = int(totals[AA])
    s_an = s_formula(params.law, p, q)
    r_an = r_formula(params.law, p, q) if q < 1 else None
    aa_an = None
    if r_an is not None:
        aa_an = 0.5 * (1.0 - p) - s_an - r_an
    counts = {"s_total": s_all, "r_total": r_all, "arrow_arrow": aa,
              "survived": int(totals[SURV]),
              "first_is_right_arrow": int(totals[IS_RIGHT]),
              "visited": int(totals[VISITED]),
              "s_k": [int(totals[NS + i]) for i in range(k_max)],
              "r_k": [int(totals[NR + i]) for i in range(k_max)],
              "s_over_kmax": int(totals[S_OVER]),
              "r_over_kmax": int(totals[R_OVER])}
    return SRReport(
        s_k=s_reports, r_k=r_reports,
        s_total=report("s", s_all, s_an),
        r_total=report("r", r_all, r_an),
        arrow_arrow=report("arrow_arrow_first", aa, aa_an),
        visited=report("q", int(totals[VISITED]), q),
        counts=counts)


def estimate_W_curve(params: ExperimentParams, n_list: Sequence[int],
                     trials: int, workers: Optional[int] = None,
                     ci_level: float = DEFAULT_CI_LEVEL):
    """Mean W(1,n)/n over nested windows, and theta_sup.

    W(1,n) is the count of surviving blockade units minus surviving arrows
    in the restriction to the first n sites.  theta_sup = max(0, max_n of
    mean W(1,n)/n) is compared against the analytic (1-q)^2 but only
    flagged, never asserted: the finite-n maximum is a lower approximant,
    and with multi-unit clusters partially hit clusters keep a positive
    density of units, so the limit can sit strictly above (1-q)^2 scaled
    by the cluster-site density.

    Returns (reports, sup_report)."""
    ns = [int(n) for n in n_list]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be a nonempty increasing list")
    if params.side != RIGHT_HALF_LINE:
        raise ValueError("estimate_W_curve runs on the right half-line")
    run_params = params.with_(n=ns[-1])
    L = len(ns)

    def one(trial):
        config = sample_config(run_params, trial)
        c = np.zeros(2 * L, np.int64)
        for i, n in enumerate(ns):
            st = resolve_stats(_prefix(config, n))
            w = st.units - (st.lefts + st.rights)
            c[i] = w
            c[L + i] = w * w
        return c

    totals = _accumulate(one, trials, workers)
    q = solve_q(params.law, params.p)
    theta = theta_from_q(q)
    reports = []
    best = -np.inf
    for i, n in enumerate(ns):
        mean, ci = _mean_ci(float(totals[i]), float(totals[L + i]), trials,
                            ci_level)
        reports.append(EstimateReport(
            quantity="W_mean_per_site", estimate=mean / n, trials=trials,
            ci=(ci[0] / n, ci[1] / n), ci_level=ci_level, n_sites=n,
            params=run_params.with_(n=n), analytic=theta,
            extra={"W_mean": mean}))
        best = max(best, mean / n)
    i_best = int(np.argmax([r.estimate for r in reports]))
    rb = reports[i_best]
    sigma = (rb.ci[1] - rb.ci[0]) / 2.0 / norm.ppf(0.5 + ci_level / 2.0)
    theta_sup = max(0.0, best)
    flagged = sigma > 0 and abs(theta_sup - theta) > 5.0 * sigma
    sup_report = EstimateReport(
        quantity="theta_sup", estimate=theta_sup, trials=trials,
        ci=(max(0.0, rb.ci[0]), max(0.0, rb.ci[1])), ci_level=ci_level,
        n_sites=ns[i_best], params=run_params.with_(n=ns[i_best]),
        analytic=theta,
        extra={"flag_5sigma_vs_theta": bool(flagged), "argmax_n": ns[i_best]})
    return reports, sup_report


def estimate_arrival_symmetry(params: ExperimentParams, j: int, k: int,
                              trials: int, workers: Optional[int] = None,
                              ci_level: float = DEFAULT_CI_LEVEL):
    """Symmetry of ordered arrival distances at a central site.

    Two independent one-sided windows are resolved per trial; the starting
    distances of surviving left arrows from the right window play the roles
    of the rightward arrivals D_1 < D_2 < ... and symmetrically for the
    left window.  Estimates P(D_j from the right precedes D_{k+1-j} from
    the left) and the paired sum with the mirrored event; trials lacking
    the required number of arrivals on either side are excluded and
    counted.

    Returns (report_pj, report_paired_sum)."""
    if not 1 <= j <= k:
        raise ValueError("need 1 <= j <= k")
    if params.side != RIGHT_HALF_LINE:
        raise ValueError("windows are sampled as right half-lines")
    jc = k + 1 - j
    need = max(j, jc)

    def one(trial):
        c = np.zeros(4, np.int64)
        dists = []
        for w in (0, 1):
            rng = trial_rng(params.seed, trial, 10 + w)
            config = _sample_with_rng(params, rng)
            st = resolve_stats(config)
            mask = (st.alive != 0) & (config.velocities == LEFT)
            # exit order equals starting order: equal speeds
            d = config.positions[mask] - config.origin
            dists.append(d)
        right_d, left_d = dists
        if right_d.size < need or left_d.size < need:
            c[2] = 1  # excluded
            return c
        hit_a = right_d[j - 1] < left_d[jc - 1]
        hit_b = right_d[jc - 1] < left_d[j - 1]
        if hit_a:
            c[0] = 1
        if hit_b:
            c[1] = 1
        if hit_a and hit_b:
            c[3] = 1
        return c

    totals = _accumulate(one, trials, workers)
    used = trials - int(totals[2])
    if used == 0:
        raise RuntimeError("all trials excluded: not enough arrivals")
    a, b, both = int(totals[0]), int(totals[1]), int(totals[3])
    rep1 = EstimateReport(
        quantity="P(D_right_%d < D_left_%d)" % (j, jc), estimate=a / used,
        trials=used, ci=wilson_ci(a, used, ci_level), ci_level=ci_level,
        n_sites=params.n, params=params, analytic=0.5 if j == jc else None,
        extra={"excluded": int(totals[2]), "successes": a})
    # per-trial paired sum is 0, 1, or 2; its sum of squares is exact
    _, ci = _mean_ci(float(a + b), float(a + b + 2 * both), used, ci_level)
    rep2 = EstimateReport(
        quantity="paired_sum", estimate=(a + b) / used, trials=used,
        ci=ci, ci_level=ci_level, n_sites=params.n, params=params,
        analytic=1.0,
        extra={"excluded": int(totals[2]), "successes_mirror": b,
               "both": both})
    return rep1, rep2
