"""End-to-end acceptance checks.

Each test covers one numbered claim about the package as a whole and prints
a single summary line; the tests are ordered so that the structural
invariant tally (criterion 6) runs after the statistical criteria that feed
it. They are heavier than the unit tests (several minutes total).
"""

import time

import numpy as np
import pytest

from clusterba import checks
from clusterba.analytics import (F_of_v, pc, q_geometric_closed, r_formula,
                                 recursion_residual, rk_formula, s_formula,
                                 sk_formula, solve_q, theta_from_q)
from clusterba.configs import (TWO_SIDED, ExperimentParams, parse_spacing,
                               sample_config, sub_config)
from clusterba.estimators import (estimate_arrival_symmetry, estimate_q,
                                  estimate_sr, estimate_theta)
from clusterba.laws import CustomPmf, Delta, Geometric, PowerLaw, TwoPoint
from clusterba.resolver import W_statistic, resolve, resolve_naive

FIVE_FAMILIES = [Delta(1), Delta(3), Geometric(0.5), TwoPoint(5),
                 CustomPmf((0.3, 0.4, 0.3))]

SPACINGS = [parse_spacing("exp"), parse_spacing("uniform")]


def _report(name, detail):
    print("\n[acceptance] %s: PASS (%s)" % (name, detail))


def test_criterion_1_oracle_equivalence():
    t0 = time.process_time()
    rng = np.random.default_rng(1001)
    combos = [(law, spacing, p)
              for law in FIVE_FAMILIES
              for spacing in SPACINGS
              for p in (0.1, 0.25, 0.5, 0.9)]
    per_combo = 250
    total = 0
    for law, spacing, p in combos:
        for _ in range(per_combo):
            n = int(rng.integers(1, 201))
            params = ExperimentParams(p=p, law=law, n=n, seed=77,
                                      spacing=spacing)
            config = sample_config(params, int(rng.integers(2 ** 31)))
            assert resolve(config) == resolve_naive(config)
            total += 1
    elapsed = time.process_time() - t0
    assert total == 10 ** 4
    assert elapsed < 120.0
    _report("criterion 1 oracle equivalence",
            "%d configs exact, %.0fs" % (total, elapsed))


def test_criterion_2_closed_form_validation():
    # (a) single blockades reduce to an explicit inverse
    for p in np.linspace(0.25, 1.0, 50):
        assert abs(solve_q(Delta(1), float(p)) - (p ** -0.5 - 1.0)) < 1e-10
    # (b) geometric closed form
    npts = 0
    for beta in (0.2, 0.5, 0.8):
        law = Geometric(beta)
        for p in np.linspace(pc(law), 1.0, 21):
            assert abs(solve_q(law, float(p))
                       - q_geometric_closed(beta, float(p))) < 1e-10
            npts += 1
    # (c) the fixed-point map limits to the critical density
    for law in FIVE_FAMILIES:
        f = F_of_v(law, 1.0 - 1e-4)
        assert abs(f - pc(law)) <= 1e-3 * pc(law)
    _report("criterion 2 closed-form validation",
            "50 + %d + 5 checkpoints" % npts)


def test_criterion_3_pc_reproduction():
    # budgets are asserted on CPU time so a loaded box does not flake them
    t0 = time.process_time()
    n_total = 10 ** 5  # two-sided window, half on each side of the center
    trials = 5000
    cases = [
        (Delta(1), 0.20, "below"),
        (Delta(1), 0.30, "above"),
        (Geometric(0.5), 0.05, "below"),
        (Geometric(0.5), 0.15, "above"),
    ]
    lines = []
    for law, p, regime in cases:
        params = ExperimentParams(p=p, law=law, n=n_total, seed=3003,
                                  side=TWO_SIDED)
        rep = estimate_theta(params, trials=trials)
        theta = theta_from_q(solve_q(law, p))
        if regime == "below":
            assert rep.estimate < 0.01
        else:
            assert rep.ci[0] <= theta <= rep.ci[1]
        lines.append("%s p=%.2f theta_hat=%.4f" % (law.spec, p, rep.estimate))
    elapsed = time.process_time() - t0
    assert elapsed < 600.0
    _report("criterion 3 pc reproduction",
            "; ".join(lines) + "; %.0fs" % elapsed)


def test_criterion_4_recursion_closure():
    # analytic: the solved root satisfies the one-step recursion
    for law in FIVE_FAMILIES:
        for p in np.linspace(pc(law) + 1e-6, 1.0 - 1e-9, 20):
            q = solve_q(law, float(p))
            assert abs(recursion_residual(law, float(p), q)) < 1e-9

    # Monte Carlo: independently estimated pieces close the same identity
    law = Geometric(0.5)
    trials = 10 ** 4
    n = 5 * 10 ** 4
    for p in (0.2, 0.5, 0.8):
        base = ExperimentParams(p=p, law=law, n=n, seed=4101)
        q_hat = estimate_q(base, [n], trials=trials)[-1].estimate
        sr = estimate_sr(base.with_(seed=4202), trials=trials, k_max=1)
        s_hat = sr.s_total.estimate
        r_hat = sr.r_total.estimate
        e_hat = sr.arrow_arrow.estimate

        f = law.pgf(q_hat)
        fd = law.pgf_d1(q_hat)
        var_q = q_hat * (1.0 - q_hat) / trials
        var_s = s_hat * (1.0 - s_hat) / trials
        var_r = r_hat * (1.0 - r_hat) / trials
        var_e = e_hat * (1.0 - e_hat) / trials
        cov_sr = -s_hat * r_hat / trials
        cov_se = -s_hat * e_hat / trials

        # form A: recursion written with the not-visited remainder r
        res_a = (0.5 * (1.0 - p) + p * q_hat * f + s_hat
                 + q_hat * (0.5 * (1.0 - p) - s_hat - r_hat) - q_hat)
        dq = (p * (f + q_hat * fd) + 0.5 * (1.0 - p)
              - s_hat - r_hat - 1.0)
        ds = 1.0 - q_hat
        dr = -q_hat
        sig_a = np.sqrt(dq * dq * var_q + ds * ds * var_s + dr * dr * var_r
                        + 2.0 * ds * dr * cov_sr)
        assert abs(res_a) < 3.0 * sig_a

        # form B: the same identity with the arrow-arrow term measured
        res_b = (0.5 * (1.0 - p) + p * q_hat * f + s_hat
                 + q_hat * e_hat - q_hat)
        dq_b = p * (f + q_hat * fd) + e_hat - 1.0
        de = q_hat
        sig_b = np.sqrt(dq_b * dq_b * var_q + var_s + de * de * var_e
                        + 2.0 * de * cov_se)
        assert abs(res_b) < 3.0 * sig_b
    _report("criterion 4 recursion closure",
            "analytic residuals < 1e-9; MC closure within 3 sigma at "
            "p=0.2,0.5,0.8")


def test_criterion_5_collision_type_formulas():
    t0 = time.process_time()
    trials = 10 ** 5
    n = 2000
    k_max = 4
    lines = []
    for law in (Geometric(0.5), TwoPoint(5)):
        for p in (0.3, 0.6):
            params = ExperimentParams(p=p, law=law, n=n, seed=5005)
            sr = estimate_sr(params, trials=trials, k_max=k_max)
            q = solve_q(law, p)
            for k in range(1, k_max + 1):
                for rep, formula in ((sr.s_k[k - 1], sk_formula),
                                     (sr.r_k[k - 1], rk_formula)):
                    val = formula(law, p, q, k)
                    sigma = np.sqrt(max(val * (1.0 - val), 1e-12) / trials)
                    assert abs(rep.estimate - val) < 3.0 * sigma
            for rep, formula in ((sr.s_total, s_formula),
                                 (sr.r_total, r_formula)):
                val = formula(law, p, q)
                sigma = np.sqrt(max(val * (1.0 - val), 1e-12) / trials)
                assert abs(rep.estimate - val) < 3.0 * sigma
            lines.append("%s p=%.1f" % (law.spec, p))
    elapsed = time.process_time() - t0
    assert elapsed < 900.0
    _report("criterion 5 collision-type formulas",
            "k<=%d at %s; %.0fs" % (k_max, ", ".join(lines), elapsed))


def test_criterion_6_structural_invariants():
    # survivor ordering, conservation, and per-path window monotonicity are
    # asserted inline on every resolved configuration; the tally must show
    # a large sample with zero violations at this point in the run
    snap = checks.counters
    assert snap.violations == 0
    assert snap.outcomes > 10 ** 5

    # superadditivity of the skew statistic over every cut point
    rng = np.random.default_rng(6006)
    cuts = 0
    for _ in range(1000):
        params = ExperimentParams(p=float(rng.uniform(0.05, 0.95)),
                                  law=Geometric(0.5),
                                  n=int(rng.integers(2, 101)), seed=66)
        config = sample_config(params, int(rng.integers(2 ** 31)))
        full = W_statistic(config, 1, config.n)
        for cut in range(1, config.n):
            assert full >= (W_statistic(config, 1, cut)
                            + W_statistic(config, cut + 1, config.n))
            cuts += 1
    _report("criterion 6 structural invariants",
            "%d outcomes, 0 violations; %d cuts superadditive"
            % (snap.outcomes, cuts))


def test_criterion_7_arrival_symmetry():
    trials = 10 ** 5
    params = ExperimentParams(p=0.3, law=Delta(1), n=600, seed=7007)
    lines = []
    for j, k in ((1, 1), (1, 2), (2, 3)):
        r1, r2 = estimate_arrival_symmetry(params, j, k, trials=trials)
        if j == k + 1 - j:
            assert r1.ci[0] <= 0.5 <= r1.ci[1]
        assert r2.ci[0] <= 1.0 <= r2.ci[1]
        lines.append("(%d,%d) fair=%.3f sum=%.3f" %
                     (j, k, r1.estimate, r2.estimate))
    _report("criterion 7 arrival symmetry", "; ".join(lines))


def test_criterion_8_universality():
    trials = 3000
    n = 2000
    worst = 0.0
    for law in (Delta(1), Geometric(0.5)):
        for p in np.linspace(0.05, 0.95, 10):
            reps = {}
            for spacing in SPACINGS:
                params = ExperimentParams(p=float(p), law=law, n=n,
                                          seed=8008, spacing=spacing)
                reps[spacing] = estimate_q(params, [n], trials=trials)[-1]
            a, b = reps.values()
            hw = (0.5 * (a.ci[1] - a.ci[0]) + 0.5 * (b.ci[1] - b.ci[0]))
            diff = abs(a.estimate - b.estimate)
            assert diff < hw
            worst = max(worst, diff / hw if hw else 0.0)
    _report("criterion 8 universality",
            "20 points, worst |diff|/halfwidths = %.2f" % worst)


def test_criterion_9_infinite_variance_trend():
    # the exact infinite-variance statement is approached through truncated
    # tails; window sizes shrink with the cutoff so each window holds a
    # comparable number of near-critical correlation lengths
    onsets = []
    lines = []
    for cutoff, n in ((10, 350), (100, 250), (1000, 150)):
        law = PowerLaw(2.5, cutoff)
        crit = pc(law)
        grid = np.geomspace(crit / 2, 4.0 * crit, 9)
        onset = None
        for p in grid:
            params = ExperimentParams(p=float(p), law=law, n=n, seed=909,
                                      side=TWO_SIDED)
            rep = estimate_theta(params, trials=8000)
            if rep.estimate > 0.01:
                onset = float(p)
                break
        assert onset is not None
        assert 0.5 * crit <= onset <= 2.0 * crit
        onsets.append(onset)
        lines.append("cutoff=%d onset=%.4f (%.2f pc)"
                     % (cutoff, onset, onset / crit))
    assert onsets[0] > onsets[1] > onsets[2]
    _report("criterion 9 infinite-variance trend", "; ".join(lines))
