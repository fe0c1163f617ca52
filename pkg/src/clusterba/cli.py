"""Command-line front end: closed-form solving, Monte Carlo estimation,
fixture resolution, parameter sweeps, and the self-check suite.

Every output file embeds its run manifest (subcommand, parameters, seed,
version, timestamps): as a "manifest" field in JSON, a leading `# manifest:`
comment in CSV, and an XML comment in SVG.
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import List, Optional

import numpy as np

from . import __version__, checks
from .analytics import pc, q_geometric_closed, recursion_residual, \
    r_formula, s_formula, solve_q, tabulate_curve, theta_from_q, F_of_v
from .configs import (RIGHT_HALF_LINE, TWO_SIDED, ConfigError,
                      ExperimentParams, from_text, parse_spacing,
                      sample_config)
from .diagram import render_svg
from .estimators import (default_workers, estimate_arrival_symmetry,
                         estimate_q, estimate_sr, estimate_theta,
                         estimate_W_curve)
from .laws import (CustomPmf, Delta, Geometric, LawError, TwoPoint,
                   parse_law)
from .resolver import (ARROW_ARROW, TieError, W_statistic, resolve,
                       resolve_naive)

USAGE_ERROR = 2
CHECK_FAILURE = 1


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    seed: Optional[int]
    version: str = __version__
    started: str = ""
    finished: str = ""
    outputs: List[str] = field(default_factory=list)

    def start(self):
        self.started = datetime.now(timezone.utc).isoformat()
        return self

    def finish(self):
        self.finished = datetime.now(timezone.utc).isoformat()
        return self

    def json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _fmt(x):
    return "%.17g" % float(x)


def _write(path, content):
    if path in (None, "-"):
        sys.stdout.write(content)
    else:
        with open(path, "w") as fh:
            fh.write(content)


def _parse_p_grid(text):
    """A p value, comma list, or a:b:step grid (b inclusive up to rounding)."""
    if ":" in text:
        a, b, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        grid = np.arange(a, b + step * 1e-9, step)
        return [float(p) for p in grid]
    return [float(t) for t in text.split(",")]


def _report_dict(rep):
    params = rep.params
    return {
        "quantity": rep.quantity,
        "estimate": rep.estimate,
        "trials": rep.trials,
        "ci": [rep.ci[0], rep.ci[1]],
        "ci_level": rep.ci_level,
        "n_sites": rep.n_sites,
        "analytic": rep.analytic,
        "extra": rep.extra,
        "params": {"p": params.p, "law": params.law.spec,
                   "spacing": params.spacing.spec, "n": params.n,
                   "seed": params.seed, "side": params.side},
    }


def cmd_solve(args):
    law = parse_law(args.law)
    grid = _parse_p_grid(args.p)
    curve = tabulate_curve(law, grid)
    manifest = RunManifest("solve", {"law": args.law, "p": args.p,
                                     "format": args.format}, None).start()
    manifest.finish()
    if args.format == "csv":
        lines = ["# manifest: %s" % manifest.json(), "p,q,theta,pc"]
        for p, q, th in curve.points:
            lines.append(",".join(_fmt(v) for v in (p, q, th, curve.pc)))
        _write(args.out, "\n".join(lines) + "\n")
    else:
        doc = {"manifest": asdict(manifest), "pc": curve.pc,
               "points": [{"p": p, "q": q, "theta": th}
                          for p, q, th in curve.points]}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_estimate(args):
    law = parse_law(args.law)
    spacing = parse_spacing(args.spacing)
    side = TWO_SIDED if args.quantity == "theta" else RIGHT_HALF_LINE
    params = ExperimentParams(p=float(args.p), law=law, spacing=spacing,
                              n=args.n, seed=args.seed, side=side)
    workers = args.workers if args.workers else None
    manifest = RunManifest("estimate", {
        "law": args.law, "p": args.p, "n": args.n, "trials": args.trials,
        "quantity": args.quantity, "spacing": args.spacing,
        "k_max": args.k_max, "j": args.j, "k": args.k,
    }, args.seed).start()

    if args.quantity == "q":
        reports = estimate_q(params, [max(1, args.n // 2), args.n],
                             args.trials, workers)
    elif args.quantity == "theta":
        reports = [estimate_theta(params, args.trials, workers)]
    elif args.quantity == "sr":
        sr = estimate_sr(params, args.trials, args.k_max, workers)
        reports = sr.s_k + sr.r_k + [sr.s_total, sr.r_total,
                                     sr.arrow_arrow, sr.visited]
    elif args.quantity == "wcurve":
        ns = sorted({max(1, args.n // 4), max(1, args.n // 2), args.n})
        curve, sup = estimate_W_curve(params, ns, args.trials, workers)
        reports = curve + [sup]
    elif args.quantity == "symmetry":
        r1, r2 = estimate_arrival_symmetry(params, args.j, args.k,
                                           args.trials, workers)
        reports = [r1, r2]
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.quantity)

    manifest.finish()
    doc = {"manifest": asdict(manifest),
           "reports": [_report_dict(r) for r in reports]}
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def _collision_csv(outcome, manifest):
    lines = ["# manifest: %s" % manifest.json(),
             "time,position,kind,left_site,right_site,remaining"]
    for rec in outcome.collisions:
        left, right = sorted((rec.site_a, rec.site_b))
        rem = "" if rec.remaining is None else str(rec.remaining)
        lines.append("%s,%s,%s,%d,%d,%s" % (_fmt(rec.time), _fmt(rec.position),
                                            rec.kind, left, right, rem))
    return "\n".join(lines) + "\n"


def _survivor_csv(outcome, manifest):
    lines = ["# manifest: %s" % manifest.json(), "site,species,remaining"]
    for s in outcome.survivors:
        lines.append("%d,%s,%d" % (s.site, s.species, s.remaining))
    return "\n".join(lines) + "\n"


def cmd_resolve(args):
    with open(args.fixture) as fh:
        text = fh.read()
    config = from_text(text)
    manifest = RunManifest("resolve", {"fixture": args.fixture,
                                       "naive": args.naive}, None).start()
    outcome = resolve_naive(config) if args.naive else resolve(config)
    manifest.finish()
    for path in (args.collisions, args.survivors, args.svg):
        if path not in (None, "-"):
            manifest.outputs.append(path)
    _write(args.collisions, _collision_csv(outcome, manifest))
    if args.survivors is not None:
        _write(args.survivors, _survivor_csv(outcome, manifest))
    if args.svg is not None:
        svg = render_svg(config, outcome, comment="manifest: %s"
                         % manifest.json())
        _write(args.svg, svg + "\n")
    return 0


def cmd_sweep(args):
    law = parse_law(args.law)
    spacing = parse_spacing(args.spacing)
    grid = _parse_p_grid(args.p)
    workers = args.workers if args.workers else None
    manifest = RunManifest("sweep", {
        "law": args.law, "p": args.p, "n": args.n, "trials": args.trials,
        "spacing": args.spacing}, args.seed).start()
    rows = []
    for p in grid:
        qp = ExperimentParams(p=p, law=law, spacing=spacing, n=args.n,
                              seed=args.seed)
        qrep = estimate_q(qp, [args.n], args.trials, workers)[-1]
        tp = qp.with_(side=TWO_SIDED)
        trep = estimate_theta(tp, args.trials, workers)
        rows.append((p, args.n, args.trials, qrep.estimate, qrep.ci[0],
                     qrep.ci[1], qrep.analytic, trep.estimate, trep.analytic))
    manifest.finish()
    lines = ["# manifest: %s" % manifest.json(),
             "p,n,trials,q_hat,ci_lo,ci_hi,q_analytic,theta_hat,"
             "theta_analytic"]
    for row in rows:
        lines.append(",".join(
            str(v) if isinstance(v, int) else _fmt(v) for v in row))
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _check_oracle(seed):
    laws = [Delta(1), Delta(3), Geometric(0.5), TwoPoint(5),
            CustomPmf((0.3, 0.4, 0.3))]
    spacings = [parse_spacing("exp"), parse_spacing("uniform")]
    rng = np.random.default_rng(seed)
    for law in laws:
        for spacing in spacings:
            for p in (0.1, 0.25, 0.5, 0.9):
                n = int(rng.integers(1, 120))
                params = ExperimentParams(p=p, law=law, spacing=spacing,
                                          n=n, seed=seed)
                config = sample_config(params, int(rng.integers(1 << 30)))
                if resolve(config) != resolve_naive(config):
                    return False
    return True


def _check_closed_forms():
    for p in np.linspace(0.25, 1.0, 50):
        if abs(solve_q(Delta(1), float(p)) - (p ** -0.5 - 1.0)) > 1e-10:
            return False
    for beta in (0.2, 0.5, 0.8):
        law = Geometric(beta)
        for p in np.linspace(pc(law), 1.0, 21):
            if abs(solve_q(law, float(p))
                   - q_geometric_closed(beta, float(p))) > 1e-10:
                return False
    for law in (Delta(1), Delta(3), Geometric(0.5), TwoPoint(5),
                CustomPmf((0.3, 0.4, 0.3))):
        f = F_of_v(law, 1.0 - 1e-4)
        if abs(f - pc(law)) > 1e-3 * pc(law):
            return False
    return True


def _check_closure():
    for law in (Delta(1), Delta(3), Geometric(0.5), TwoPoint(5),
                CustomPmf((0.3, 0.4, 0.3))):
        crit = pc(law)
        for p in np.linspace(crit + 1e-6, 1.0 - 1e-9, 20):
            q = solve_q(law, float(p))
            if abs(recursion_residual(law, float(p), q)) > 1e-9:
                return False
            slack = 0.5 * (1.0 - p) - s_formula(law, p, q) \
                - r_formula(law, p, q)
            if slack < -1e-9:
                return False
    return True


def _check_superadditivity(seed):
    rng = np.random.default_rng(seed + 1)
    for law in (Delta(1), Geometric(0.5)):
        for p in (0.2, 0.6):
            for _ in range(25):
                params = ExperimentParams(p=p, law=law,
                                          n=int(rng.integers(2, 60)),
                                          seed=seed)
                config = sample_config(params, int(rng.integers(1 << 30)))
                full = W_statistic(config, 1, config.n)
                for cut in range(1, config.n):
                    if full < (W_statistic(config, 1, cut)
                               + W_statistic(config, cut + 1, config.n)):
                        return False
    return True


def _check_symmetry(seed):
    params = ExperimentParams(p=0.3, law=Delta(1), n=300, seed=seed)
    r1, r2 = estimate_arrival_symmetry(params, 1, 1, trials=2000)
    sigma1 = (r1.ci[1] - r1.ci[0]) / 2 / 1.96
    sigma2 = (r2.ci[1] - r2.ci[0]) / 2 / 1.96
    return (abs(r1.estimate - 0.5) < 5 * sigma1
            and abs(r2.estimate - 1.0) < 5 * sigma2)


def cmd_check(args):
    suites = [
        ("oracle-equivalence", lambda: _check_oracle(args.seed)),
        ("closed-form-validation", _check_closed_forms),
        ("recursion-closure", _check_closure),
        ("superadditivity", lambda: _check_superadditivity(args.seed)),
        ("arrival-symmetry", lambda: _check_symmetry(args.seed)),
    ]
    failed = 0
    for name, fn in suites:
        ok = fn()
        print("%-20s %s" % (name, "PASS" if ok else "FAIL"))
        if not ok:
            failed += 1
    print("invariant checks: %d outcomes, %d violations"
          % (checks.counters.outcomes, checks.counters.violations))
    if checks.counters.violations:
        failed += 1
    return CHECK_FAILURE if failed else 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="clusterba",
        description="Clustered three-velocity ballistic annihilation: "
                    "exact resolver, closed forms, Monte Carlo harness.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("solve", help="tabulate the analytic curve q(p)")
    sp.add_argument("--law", required=True)
    sp.add_argument("--p", required=True,
                    help="value, comma list, or a:b:step grid")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", default="-")
    sp.set_defaults(fn=cmd_solve)

    ep = sub.add_parser("estimate", help="Monte Carlo estimation")
    ep.add_argument("--law", required=True)
    ep.add_argument("--p", required=True)
    ep.add_argument("--n", type=int, default=10000)
    ep.add_argument("--trials", type=int, default=1000)
    ep.add_argument("--seed", type=int, default=0)
    ep.add_argument("--quantity", required=True,
                    choices=("q", "theta", "sr", "wcurve", "symmetry"))
    ep.add_argument("--spacing", default="exp")
    ep.add_argument("--k-max", type=int, default=4, dest="k_max")
    ep.add_argument("--j", type=int, default=1)
    ep.add_argument("--k", type=int, default=1)
    ep.add_argument("--workers", type=int, default=0,
                    help="0 = use CLUSTERBA_WORKERS or 1")
    ep.add_argument("--out", default="-")
    ep.set_defaults(fn=cmd_estimate)

    rp = sub.add_parser("resolve", help="resolve a fixture file")
    rp.add_argument("fixture")
    rp.add_argument("--naive", action="store_true")
    rp.add_argument("--collisions", default="-",
                    help="collision log CSV path (default stdout)")
    rp.add_argument("--survivors", default=None)
    rp.add_argument("--svg", default=None)
    rp.set_defaults(fn=cmd_resolve)

    wp = sub.add_parser("sweep", help="p-grid sweep to CSV")
    wp.add_argument("--law", required=True)
    wp.add_argument("--p", required=True)
    wp.add_argument("--n", type=int, default=20000)
    wp.add_argument("--trials", type=int, default=2000)
    wp.add_argument("--seed", type=int, default=0)
    wp.add_argument("--spacing", default="exp")
    wp.add_argument("--workers", type=int, default=0)
    wp.add_argument("--out", default="-")
    wp.set_defaults(fn=cmd_sweep)

    cp = sub.add_parser("check", help="run the validation suites")
    cp.add_argument("--seed", type=int, default=0)
    cp.set_defaults(fn=cmd_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (LawError, ConfigError, TieError, FileNotFoundError,
            ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
