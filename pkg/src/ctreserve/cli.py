"""Command-line entry point: ``ctreserve {reserve,bootstrap,compare}``.

Exit codes: 0 on success, 2 on input or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from ctreserve import __version__
from ctreserve.analytics import DEFAULT_PROBS, comparison_table, histogram, parametric_quantile, summarize
from ctreserve.bootstrap import BootstrapConfig, ConfigError, fit_parametric, run_bootstrap
from ctreserve.chain_ladder import estimate, mack_msep, ultimates_and_reserve
from ctreserve.ct_model import log_prob_zero_exponent, prob_zero, to_ct
from ctreserve.triangle import Triangle, TriangleError, builtin_dataset, parse_triangle

METHOD_FLAGS = {"ct": "ct", "mack": "mack_residual", "ts": "time_series"}
NEG_FLAGS = {"zero": "clamp_zero", "drop": "drop_replicate"}
SCHEMA_PATH = Path(__file__).with_name("report_schema.json")


class UsageError(Exception):
    pass


def load_triangle(args) -> tuple[Triangle, str]:
    if args.dataset and args.file:
        raise UsageError("give either --dataset or --file, not both")
    if args.file:
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
        return parse_triangle(text, label=Path(args.file).stem), str(args.file)
    name = args.dataset or "taylor_ashe"
    try:
        return builtin_dataset(name), name
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def estimates_block(t: Triangle) -> dict:
    p = estimate(t)
    rs = ultimates_and_reserve(t, p.F)
    ms = mack_msep(t, p)
    return {
        "n": t.n,
        "F": p.F.tolist(),
        "Sigma2": p.Sigma2.tolist(),
        "latest_diagonal": t.latest_diagonal().tolist(),
        "ultimates": rs.ultimates.tolist(),
        "reserves": rs.reserves.tolist(),
        "R_hat": rs.total,
        "mack_se_per_year": np.sqrt(ms.per_year).tolist(),
        "mack_msep": ms.total,
        "mack_se": ms.se,
        "mack_msep_pct": round(100.0 * ms.se / rs.total, 4) if rs.total > 0 else 0.0,
    }


def zero_mass_diagnostics(t: Triangle) -> dict:
    """P(C = 0) one year ahead for every first-column cell and every diagonal cell."""
    c = to_ct(estimate(t))
    n = t.n

    def entry(i, j, C_j):
        f, s2 = float(c.f[j - 1]), float(c.sigma2[j - 1])
        # a zero variance makes the step deterministic: no mass at 0, exponent undefined
        expo = -log_prob_zero_exponent(C_j, f, s2) if s2 > 0 else None
        return {"i": i, "j": j, "C": C_j, "exponent": expo, "probability": prob_zero(C_j, f, s2)}

    first = [entry(i, 1, t[i, 1]) for i in range(1, n + 1)]
    diag = [entry(i, n - i + 1, t[i, n - i + 1]) for i in range(2, n + 1)]
    worst = max(diag, key=lambda d: d["probability"])
    return {"first_column": first, "diagonal": diag, "max_diagonal": worst}


def manifest(command: str, source: str, cfg: BootstrapConfig | None, started: float) -> dict:
    return {
        "command": command,
        "source": source,
        "config": cfg.to_dict() if cfg else None,
        "seed": cfg.seed if cfg else None,
        "version": __version__,
        "duration_s": round(time.perf_counter() - started, 3),
    }


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", "method", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, report: dict, text: str, csv_rows) -> None:
    if args.format == "json":
        out = json.dumps(report, indent=2)
    elif args.format == "csv":
        out = _csv(csv_rows)
    else:
        out = text
    print(out)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        (d / "report.csv").write_text(_csv(csv_rows))
        (d / "manifest.json").write_text(json.dumps(report["manifest"], indent=2) + "\n")
        hist = report.get("histogram")
        if hist:
            with open(d / "histogram.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["left", "right", "count"])
                for k, cnt in enumerate(hist["counts"]):
                    w.writerow([hist["edges"][k], hist["edges"][k + 1], cnt])


def cmd_reserve(args) -> int:
    started = time.perf_counter()
    t, source = load_triangle(args)
    est = estimates_block(t)
    report = {
        "manifest": manifest("reserve", source, None, started),
        "estimates": est,
        "summary": None,
        "histogram": None,
        "diagnostics": {"zero_mass": zero_mass_diagnostics(t)},
    }
    lines = [f"triangle {t.label or source}: n = {t.n}", "", f"{'j':>3} {'F_j':>12} {'Sigma2_j':>16}"]
    for j, (F, S) in enumerate(zip(est["F"], est["Sigma2"]), start=1):
        lines.append(f"{j:>3} {F:12.6f} {S:16.4f}")
    lines += ["", f"{'i':>3} {'latest':>14} {'ultimate':>16} {'reserve':>16} {'mack se':>14}"]
    for i in range(t.n):
        lines.append(
            f"{i + 1:>3} {est['latest_diagonal'][i]:14.0f} {est['ultimates'][i]:16.0f} "
            f"{est['reserves'][i]:16.0f} {est['mack_se_per_year'][i]:14.0f}"
        )
    lines += [
        "",
        f"R_hat          {est['R_hat']:,.0f}",
        f"Mack se        {est['mack_se']:,.0f}",
        f"sqrt(MSEP)/R   {est['mack_msep_pct']:.4f} %",
    ]
    rows = [["R_hat", "chain_ladder", est["R_hat"]], ["msep_pct", "mack", est["mack_msep_pct"]]]
    rows += [[f"F_{j}", "chain_ladder", v] for j, v in enumerate(est["F"], start=1)]
    rows += [[f"Sigma2_{j}", "chain_ladder", v] for j, v in enumerate(est["Sigma2"], start=1)]
    _emit(args, report, "\n".join(lines), rows)
    return 0


def _config(args, method: str) -> BootstrapConfig:
    return BootstrapConfig(
        method=method,
        M=args.sims,
        seed=args.seed,
        neg_policy=NEG_FLAGS[args.neg_policy],
        ts_param_mode=args.ts_mode,
        threads=args.threads,
    )


def cmd_bootstrap(args) -> int:
    started = time.perf_counter()
    t, source = load_triangle(args)
    cfg = _config(args, METHOD_FLAGS[args.method])
    res = run_bootstrap(t, cfg)
    if res.samples.size == 0:
        raise ConfigError("every replicate was dropped")
    summ = summarize(res.samples, res.R_hat, probs=args.probs, bins=None)
    hist = histogram(res.samples, args.bins)
    report = {
        "manifest": manifest("bootstrap", source, cfg, started),
        "estimates": estimates_block(t),
        "summary": summ.to_dict(),
        "histogram": hist.to_dict(),
        "diagnostics": {
            "dropped": res.dropped,
            "zero_clamped": res.zero_clamped,
            "negative_replicates": res.negative_replicates,
            "negative_rate": res.negative_rate,
        },
    }
    if args.emit_samples:
        if not args.out:
            raise UsageError("--emit-samples needs --out")
        Path(args.out).mkdir(parents=True, exist_ok=True)
        np.save(Path(args.out) / "samples.npy", res.samples)
    lines = [
        f"{cfg.method} bootstrap on {t.label or source}: M = {cfg.M}, seed = {cfg.seed}",
        f"R_hat              {res.R_hat:,.0f}",
        f"mean               {summ.mean:,.0f}",
        f"sd / R_hat         {summ.msep_pct:.4f} %",
        f"Q(99.5%) - R_hat   {summ.q995_excess_pct:.4f} %",
    ]
    lines += [f"Q({p:g})  {q:,.0f}" for p, q in summ.quantiles.items()]
    lines.append(f"negative replicates {res.negative_replicates}, dropped {res.dropped}, clamped cells {res.zero_clamped}")
    rows = [["msep_pct", cfg.method, round(summ.msep_pct, 4)], ["q995_excess_pct", cfg.method, round(summ.q995_excess_pct, 4)]]
    rows += [[f"quantile_{p:g}", cfg.method, q] for p, q in summ.quantiles.items()]
    _emit(args, report, "\n".join(lines), rows)
    return 0


def cmd_compare(args) -> int:
    started = time.perf_counter()
    t, source = load_triangle(args)
    rows, results = comparison_table(
        t,
        M=args.sims,
        seed=args.seed,
        neg_policy=NEG_FLAGS[args.neg_policy],
        threads=args.threads,
        ts_param_mode=args.ts_mode,
    )
    gamma = fit_parametric(t, "gamma")
    R_hat = gamma.mu_R
    gamma_excess = 100.0 * (parametric_quantile(gamma, 0.995) - R_hat) / R_hat if R_hat > 0 else 0.0
    diagnostics = {
        "zero_mass": zero_mass_diagnostics(t),
        "gamma_q995_excess_pct": round(gamma_excess, 4),
        "negative_rate": {m: (r.negative_rate if r is not None else 0.0) for m, r in results.items()},
    }
    report = {
        "manifest": manifest("compare", source, _config(args, "ct"), started),
        "estimates": estimates_block(t),
        "summary": {"table": [{**r, "msep_pct": round(r["msep_pct"], 4), "q995_excess_pct": round(r["q995_excess_pct"], 4)} for r in rows]},
        "histogram": None,
        "diagnostics": diagnostics,
    }
    worst = diagnostics["zero_mass"]["max_diagonal"]
    lines = [f"{'Method':<28} {'sqrt(MSEP) %':>14} {'Q99.5 - R %':>14}"]
    lines += [f"{r['method']:<28} {r['msep_pct']:14.4f} {r['q995_excess_pct']:14.4f}" for r in rows]
    lines += [
        "",
        f"Gamma moment fit: Q99.5 - R = {gamma_excess:.4f} %",
        f"max P(C = 0) one year ahead: i={worst['i']}, j={worst['j']}: {worst['probability']:.4e} (exponent {worst['exponent']})",
    ]
    lines += [f"negative-cell replicates ({m}): {100 * v:.2f} %" for m, v in diagnostics["negative_rate"].items() if m != "ct"]
    csv_rows = []
    for r in rows:
        csv_rows.append(["msep_pct", r["method"], round(r["msep_pct"], 4)])
        csv_rows.append(["q995_excess_pct", r["method"], round(r["q995_excess_pct"], 4)])
    csv_rows.append(["q995_excess_pct", "Mack Gamma", round(gamma_excess, 4)])
    _emit(args, report, "\n".join(lines), csv_rows)
    return 0


def _probs(text: str) -> list[float]:
    try:
        ps = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of probabilities: {text!r}") from None
    if not ps or any(not 0 < p < 1 for p in ps):
        raise argparse.ArgumentTypeError("probabilities must lie in (0, 1)")
    return ps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctreserve", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dataset", choices=["taylor_ashe", "mortgage"], help="built-in triangle")
        p.add_argument("--file", help="triangle CSV (header dev,1,...,n)")
        p.add_argument("--format", choices=["text", "json", "csv"], default="text")
        p.add_argument("--out", help="directory for report.json, report.csv, manifest.json")

    def sim(p):
        p.add_argument("--sims", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--neg-policy", choices=list(NEG_FLAGS), default="zero")
        p.add_argument("--ts-mode", choices=["direct", "resample"], default="direct")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("reserve", help="chain-ladder estimates and Mack MSEP")
    common(p)
    p.set_defaults(func=cmd_reserve)

    p = sub.add_parser("bootstrap", help="simulate the reserve distribution")
    common(p)
    sim(p)
    p.add_argument("--method", choices=list(METHOD_FLAGS), default="ct")
    p.add_argument("--probs", type=_probs, default=list(DEFAULT_PROBS))
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--emit-samples", action="store_true", help="write samples.npy to --out")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("compare", help="four-method comparison table")
    common(p)
    sim(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TriangleError, ConfigError, UsageError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
