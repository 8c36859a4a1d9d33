"""Command-line front end: ``fkqe check|run|describe <config.json>``.

Exit codes: 0 success, 2 config error, 3 validation error, 4 numeric failure.

CSV schemas written by ``run`` (one file per experiment, named by kind and
a short hash of the experiment's parameters, so file names and contents do
not depend on experiment order):

* ``spectral_*.csv``: ``quantity, i, j, value`` with quantities
  ``lambda0, gap, spectrum, phi0, nu, eta, Jphi``.
* ``qlimits_*.csv`` / ``second_moments_*.csv``:
  ``t, state, mean, second, limit_mean, abs_error`` plus an SVG of the
  worst-state ``abs_error`` against ``t``.
* ``ldp_curve_*.csv``: ``theta, C, Cprime, psi``; ``ldp_rate_*.csv``:
  ``gamma, theta_gamma, rate_legendre, rate_bilinear, agreement, error``.
* ``mc_*.csv`` / ``tail_*.csv``:
  ``quantity, t, gamma, theta_tilt, value, stderr, ess, n_paths, seed``.

``manifest.json`` lists every artifact with its sha256, the config hash
and the seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import ldp, montecarlo, semigroup
from ._accel import set_threads
from .config import ConfigError, ExperimentConfig, load_config
from .model import ValidationError, tilted_generator, validate
from .spectral import SpectralError, ground_state, qe_quantities

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

MOMENT_HEADER = ["t", "state", "mean", "second", "limit_mean", "abs_error"]
ESTIMATE_HEADER = ["quantity", "t", "gamma", "theta_tilt", "value", "stderr", "ess", "n_paths", "seed"]


def fmt(v) -> str:
    """Shortest round-trip decimal for floats; integers and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return "" if v is None else str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def svg_polyline(xs, ys, title, xlabel="t", ylabel="log10 abs_error", width=480, height=320) -> str:
    """Bare line plot; nonpositive ys are dropped before taking log10."""
    pts = [(float(x), math.log10(y)) for x, y in zip(xs, ys) if y > 0]
    pad = 50
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad / 2}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad / 2}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="11">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.1f}" font-size="11" transform="rotate(-90 14 {height / 2:.1f})"'
        f' text-anchor="middle">{ylabel}</text>',
    ]
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(x):
            return pad + (x - x0) / (x1 - x0) * (width - 1.5 * pad)

        def sy(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 1.5 * pad)

        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{coords}"/>')
        for x, y in pts:
            lines.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>')
        lines.append(f'<text x="{pad - 4}" y="{sy(y1):.2f}" text-anchor="end" font-size="10">{y1:.3g}</text>')
        lines.append(f'<text x="{pad - 4}" y="{sy(y0):.2f}" text-anchor="end" font-size="10">{y0:.3g}</text>')
        lines.append(f'<text x="{sx(x0):.2f}" y="{height - pad + 14}" text-anchor="middle" font-size="10">{x0:g}</text>')
        lines.append(f'<text x="{sx(x1):.2f}" y="{height - pad + 14}" text-anchor="middle" font-size="10">{x1:g}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def experiment_tag(exp: dict) -> str:
    blob = json.dumps(exp, sort_keys=True, separators=(",", ":")).encode()
    return f"{exp['kind']}_{hashlib.sha256(blob).hexdigest()[:8]}"


def config_hash(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    d.pop("output_dir", None)
    return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# ---------------------------------------------------------------- experiments

def spectral_rows(chain, weight):
    sd = ground_state(chain, weight)
    qe = qe_quantities(chain, weight, sd)
    rows = [("lambda0", "", "", sd.lambda0), ("gap", "", "", sd.gap)]
    rows += [("spectrum", k, "", v) for k, v in enumerate(sd.spectrum)]
    rows += [("phi0", i, "", v) for i, v in enumerate(sd.phi0)]
    rows += [("nu", i, "", v) for i, v in enumerate(qe.nu)]
    rows += [("eta", i, "", v) for i, v in enumerate(qe.eta)]
    n = chain.n
    rows += [("Jphi", i, j, qe.Jphi[i, j]) for i in range(n) for j in range(n) if i != j]
    return rows


def _moment_files(tag, reports):
    rows = [r for rep in reports for r in rep.rows()]
    ts = [rep.t for rep in reports]
    errs = [float(np.max(np.abs(rep.per_state_mean - rep.limit_mean))) for rep in reports]
    return {
        f"{tag}.csv": csv_text(MOMENT_HEADER, rows),
        f"{tag}.svg": svg_polyline(ts, errs, f"{tag}: max_x |mean - limit|"),
    }


def run_experiment(exp, chain, weight, obs, seed):
    """Artifacts for one experiment as ``{filename: text}``."""
    kind = exp["kind"]
    tag = experiment_tag(exp)
    if kind == "spectral":
        return {f"{tag}.csv": csv_text(["quantity", "i", "j", "value"], spectral_rows(chain, weight))}
    if kind == "qlimits":
        reps = [semigroup.conditional_mean(chain, weight, obs, t) for t in exp["t"]]
        return _moment_files(tag, reps)
    if kind == "second_moments":
        reps = [semigroup.conditional_second_moment(chain, weight, obs, t) for t in exp["t"]]
        return _moment_files(tag, reps)
    if kind == "ldp":
        curve = ldp.ldp_curve(chain, weight, exp["theta_grid"])
        rate_rows = []
        for g in exp["gamma"]:
            try:
                rp = ldp.rate(chain, weight, g)
                rate_rows.append((g, rp.theta_gamma, rp.rate_legendre, rp.rate_bilinear, rp.agreement, ""))
            except ldp.InfeasibleLevel as exc:
                rate_rows.append((g, "", "", "", "", str(exc)))
        base = tag.replace("ldp_", "", 1)
        return {
            f"ldp_curve_{base}.csv": csv_text(["theta", "C", "Cprime", "psi"], curve.rows()),
            f"ldp_rate_{base}.csv": csv_text(
                ["gamma", "theta_gamma", "rate_legendre", "rate_bilinear", "agreement", "error"], rate_rows),
        }
    if kind == "mc":
        t = exp["t"]
        exact = semigroup.conditional_mean(chain, weight, obs, t)
        rows = []
        for x in exp["targets"]:
            est = montecarlo.fk_estimate(chain, weight, obs, t, x, exp["n_paths"], seed)
            rows.append((f"fk_mean[x={x}]", t, "", "", est.value, est.stderr, est.ess, est.n_paths, seed))
            rows.append((f"exact_mean[x={x}]", t, "", "", float(exact.per_state_mean[x]), 0.0, "", "", ""))
        return {f"{tag}.csv": csv_text(ESTIMATE_HEADER, rows)}
    if kind == "tail":
        est = montecarlo.tail_probability(chain, weight, exp["gamma"], exp["t"], exp["x"],
                                          exp["theta_tilt"], exp["n_paths"], seed)
        x, t = exp["x"], exp["t"]
        rate_est = math.log(est.value) / t if est.value > 0 else float("-inf")
        rows = [
            (f"tail_probability[x={x}]", t, exp["gamma"], exp["theta_tilt"], est.value, est.stderr,
             est.ess, est.n_paths, seed),
            (f"log_rate[x={x}]", t, exp["gamma"], exp["theta_tilt"], rate_est, "", est.ess, est.n_paths, seed),
        ]
        return {f"{tag}.csv": csv_text(ESTIMATE_HEADER, rows)}
    raise ValueError(f"unknown experiment kind {kind!r}")  # pragma: no cover - config rejects these


def run(cfg: ExperimentConfig, out_dir=None):
    """Run every experiment and write artifacts plus ``manifest.json``; returns the manifest."""
    chain, weight, obs = cfg.chain(), cfg.fk_weight(), cfg.obs()
    report = validate(chain, weight, obs)
    if not report.passed:
        raise ValidationError(report)
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for exp in cfg.experiments:
        files.update(run_experiment(exp, chain, weight, obs, cfg.seed))
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    files_written = ["config.json"]
    for name in sorted(files):
        (out / name).write_text(files[name])
        files_written.append(name)
    manifest = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "artifacts": [
            {"path": name, "sha256": hashlib.sha256((out / name).read_bytes()).hexdigest()}
            for name in files_written
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def describe(cfg: ExperimentConfig) -> str:
    chain, weight = cfg.chain(), cfg.fk_weight()
    L = tilted_generator(chain, weight, 1.0).L
    sd = ground_state(chain, weight)
    qe = qe_quantities(chain, weight, sd)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        parts = [
            f"states: {chain.n}",
            "generator L:",
            str(L),
            f"lambda0: {sd.lambda0!r}",
            f"gap: {sd.gap!r}",
            f"phi0: {sd.phi0}",
            f"quasi-stationary nu: {qe.nu}",
            f"quasi-ergodic eta: {qe.eta}",
        ]
    return "\n".join(parts)


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, output_dir=args.output_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fkqe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("check", "parse and validate a config"),
                        ("run", "run every experiment in a config"),
                        ("describe", "print the generator and spectral summary")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--output-dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None, help="advisory worker count")
    args = parser.parse_args(argv)

    if args.threads:
        set_threads(args.threads)
    try:
        cfg = _load(args)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed", "must be a 64-bit unsigned integer")
        if args.command == "check":
            report = validate(cfg.chain(), cfg.fk_weight(), cfg.obs())
            print(report.render())
            return EXIT_OK if report.passed else EXIT_VALIDATION
        if args.command == "describe":
            report = validate(cfg.chain(), cfg.fk_weight(), cfg.obs())
            if not report.passed:
                print(report.render(), file=sys.stderr)
                return EXIT_VALIDATION
            print(describe(cfg))
            return EXIT_OK
        manifest = run(cfg)
        print(f"wrote {len(manifest['artifacts'])} artifacts to {cfg.output_dir}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (SpectralError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # model builders reject parameters that parse but are out of range
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
