"""Command line: ``trpca sample``, ``trpca fit`` and ``trpca plot``.

Exit status is 0 on success, 2 for input/data errors and 3 when a
computation fails (optimizer non-convergence or a failed pipeline stage).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .curve import TabulatedRidge, ridge_table
from .errors import ConvergenceError, PipelineError, TrpcaError
from .geometry import cmod
from .models import BsvmParams, BwcParams, BwnParams, params_from_dict, sample
from .pipeline import PipelineConfig, compute_scores, pve, ridge_pca, scenario_sample

log = logging.getLogger("trpca")

EXIT_OK = 0
EXIT_DATA = 2
EXIT_COMPUTE = 3


class DataError(TrpcaError, ValueError):
    """Malformed or insufficient input data."""


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# CSV I/O


def read_angles(path, columns=("theta1", "theta2")):
    """Read a CSV with the given header into an ``(n, k)`` array.

    Returns the raw values; :class:`DataError` names the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if header != list(columns):
            raise DataError(f"{path}: line 1: expected header {','.join(columns)}, "
                            f"got {','.join(header)}")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(columns):
                raise DataError(f"{path}: line {line}: expected {len(columns)} fields, "
                                f"got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}: line {line}: non-numeric value in {row!r}") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}: line {line}: non-finite value in {row!r}")
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, len(columns))


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_ridge_csv(path):
    """Ridge table written by ``trpca fit`` as a :class:`TabulatedRidge`."""
    return TabulatedRidge(read_angles(path, ("alpha", "theta1", "theta2")))


def rescore(ridge_csv, sample_pts):
    """Scores of a sample against the curve stored in ``ridge.csv``."""
    return compute_scores(read_ridge_csv(ridge_csv), sample_pts)


# ---------------------------------------------------------------------------
# commands


def _model_params(args):
    mu1, mu2 = args.mu1, args.mu2
    if args.model == "bsvm":
        return BsvmParams(mu1, mu2, args.kappa1, args.kappa2, args.lam)
    if args.model == "bwc":
        return BwcParams(mu1, mu2, args.xi1, args.xi2, args.rho)
    return BwnParams(mu1, mu2, args.sigma1_sq, args.sigma2_sq, args.rho)


def cmd_sample(args):
    if args.scenario is not None:
        pts, _ = scenario_sample(args.scenario, args.n, args.seed)
    else:
        if args.model is None:
            raise DataError("either --model or --scenario is required")
        pts = sample(_model_params(args), args.n, args.seed)
    write_csv(args.output, ("theta1", "theta2"), pts)
    log.info("wrote %d samples to %s", pts.shape[0], args.output)
    return EXIT_OK


def cmd_fit(args):
    raw = read_angles(args.input)
    if raw.shape[0] < 10:
        raise DataError(f"{args.input}: need at least 10 rows, got {raw.shape[0]}")
    wrapped = int(np.sum((raw < -np.pi) | (raw >= np.pi)))
    if wrapped:
        log.warning("wrapped %d values outside [-pi, pi)", wrapped)
    pts = cmod(raw).reshape(-1, 2)
    config = PipelineConfig(model=args.model, alpha=args.alpha, fourier_m=args.fourier_m,
                            grid_n=args.grid_n, seed=args.seed)
    fit = ridge_pca(pts, config)

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ridge_path = out / "ridge.csv"
    write_csv(ridge_path, ("alpha", "theta1", "theta2"), ridge_table(fit.curve))
    # score against the curve exactly as exported so ridge.csv reproduces scores.csv
    scores = rescore(ridge_path, pts)
    share = pve(scores)
    write_csv(out / "scores.csv", ("index", "s1", "s2"),
              ((i, a, b) for i, (a, b) in enumerate(zip(scores.s1, scores.s2))))

    doc = fit.to_dict()
    doc["pve"] = share
    doc["pve_fourier_curve"] = fit.pve
    doc["m2"] = scores.m2
    doc["input"] = str(Path(args.input).resolve())
    doc["wrapped_on_ingest"] = wrapped
    doc["config"] = {"model": config.model, "alpha": config.alpha,
                     "fourier_m": config.fourier_m, "grid_n": config.grid_n,
                     "seed": config.seed}
    with (out / "fit.json").open("w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")
    (out / "summary.txt").write_text(summary_text(doc))
    if not args.no_figure:
        from .plotting import ridge_figure, save_figure

        fig = ridge_figure(pts, fit.selected.params, ridge_table(fit.curve)[:, 1:],
                           scores=(scores.s1, scores.s2))
        save_figure(fig, out / "fit.svg")
    log.info("wrote fit artifacts to %s", out)
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def summary_text(doc):
    fit = doc["fit"]
    lines = [
        f"model        {doc['model']}",
        f"n            {fit['n']}",
        f"restrictions {', '.join(fit['restrictions']) or 'none'}",
        f"loglik       {fit['loglik']:.6f}",
        f"bic          {fit['bic']:.6f}",
        "parameters",
    ]
    lines += [f"  {k:<10} {v: .6f}" for k, v in fit["params"].items()]
    lines.append("likelihood-ratio tests")
    for name, res in doc["lrt"].items():
        verdict = "rejected" if res["rejected"] else "not rejected"
        lines.append(f"  {name:<13} stat {res['statistic']:.4f}  crit {res['critical']:.4f}  "
                     f"{verdict}")
    lines.append(f"edge flags   {', '.join(doc['edge_flags']) or 'none'}")
    lines.append(f"ridge length {doc['curve']['total_length_R']:.6f}")
    lines.append(f"PVE          {doc['pve']:.4f}")
    return "\n".join(lines) + "\n"


def cmd_plot(args):
    from .plotting import ridge_figure, save_figure

    art = Path(args.artifacts)
    fit_path = art / "fit.json"
    if not fit_path.is_file():
        raise DataError(f"{fit_path}: no such file")
    doc = json.loads(fit_path.read_text())
    table = read_angles(art / "ridge.csv", ("alpha", "theta1", "theta2"))
    scores = read_angles(art / "scores.csv", ("index", "s1", "s2"))
    data_path = args.data or doc.get("input")
    if data_path is None:
        raise DataError("no sample file recorded in fit.json; pass --data")
    pts = cmod(read_angles(data_path)).reshape(-1, 2)
    if pts.shape[0] != scores.shape[0]:
        raise DataError(f"{data_path} has {pts.shape[0]} rows but scores.csv has "
                        f"{scores.shape[0]}")
    params = params_from_dict(doc["fit"]["model"], doc["fit"]["params"])
    fig = ridge_figure(pts, params, table[:, 1:], scores=(scores[:, 1], scores[:, 2])
                       if args.with_scores else None)
    save_figure(fig, args.output)
    log.info("wrote %s", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(prog="trpca",
                                     description="Toroidal ridge PCA for bivariate angles.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="simulate a theta1,theta2 CSV")
    p.add_argument("--model", choices=("bsvm", "bwc", "bwn"))
    p.add_argument("--scenario", type=int, choices=(1, 2, 3, 4),
                   help="one of the four benchmark scenarios instead of --model")
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--kappa1", type=float, default=1.0)
    p.add_argument("--kappa2", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--xi1", type=float, default=0.5)
    p.add_argument("--xi2", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sigma1-sq", dest="sigma1_sq", type=float, default=1.0)
    p.add_argument("--sigma2-sq", dest="sigma2_sq", type=float, default=1.0)
    p.add_argument("-n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="run the pipeline and write fit artifacts")
    p.add_argument("input", help="CSV with header theta1,theta2 (radians)")
    p.add_argument("-o", "--output-dir", default="trpca_out")
    p.add_argument("--model", choices=("auto", "bsvm", "bwc"), default="auto")
    p.add_argument("--alpha", type=float, default=0.05, help="LRT significance level")
    p.add_argument("--fourier-m", type=int, default=15)
    p.add_argument("--grid-n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figure", action="store_true", help="skip writing fit.svg")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("plot", help="render a fit as SVG")
    p.add_argument("artifacts", help="directory written by trpca fit")
    p.add_argument("-o", "--output", default="fit.svg")
    p.add_argument("--data", help="sample CSV (default: the input recorded in fit.json)")
    p.add_argument("--with-scores", action="store_true", help="add the score scatter panel")
    p.set_defaults(func=cmd_plot)
    return parser


def _exit_code(exc):
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    if isinstance(cause, ConvergenceError):
        return EXIT_COMPUTE
    if isinstance(exc, PipelineError):
        return EXIT_DATA if isinstance(cause, (DataError,)) else EXIT_COMPUTE
    if isinstance(exc, (ValueError, OSError)):
        return EXIT_DATA
    return EXIT_COMPUTE


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (TrpcaError, OSError) as exc:
        print(f"trpca {args.command}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
