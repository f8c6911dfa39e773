"""Command-line entry point: ``bianchi-cf <command> [flags]``.

Every output file echoes the configuration that produced it together with
the package version; the same configuration reproduces the file byte for byte
(worker count, output directory and --strict are not part of it).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .cfrac import determinant_identity, expand, in_closed_cell_exact
from .evt import (
    cstar_experiment,
    estimate_tail_constant,
    frechet_fit,
    galambos_baseline,
    max_digit_experiment,
    poisson_k_fit,
    scale_from_tail,
    theorem2_experiment,
)
from .excursion import N_MIN
from .ring import EUCLIDEAN_D, FieldElement, as_disc

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_TOLERANCE = 0, 2, 3, 4

KS_TOL = 0.05
PLATEAU_TOL = 0.10
ALPHA_TOL = 0.1
GAP_TOL = 2.0

DEFAULTS = {
    "expand": {"N": 100},
    "frechet": {"N": 1000, "M": 10_000, "L": 1_000_000},
    "excursions": {"N": 1000, "M": 200},
    "theorem2": {"N": 1000, "M": 2000, "T": 500.0},
    "galambos": {"N": 10_000, "M": 10_000},
    "tail": {"L": 10_000_000},
}


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    d: int
    N: int | None
    M: int | None
    T: float | None
    L: int | None
    seed: int
    bits: int
    k: int
    format: str
    strict: bool
    z: str | None = None

    def echo(self) -> dict:
        # strict only changes the exit code, never the data
        return {key: val for key, val in asdict(self).items() if val is not None and key != "strict"}


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return __version__


# --- parsing ------------------------------------------------------------------------

_TERM = re.compile(r"([+-]?)((?:\d+(?:\.\d*)?|\.\d+)(?:/\d+)?)?([iw]?)")


def parse_point(text: str, d: int):
    """Parse "p1/q1+p2/q2i", "0.3-0.2i", "1/3+1/4w" or a bare rational.

    ``i`` is the imaginary unit, ``w`` the ring generator.  Rational input is
    exact (FieldElement); an ``i`` term outside Q(i) falls back to a float.
    """
    s = text.replace(" ", "").replace("*", "")
    real, imag, wpart = Fraction(0), Fraction(0), Fraction(0)
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        sign, coef, unit = m.groups()
        if m.end() == pos or not (coef or unit) or (pos and not sign):
            raise argparse.ArgumentTypeError(f"cannot parse point {text!r}")
        try:
            val = Fraction(coef or 1) * (-1 if sign == "-" else 1)
        except ZeroDivisionError:
            raise argparse.ArgumentTypeError(f"zero denominator in {text!r}") from None
        if unit == "i":
            imag += val
        elif unit == "w":
            wpart += val
        else:
            real += val
        pos = m.end()
    if not s:
        raise argparse.ArgumentTypeError("empty point")
    if d == 1:  # w = i
        return FieldElement.from_coords(real, imag + wpart, d)
    if imag:
        return complex(float(real), float(imag)) + float(wpart) * complex(as_disc(d).omega)
    return FieldElement.from_coords(real, wpart, d)


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        try:
            f = float(text)  # accept 1e7
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if not f.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        val = int(f)
    if val <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _positive_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not val > 0 or not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _seed(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, choices=EUCLIDEAN_D, default=1, help="field Q(sqrt(-d))")
    common.add_argument("--N", type=_positive_int, help="digits per expansion")
    common.add_argument("--M", type=_positive_int, help="number of samples")
    common.add_argument("--T", type=_positive_float, help="geodesic time horizon")
    common.add_argument("--L", type=_positive_int, help="orbit length for tail estimation")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--bits", type=_positive_int, default=256, help="exact coordinate size (minimum)")
    common.add_argument("--k", type=_positive_int, default=2, help="order of the k-th maximum")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--strict", action="store_true", help="exit 4 when a tolerance check fails")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker processes")

    parser = argparse.ArgumentParser(prog="bianchi-cf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {package_version()}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("expand", parents=[common], help="digits and convergents of one point")
    p.add_argument("--z", required=True, help='point, e.g. "3/10+1/5i" or "1/3+1/4w"')
    sub.add_parser("frechet", parents=[common], help="maximal-digit law: maxima.csv, fit.json")
    sub.add_parser("excursions", parents=[common], help="excursion traces: trace.csv, cstar.json")
    sub.add_parser("theorem2", parents=[common], help="cusp-excursion statistic: thm2.json")
    sub.add_parser("galambos", parents=[common], help="real continued-fraction baseline: galambos.json")
    sub.add_parser("tail", parents=[common], help="tail constant of |a_1|: tail.json")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    dflt = DEFAULTS[args.command]
    pick = lambda name: getattr(args, name) if getattr(args, name) is not None else dflt.get(name)  # noqa: E731
    return RunConfig(
        command=args.command, d=args.d, N=pick("N"), M=pick("M"), T=pick("T"), L=pick("L"), seed=args.seed,
        bits=args.bits, k=args.k, format=args.format, strict=args.strict, z=getattr(args, "z", None),
    )


# --- output ----------------------------------------------------------------------------


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def json_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def document(cfg: RunConfig, fields: dict) -> dict:
    return {**fields, "version": package_version(), "config": cfg.echo()}


def write_file(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_table(cfg: RunConfig, out: Path, stem: str, header, rows) -> Path:
    if cfg.format == "json":
        path = out / f"{stem}.json"
        records = [dict(zip(header, row)) for row in rows]
        write_file(path, json_text(document(cfg, {"rows": records})))
    else:
        path = out / f"{stem}.csv"
        write_file(path, csv_text(header, rows))
    return path


# --- commands --------------------------------------------------------------------------


def cmd_expand(cfg: RunConfig, out: Path, threads: int):
    beta = parse_point(cfg.z, cfg.d)
    if isinstance(beta, FieldElement):
        if not in_closed_cell_exact(beta):
            raise PreconditionError(f"{cfg.z} lies outside the closed cell K_{cfg.d}")
    exp_ = expand(beta, cfg.d, cfg.N) if not isinstance(beta, FieldElement) else expand(beta, N=cfg.N)
    header = ["n", "a_n", "p_n", "q_n", "abs_tail", "det_ok"]
    rows = []
    for n in range(1, len(exp_) + 1):
        p, q = exp_.convergent(n)
        det_ok = determinant_identity(exp_, n) == (-1) ** n
        rows.append([n, str(exp_.digits[n - 1]), str(p), str(q), abs(exp_.tail_complex(n)), det_ok])
    if cfg.format == "json":
        text = json_text(document(cfg, {"rows": [dict(zip(header, r)) for r in rows],
                                        "terminated": exp_.terminated}))
    else:
        text = csv_text(header, rows)
    sys.stdout.write(text)
    return [all(r[-1] for r in rows)], []


def cmd_frechet(cfg: RunConfig, out: Path, threads: int):
    sample = max_digit_experiment(cfg.d, cfg.N, cfg.M, cfg.seed, k=cfg.k, bits=cfg.bits, threads=threads)
    tail = estimate_tail_constant(cfg.d, cfg.L, seed=cfg.seed, threads=threads)
    C = scale_from_tail(tail.H_hat)
    fit = frechet_fit(sample, C)
    kcol = f"k{cfg.k}_abs_digit"
    header = ["sample_id", "max_abs_digit"] + ([kcol] if cfg.k > 1 else [])
    rows = [
        [i, float(sample.maxima[i])] + ([float(sample.k_maxima[cfg.k][i])] if cfg.k > 1 else [])
        for i in range(sample.M)
    ]
    write_table(cfg, out, "maxima", header, rows)
    fields = {
        "d": cfg.d, "N": cfg.N, "M": cfg.M, "seed": cfg.seed, "H_hat": tail.H_hat, "H_stderr": tail.H_stderr,
        "C_hat": C, "ks_distance": fit.ks_distance, "fitted_scale": fit.fitted_scale,
    }
    if cfg.k > 1:
        fields[f"ks_poisson_k{cfg.k}"] = poisson_k_fit(sample, cfg.k, C).ks_distance
    fields.update({"bits": sample.bits, "resampled": sample.resampled})
    write_file(out / "fit.json", json_text(document(cfg, fields)))
    return [fit.ks_distance < KS_TOL], [f"ks_distance {fit.ks_distance:.4f} >= {KS_TOL}"]


def cmd_excursions(cfg: RunConfig, out: Path, threads: int):
    traces, est = cstar_experiment(cfg.d, cfg.N, cfg.M, cfg.seed, threads=threads)
    header = ["sample_id", "n", "t_n", "t_star_n", "apex_height", "log_norm_q", "lemma51_defect"]
    rows = []
    worst = 0.0
    for i, tr in enumerate(traces):
        defects = tr.defects()
        worst = max(worst, float(defects.max()))
        for j in range(len(tr)):
            rows.append([i, j + 1, tr.t[j], tr.t_star[j], tr.apex_height[j], tr.log_norm_q[j], defects[j]])
    write_table(cfg, out, "trace", header, rows)
    fields = {
        "C_star": est.c_star, "stderr": est.stderr, "cross_estimator": est.cross_estimator,
        "cross_stderr": est.cross_stderr, "birkhoff": est.birkhoff, "birkhoff_stderr": est.birkhoff_stderr,
        "agreement_flag": est.agreement_flag, "max_lemma51_defect": worst, "n": est.n, "count": est.count,
    }
    write_file(out / "cstar.json", json_text(document(cfg, fields)))
    return [est.agreement_flag], ["t*_n/n and 2 log|q_n|/n disagree beyond 3 standard errors"]


def cmd_theorem2(cfg: RunConfig, out: Path, threads: int):
    _, cst = cstar_experiment(cfg.d, max(cfg.N, N_MIN), min(cfg.M, 1000), cfg.seed, threads=threads)
    sample = max_digit_experiment(cfg.d, cfg.N, cfg.M, cfg.seed, k=1, bits=cfg.bits, threads=threads)
    c_d = frechet_fit(sample).fitted_scale
    rep = theorem2_experiment(
        cfg.d, cfg.T, cfg.M, cfg.seed, c_d=c_d, c_star=cst.c_star, direct=min(100, cfg.M), threads=threads
    )
    fields = {
        "d": cfg.d, "T": cfg.T, "M": cfg.M, "seed": cfg.seed, "C_d": c_d, "C_star": cst.c_star,
        "alpha_hat": rep.alpha_hat, "alpha_fit": rep.alpha_fit, "ks_distance": rep.ks_distance,
        "ks_fit": rep.ks_fit, "direct_gap_p95": rep.gap_p95, "direct_count": len(rep.gaps),
        "mean_horizon": float(np.mean(rep.horizon)), "resampled": rep.resampled,
    }
    write_file(out / "thm2.json", json_text(document(cfg, fields)))
    checks = [rep.ks_distance < KS_TOL, abs(rep.alpha_hat - rep.alpha_fit) < ALPHA_TOL, rep.gap_p95 < GAP_TOL]
    msgs = [
        f"ks_distance {rep.ks_distance:.4f} >= {KS_TOL}",
        f"|alpha_hat - alpha_fit| = {abs(rep.alpha_hat - rep.alpha_fit):.4f} >= {ALPHA_TOL}",
        f"direct gap 95th percentile {rep.gap_p95:.3f} >= {GAP_TOL}",
    ]
    return checks, msgs


def cmd_galambos(cfg: RunConfig, out: Path, threads: int):
    rep = galambos_baseline(cfg.N, cfg.M, cfg.seed, threads=threads)
    fields = {
        "N": cfg.N, "M": cfg.M, "seed": cfg.seed, "ks_distance": rep.ks_distance,
        "fitted_scale": rep.fitted_scale, "p_first_digit_one": rep.p_first_digit_one, "restarts": rep.restarts,
    }
    write_file(out / "galambos.json", json_text(document(cfg, fields)))
    return [rep.ks_distance < KS_TOL], [f"ks_distance {rep.ks_distance:.4f} >= {KS_TOL}"]


def cmd_tail(cfg: RunConfig, out: Path, threads: int):
    est = estimate_tail_constant(cfg.d, cfg.L, seed=cfg.seed, threads=threads)
    fields = {
        "d": cfg.d, "L": est.L, "seed": cfg.seed, "H_hat": est.H_hat, "H_stderr": est.H_stderr,
        "spread": est.spread, "thresholds": est.thresholds, "tail_freq": est.tail_freq,
        "plateau": est.plateau, "warning": est.warning,
    }
    write_file(out / "tail.json", json_text(document(cfg, fields)))
    return [est.spread < PLATEAU_TOL], [f"plateau spread {est.spread:.4f} >= {PLATEAU_TOL}"]


COMMANDS = {
    "expand": cmd_expand,
    "frechet": cmd_frechet,
    "excursions": cmd_excursions,
    "theorem2": cmd_theorem2,
    "galambos": cmd_galambos,
    "tail": cmd_tail,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = make_config(args)
    try:
        checks, messages = COMMANDS[cfg.command](cfg, args.out, args.threads)
    except (PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    failed = [msg for ok, msg in zip(checks, messages) if not ok]
    for msg in failed:
        print(f"warning: tolerance check failed: {msg}", file=sys.stderr)
    if failed and cfg.strict:
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
