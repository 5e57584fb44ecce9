"""Command-line front end.

Exit status
-----------
0  success
1  invalid input data or arguments
2  the chosen statistic is undefined for the data (e.g. an asset that never
   pierces its threshold under gs1)
3  ``--check-psd`` found the matrix not PSD
4  ``find-witness`` ran all trials without finding a witness
5  ``verify`` found a failing check
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import GerberError, InputError, PreconditionError
from .gerber import (
    VARIANTS,
    covariance_from_gerber,
    format_matrix_csv,
    gerber_matrix,
    gerber_oracle,
    pair_counts,
    to_csv,
    to_dict,
)
from .indicators import DEFAULT_C
from .ingest import SIGMA_DDOF, IngestOptions, load_returns
from .pipeline import analyze
from .psd import (
    DEFAULT_TOL,
    check_psd,
    find_non_psd_original,
    save_witness,
    series_term_bound,
    verify_series_construction,
    verify_squared_form,
)

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_NOT_PSD, EXIT_NO_WITNESS = 0, 1, 2, 3, 4
EXIT_VERIFY_FAILED = 5

ORACLE_TOL = 1e-12


@dataclass(frozen=True)
class RunConfig:
    input_path: Optional[Path] = None
    variant: str = "gs2"
    c: float = DEFAULT_C
    output_path: Optional[Path] = None
    format: str = "csv"
    check_psd: bool = False
    emit_covariance: bool = False
    dump_indicators: bool = False
    tolerance: float = DEFAULT_TOL
    seed: Optional[int] = None
    trials: int = 10_000
    rows: int = 20
    cols: int = 5
    ingest: IngestOptions = IngestOptions()

    def __post_init__(self):
        if not self.c > 0:
            raise InputError(f"--c must be positive, got {self.c}")
        if not self.tolerance > 0:
            raise InputError(f"--tolerance must be positive, got {self.tolerance}")
        if self.variant not in VARIANTS:
            raise InputError(f"--variant must be one of {', '.join(VARIANTS)}")


def _emit(text, cfg, stdout):
    if cfg.output_path is None:
        stdout.write(text)
    else:
        Path(cfg.output_path).write_text(text, encoding="utf-8")


def _dump_indicators(ind, stream):
    for name in "UDFP":
        stream.write(f"# {name}\n")
        stream.write(",".join(ind.asset_labels) + "\n")
        for row in getattr(ind, name):
            stream.write(",".join(str(int(v)) for v in row) + "\n")


def run_compute(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    a = analyze(load_returns(cfg.input_path, cfg.ingest), cfg.c)
    if cfg.dump_indicators:
        _dump_indicators(a.indicators, stderr)
    g = a.gerber(cfg.variant)
    if g.convention_cells:
        stderr.write(
            f"note: {len(g.convention_cells)} cell(s) with no joint piercings set by convention\n"
        )
    cov = covariance_from_gerber(g, a.sigmas) if cfg.emit_covariance else None
    report = check_psd(g, cfg.tolerance) if cfg.check_psd else None

    if cfg.format == "json":
        doc = to_dict(g)
        doc["sigma"] = a.sigmas.tolist()
        doc["sigma_ddof"] = SIGMA_DDOF
        doc["thresholds"] = a.thresholds.h.tolist()
        if cov is not None:
            doc["covariance"] = cov.tolist()
        if report is not None:
            doc["psd"] = report.to_dict()
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = to_csv(g)
        if cov is not None:
            text += "\n" + format_matrix_csv(cov, g.asset_labels, corner="covariance")
    _emit(text, cfg, stdout)

    if report is not None:
        stderr.write(
            f"psd: verdict={report.verdict} lambda_min={report.lambda_min:.17g} "
            f"lambda_max={report.lambda_max:.17g} tolerance={report.tolerance:g}\n"
        )
        if report.verdict == "not_psd":
            return EXIT_NOT_PSD
    return EXIT_OK


def _verify_rows(a, tolerance):
    """Yield (status, name, detail) rows; status is PASS, FAIL, SKIP or INFO."""
    ind, cm, T, K = a.indicators, a.counts, a.indicators.T, a.indicators.K

    ok = verify_squared_form(ind, cm)
    yield ("PASS" if ok else "FAIL"), "squared_form", "H = (U-D)^T(U-D) = F^T F; x^T H x >= 0"

    agg_ok = True
    for i in range(K):
        for j in range(i, K):
            pc = pair_counts(ind, i, j)
            agg_ok &= (
                pc.total == T
                and pc.concordant == cm.N_conc[i, j]
                and pc.discordant == cm.N_disc[i, j]
                and pc.n_nn == cm.N_nn[i, j]
                and pc.n_uu == cm.N_uu[i, j]
                and pc.n_dd == cm.N_dd[i, j]
            )
    yield ("PASS" if agg_ok else "FAIL"), "region_counts", "per-pair loop matches count matrices; grids sum to T"

    mats = {}
    for variant in VARIANTS:
        try:
            g = gerber_matrix(cm, variant)
        except PreconditionError as exc:
            yield "SKIP", f"oracle_{variant}", str(exc)
            continue
        mats[variant] = g
        ref = gerber_oracle(a.returns, a.thresholds, variant)
        gap = float(np.max(np.abs(g.values - ref.values)))
        yield ("PASS" if gap <= ORACLE_TOL else "FAIL"), f"oracle_{variant}", f"max |matrix - loop| = {gap:.3e}"

    if "gs1" in mats:
        g1 = mats["gs1"]
        J = np.diag(1.0 / np.sqrt(np.diag(cm.H).astype(float)))
        gap = float(np.max(np.abs(g1.values - J.T @ cm.H @ J)))
        diag = float(np.max(np.abs(np.diag(g1.values) - 1.0)))
        ok = gap <= ORACLE_TOL and diag <= ORACLE_TOL
        yield ("PASS" if ok else "FAIL"), "gs1_forms", f"|H/(hh^T) - J^T H J| = {gap:.3e}; |diag - 1| = {diag:.3e}"

    for variant in ("gs1", "gs2"):
        if variant in mats:
            rep = check_psd(mats[variant], tolerance)
            yield (
                ("PASS" if rep.verdict == "psd" else "FAIL"),
                f"psd_{variant}",
                f"lambda_min = {rep.lambda_min:.6g}, lambda_max = {rep.lambda_max:.6g}",
            )

    if "gs2" in mats:
        sc = verify_series_construction(ind, mats["gs2"], T, tol=1e-10, psd_tol=tolerance)
        bound = series_term_bound(sc.x_max, 1e-10)
        ok = sc.max_abs_error <= 1e-10 and sc.terms_used <= bound and sc.partial_sums_psd
        yield (
            ("PASS" if ok else "FAIL"),
            "gs2_series",
            f"terms_used = {sc.terms_used} (bound {bound}), x_max = {sc.x_max:.6g}, "
            f"error = {sc.max_abs_error:.3e}, partial sums psd = {sc.partial_sums_psd}",
        )

    rep = check_psd(mats["original"], tolerance)
    yield "INFO", "psd_original", f"verdict = {rep.verdict}, lambda_min = {rep.lambda_min:.6g}"


def run_verify(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    a = analyze(load_returns(cfg.input_path, cfg.ingest), cfg.c)
    stdout.write(
        f"input: T={a.indicators.T} K={a.indicators.K} c={cfg.c:g} "
        f"sigma=sample std (ddof={SIGMA_DDOF})\n"
    )
    failed = skipped = False
    for status, name, detail in _verify_rows(a, cfg.tolerance):
        stdout.write(f"{status:<5} {name:<15} {detail}\n")
        failed |= status == "FAIL"
        skipped |= status == "SKIP"
    if failed:
        return EXIT_VERIFY_FAILED
    return EXIT_PRECONDITION if skipped else EXIT_OK


def run_find_witness(cfg: RunConfig, stdout=sys.stdout, stderr=sys.stderr) -> int:
    seed = 0 if cfg.seed is None else cfg.seed
    res = find_non_psd_original(cfg.trials, cfg.rows, cfg.cols, cfg.c, seed)
    doc = {"found": res.found, "trials_run": res.trials_run, "seed": seed,
           "T": cfg.rows, "K": cfg.cols, "c": cfg.c}
    if res.found:
        w = res.witness
        doc.update(trial_index=w.trial_index, lambda_min=w.lambda_min,
                   psd=w.report.to_dict())
        if cfg.output_path is not None:
            csv_path, json_path = save_witness(w, cfg.output_path)
            doc["files"] = [str(csv_path), str(json_path)]
    stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if res.found else EXIT_NO_WITNESS


def _add_input_args(p):
    p.add_argument("--input", required=True, type=Path, help="returns CSV, one row per period")
    p.add_argument("--c", type=float, default=DEFAULT_C, help="threshold as a fraction of sigma (default 0.5)")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOL, help="relative PSD tolerance")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true", help="first row is data; labels become A1..AK")
    p.add_argument("--period-column", action="store_true", help="first column holds period labels")


def build_parser():
    parser = argparse.ArgumentParser(prog="gerberstat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute a Gerber matrix")
    _add_input_args(p)
    p.add_argument("--variant", choices=VARIANTS, default="gs2")
    p.add_argument("--output", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--check-psd", action="store_true")
    p.add_argument("--covariance", action="store_true", help="also emit diag(sigma) G diag(sigma)")
    p.add_argument("--dump-indicators", action="store_true", help="write U/D/F/P to stderr as CSV")

    p = sub.add_parser("verify", help="run identity and PSD checks on a returns file")
    _add_input_args(p)

    p = sub.add_parser("find-witness", help="search for a non-PSD original Gerber matrix")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", type=int, default=20, help="periods T per trial")
    p.add_argument("--cols", type=int, default=5, help="assets K per trial")
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--output", type=Path, help="file stem for <stem>.csv and <stem>.json")
    return parser


def config_from_args(ns) -> RunConfig:
    kw = dict(c=ns.c, output_path=getattr(ns, "output", None))
    if ns.command == "find-witness":
        if ns.trials < 1 or ns.rows < 2 or ns.cols < 1:
            raise InputError("--trials >= 1, --rows >= 2 and --cols >= 1 are required")
        kw.update(seed=ns.seed, trials=ns.trials, rows=ns.rows, cols=ns.cols)
    else:
        kw.update(
            input_path=ns.input,
            tolerance=ns.tolerance,
            ingest=IngestOptions(ns.delimiter, not ns.no_header, ns.period_column),
        )
    if ns.command == "compute":
        kw.update(
            variant=ns.variant,
            format=ns.format,
            check_psd=ns.check_psd,
            emit_covariance=ns.covariance,
            dump_indicators=ns.dump_indicators,
        )
    return RunConfig(**kw)


COMMANDS = {"compute": run_compute, "verify": run_verify, "find-witness": run_find_witness}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[ns.command](cfg, stdout, stderr)
    except PreconditionError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION
    except (InputError, GerberError, OSError, UnicodeDecodeError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
