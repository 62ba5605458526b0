"""Command-line front end: ``oscdecay {analyze,verify,table,replay}``.

Every report embeds the effective configuration, so ``oscdecay replay``
on a report reproduces its payload exactly (only ``timestamp`` differs).

Exit codes: 0 success, 2 parse or usage error, 3 guard violation,
4 quadrature ceiling or unusable ladder.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .decay import AnalysisConfig, PhaseSpec, analyze_phase, corollary_check
from .hessian import GuardError, PhaseError
from .oscint import (
    FAMILIES,
    CutoffSpec,
    EmptyRegionError,
    FitError,
    QuadConfig,
    QuadratureCeilingError,
    TestFamily,
    lambda_ladder,
    run_ladder,
)
from .parser import ParseError, parse_phase
from .sublevel import LadderConfig, SamplerConfig, SupportGeometry

SCHEMA = "oscdecay-report/1"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_GUARD = 3
EXIT_CEILING = 4

# (label, phase, d) rows of the d = 2 chart plus the three-dimensional example
TABLE_PHASES = (
    ("case-1", "1/2*(x1*y1*y2 + x2*y2^2 - x2*y1^2)", 2),
    ("case-2", "1/2*(x1*y1^2 + x2*y2^2)", 2),
    ("case-3", "1/2*(x1*y2^2 + x2^2*y1)", 2),
    ("case-4", "1/2*x1^2*y1", 2),
    ("d3-minor", "x1*x2*y2 + x1*x3*y3 + 1/2*x1*y3^2 + 1/2*x1^2*y1 - 1/2*x2^2*y1"
                 " - 1/2*x3*y1^2 - 1/2*x2^2*y3", 3),
)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    """Effective settings of one run; echoed verbatim into the report."""

    command: str
    phase: str | None = None
    dim: int = 2
    support: float = 1.0
    seed: int = 42
    eps_min: float = 1e-6
    eps_max: float = 1e-1
    eps_steps: int = 6
    samples: int = 200_000
    grid: int = 8
    family: str = "scaled-box"
    width: float = 0.25
    box: list | None = None
    cutoff: str = "bump"
    lambda_min: float = 1e2
    lambda_max: float = 1e4
    lambda_steps: int = 8
    quad_log2: int = 17
    replicates: int = 8
    format: str = "json"
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def replayable(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    def analysis(self) -> AnalysisConfig:
        return AnalysisConfig(
            sampler=SamplerConfig(n_samples=self.samples, replicates=self.replicates,
                                  seed=self.seed, grid_n=self.grid),
            ladder=LadderConfig(eps_max=self.eps_max, eps_min=self.eps_min,
                                steps=self.eps_steps),
        )


# -- helpers -------------------------------------------------------------------

def _num(x):
    if isinstance(x, Fraction):
        return float(x)
    return x


def _phase(cfg: RunConfig, text: str | None = None, dim: int | None = None):
    text = cfg.phase if text is None else text
    if text is None:
        raise CliError(EXIT_PARSE, "--phase is required")
    try:
        return parse_phase(text, cfg.dim if dim is None else dim)
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"cannot parse phase {text!r}: {exc}") from None


def _verdict(best, corollary) -> dict:
    """Stronger of the minor-based prediction and the corollary rate."""
    out = best.to_json()
    if corollary.prediction is not None and corollary.prediction.exponent > best.exponent:
        out = corollary.prediction.to_json()
        out["selection"] = {"D": list(corollary.witness)}
    return out


def _analyze_payload(cfg: RunConfig, text: str, dim: int) -> dict:
    S = _phase(cfg, text, dim)
    geom = SupportGeometry(r=cfg.support)
    analysis = analyze_phase(PhaseSpec(S, geom, text), cfg.analysis())
    cor = corollary_check(S, None, cfg.grid, geom)
    return {
        "phase_text": text,
        "phase": str(S),
        "dim": dim,
        **analysis.to_json(),
        "corollary": cor.to_json(),
        "verdict": _verdict(analysis.best, cor),
    }


def cmd_analyze(cfg: RunConfig) -> dict:
    return _analyze_payload(cfg, cfg.phase, cfg.dim)


def _family(cfg: RunConfig) -> TestFamily:
    if cfg.family not in FAMILIES:
        raise CliError(EXIT_PARSE, f"unknown family {cfg.family!r}")
    try:
        return TestFamily(cfg.family, cfg.dim, width=cfg.width,
                          f_box=tuple(map(tuple, cfg.box)) if cfg.box else None)
    except ValueError as exc:
        raise CliError(EXIT_GUARD, str(exc)) from None


def cmd_verify(cfg: RunConfig) -> dict:
    S = _phase(cfg)
    fam = _family(cfg)
    lams = lambda_ladder(cfg.lambda_min, cfg.lambda_max, cfg.lambda_steps)
    quad = QuadConfig(log2_points=cfg.quad_log2, replicates=cfg.replicates, seed=cfg.seed)
    try:
        fit = run_ladder(S, CutoffSpec(cfg.cutoff, cfg.support), fam, lams, quad)
    except (QuadratureCeilingError, FitError) as exc:
        raise CliError(EXIT_CEILING, str(exc)) from None
    except EmptyRegionError as exc:
        raise CliError(EXIT_GUARD, str(exc)) from None
    return {"phase_text": cfg.phase, "phase": str(S), "dim": cfg.dim,
            "family": fam.to_json(), "quad": quad.to_json(), "fit": fit.to_json()}


def cmd_table(cfg: RunConfig) -> dict:
    rows = []
    for label, text, dim in TABLE_PHASES:
        payload = _analyze_payload(cfg, text, dim)
        best = payload["best"]
        sel = best["selection"]
        alpha = None
        if sel is not None:
            for m in payload["minors"]:
                if m["selection"] == sel:
                    alpha = m["alpha"]["alpha_hat"]
                    break
        rows.append({
            "case": label,
            "phase": text,
            "dim": dim,
            "k": sel["k"] if sel else None,
            "minor": sel,
            "P": next((m["P"] for m in payload["minors"] if m["selection"] == sel), None),
            "alpha_hat": alpha,
            "exponent": best["exponent"],
            "regime": best["regime"],
            "verdict_exponent": payload["verdict"]["exponent"],
            "verdict_regime": payload["verdict"]["regime"],
        })
    return {"rows": rows}


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "table": cmd_table}


def build_report(cfg: RunConfig) -> dict:
    payload = COMMANDS[cfg.command](cfg)
    return {
        "schema": SCHEMA,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": cfg.replayable(),
        "payload": payload,
    }


def _csv_rows(report: dict) -> tuple[list[str], list[dict]]:
    cmd = report["config"]["command"]
    p = report["payload"]
    if cmd == "verify":
        cols = ["lambda", "re", "im", "abs", "err", "norm_product", "ratio"]
        return cols, p["fit"]["rows"]
    if cmd == "table":
        cols = ["case", "dim", "k", "alpha_hat", "exponent", "regime", "verdict_exponent",
                "verdict_regime", "P", "phase"]
        return cols, p["rows"]
    cols = ["k", "rows", "cols", "P", "alpha_hat", "exponent", "regime"]
    rows = [{"k": m["selection"]["k"], "rows": " ".join(map(str, m["selection"]["rows"])),
             "cols": " ".join(map(str, m["selection"]["cols"])), "P": m["P"],
             "alpha_hat": m["alpha"]["alpha_hat"] if m["alpha"] else None,
             "exponent": m["prediction"]["exponent"], "regime": m["prediction"]["regime"]}
            for m in p["minors"]]
    return cols, rows


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=_num) + "\n"
    cols, rows = _csv_rows(report)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".oscdecay-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sibling(path: str, fmt: str) -> str:
    stem, _ = os.path.splitext(path)
    return f"{stem}.{fmt}"


def emit(report: dict, cfg: RunConfig) -> None:
    text = render(report, cfg.format)
    if cfg.out is None:
        sys.stdout.write(text)
        return
    write_atomic(cfg.out, text)
    if cfg.command == "verify":
        other = "csv" if cfg.format == "json" else "json"
        write_atomic(_sibling(cfg.out, other), render(report, other))


# -- argument parsing -----------------------------------------------------------

def _parse_box(text: str) -> list:
    try:
        out = []
        for part in text.split(","):
            lo, hi = part.split(":")
            out.append([float(lo), float(hi)])
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"box must look like 'lo:hi,lo:hi', got {text!r}")


def _parser() -> argparse.ArgumentParser:
    d = RunConfig("analyze")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d.seed)
    common.add_argument("--support", type=float, default=d.support,
                        help="half-width r of the cutoff support [-r, r]^{2d}")
    common.add_argument("--format", choices=("json", "csv"), default=d.format)
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    sub_common = argparse.ArgumentParser(add_help=False)
    sub_common.add_argument("--eps-min", type=float, default=d.eps_min)
    sub_common.add_argument("--eps-max", type=float, default=d.eps_max)
    sub_common.add_argument("--eps-steps", type=int, default=d.eps_steps)
    sub_common.add_argument("--samples", type=int, default=d.samples,
                            help="tau samples per eps (rounded up to a power of two per replicate)")
    sub_common.add_argument("--grid", type=int, default=d.grid,
                            help="(x, y) worst-case grid: 2*GRID+1 points per axis")
    sub_common.add_argument("--replicates", type=int, default=d.replicates)

    p = argparse.ArgumentParser(prog="oscdecay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"oscdecay {__version__}")
    sp = p.add_subparsers(dest="command", required=True)

    a = sp.add_parser("analyze", parents=[common, sub_common],
                      help="predict the decay exponent of a phase")
    a.add_argument("--phase", required=True)
    a.add_argument("--dim", type=int, default=d.dim)

    v = sp.add_parser("verify", parents=[common], help="measure the decay slope numerically")
    v.add_argument("--phase", required=True)
    v.add_argument("--dim", type=int, default=d.dim)
    v.add_argument("--family", choices=FAMILIES, default=d.family)
    v.add_argument("--width", type=float, default=d.width, help="gaussian family width")
    v.add_argument("--box", type=_parse_box, default=None,
                   help="custom-box family: 'lo:hi,...' used for f, g and h")
    v.add_argument("--cutoff", choices=("bump", "one"), default=d.cutoff)
    v.add_argument("--lambda-min", type=float, default=d.lambda_min)
    v.add_argument("--lambda-max", type=float, default=d.lambda_max)
    v.add_argument("--lambda-steps", type=int, default=d.lambda_steps)
    v.add_argument("--samples", type=int, default=None,
                   help="total quadrature points (default 2^17 per replicate)")
    v.add_argument("--replicates", type=int, default=d.replicates)

    sp.add_parser("table", parents=[common, sub_common], help="reproduce the d = 2 chart")

    r = sp.add_parser("replay", help="re-run the config embedded in a report")
    r.add_argument("report")
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=("json", "csv"), default=None)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.command == "replay":
        try:
            with open(ns.report, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_PARSE, f"cannot read report {ns.report!r}: {exc}") from None
        if doc.get("schema") != SCHEMA:
            raise CliError(EXIT_PARSE, f"unsupported report schema {doc.get('schema')!r}")
        cfg = RunConfig(**doc["config"])
        return replace(cfg, out=ns.out, format=ns.format or cfg.format)
    vals = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if ns.command == "verify":
        samples = vals.pop("samples", None)
        if samples is not None:
            per = max(1, math.ceil(samples / ns.replicates))
            vals["quad_log2"] = max(4, math.ceil(math.log2(per)))
    return RunConfig(**vals)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if cfg.command == "table":
            cfg = replace(cfg, phase=None)
        if cfg.dim < 1:
            raise CliError(EXIT_PARSE, "--dim must be positive")
        emit(build_report(cfg), cfg)
    except CliError as exc:
        print(f"oscdecay: {exc}", file=sys.stderr)
        return exc.code
    except (GuardError, PhaseError) as exc:
        print(f"oscdecay: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except QuadratureCeilingError as exc:
        print(f"oscdecay: {exc}", file=sys.stderr)
        return EXIT_CEILING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
