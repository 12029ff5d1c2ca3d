"""Command line entry point: ``parageo {system,construct,verify,minima}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from fractions import Fraction
from typing import Optional

from . import __version__
from .construction import ConstructionError, ConstructionResult, GrowthSequence, run, stage_certificates
from .interval import DEFAULT_PRECISION, HPInterval, Indeterminate, log4, max_precision
from .minima import (
    DEFAULT_BUDGET,
    BodyFamily,
    BudgetExceeded,
    lambda_point,
    lemma4_sandwich,
    successive_minima_bruteforce,
    volume,
)
from .systems import MeshSequence, QuasiRegularSystem, has_mesh_at_least, is_regular, mesh_gap
from .validation import check_dimension, check_precision, to_fraction
from .verify import DEFAULT_SAMPLES, PASS, FAIL, MeshTooFine, build_construction, theorem_report

log = logging.getLogger(__name__)

SCHEMA = 1
SIG_DIGITS = 40

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CONSTRUCT = 3
EXIT_VERIFY_FAIL = 4
EXIT_INDETERMINATE = 5
EXIT_BUDGET = 6


class ConfigError(ValueError):
    pass


# serialization ---------------------------------------------------------------

_FLOOR = Context(prec=SIG_DIGITS, rounding=ROUND_FLOOR, Emax=10**9, Emin=-(10**9))
_CEIL = Context(prec=SIG_DIGITS, rounding=ROUND_CEILING, Emax=10**9, Emin=-(10**9))


def _decimal(q: Fraction, ctx: Context) -> str:
    return str(ctx.divide(Decimal(q.numerator), Decimal(q.denominator)))


def interval_record(x) -> list[str]:
    """[lo, hi] as decimal strings rounded outward to 40 significant digits.

    ``x`` is an HPInterval or a pair of exact rationals; a pair read back by
    ``parse_endpoints`` serializes to the same strings.
    """
    lo, hi = (x.lower_fraction(), x.upper_fraction()) if isinstance(x, HPInterval) else x
    return [_decimal(Fraction(lo), _FLOOR), _decimal(Fraction(hi), _CEIL)]


def parse_endpoints(rec) -> tuple[Fraction, Fraction]:
    return Fraction(rec[0]), Fraction(rec[1])


def parse_interval(rec, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """Enclosing interval of a serialized [lo, hi] pair."""
    lo, hi = parse_endpoints(rec)
    return HPInterval(lo, hi, prec=prec)


def rational_record(q) -> str:
    return str(Fraction(q))


def vector_record(v) -> list[str]:
    return [str(int(c)) for c in v]


# configuration ---------------------------------------------------------------


@dataclass
class RunConfig:
    n: int
    sequence: dict
    precision_bits: int = DEFAULT_PRECISION
    stages: Optional[int] = None
    grid: int = DEFAULT_SAMPLES
    budget: int = DEFAULT_BUDGET
    mesh: MeshSequence = field(init=False, repr=False)

    def __post_init__(self):
        self.n = check_dimension(self.n)
        self.precision_bits = check_precision(self.precision_bits, max_precision())
        if self.stages is not None and (not isinstance(self.stages, int) or self.stages < self.n):
            raise ConfigError(f"stages must be an integer >= n = {self.n}")
        if not isinstance(self.grid, int) or self.grid < 1:
            raise ConfigError("grid must be a positive integer")
        if not isinstance(self.budget, int) or self.budget < 1:
            raise ConfigError("budget must be a positive integer")
        self.mesh = _parse_sequence(self.sequence)
        if len(self.mesh) < self.n:
            raise ConfigError(f"sequence has {len(self.mesh)} values, need at least n = {self.n}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"n", "sequence", "precision_bits", "stages", "grid", "budget"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "n" not in d or "sequence" not in d:
            raise ConfigError("config needs 'n' and 'sequence'")
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"n": self.n, "sequence": _sequence_record(self.sequence), "precision_bits": self.precision_bits}
        if self.stages is not None:
            out["stages"] = self.stages
        out["grid"] = self.grid
        out["budget"] = self.budget
        return out

    def system(self) -> QuasiRegularSystem:
        return QuasiRegularSystem(self.n, self.mesh)


def _parse_sequence(seq) -> MeshSequence:
    if not isinstance(seq, dict) or len(seq) != 1:
        raise ConfigError("sequence must be {'explicit': [...]} or {'regular': {...}}")
    (kind, body), = seq.items()
    if kind == "explicit":
        if not isinstance(body, list):
            raise ConfigError("explicit sequence must be a list of decimal strings")
        return MeshSequence.explicit(body)
    if kind == "regular":
        try:
            x1, rho, count = to_fraction(body["x1"]), to_fraction(body["rho"]), body["count"]
        except KeyError as exc:
            raise ConfigError(f"regular sequence is missing {exc}") from exc
        if not isinstance(count, int) or count < 1:
            raise ConfigError("regular count must be a positive integer")
        if rho <= 1:
            raise ConfigError("rho must exceed 1")
        return MeshSequence.regular(x1, rho, count)
    raise ConfigError(f"unknown sequence kind {kind!r}")


def _sequence_record(seq: dict) -> dict:
    (kind, body), = seq.items()
    if kind == "explicit":
        return {"explicit": [rational_record(to_fraction(v)) for v in body]}
    return {"regular": {"x1": rational_record(to_fraction(body["x1"])), "rho": rational_record(to_fraction(body["rho"])), "count": body["count"]}}


def load_config(path: str, args: argparse.Namespace) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("precision_bits", "stages", "grid", "budget"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    return RunConfig.from_dict(d)


# output ----------------------------------------------------------------------


def atomic_write(path: Optional[str], text: str) -> None:
    """Write to ``path`` through a temporary file and a rename; stdout if None."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".parageo-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_record(command: str, inputs: dict, results: dict) -> str:
    rec = {"schema": SCHEMA, "command": command, "inputs": inputs, "results": results}
    return json.dumps(rec, indent=2) + "\n"


# commands --------------------------------------------------------------------


def graph_csv(sys_: QuasiRegularSystem) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["segment_id", "component_index", "q_start", "y_start", "q_end", "y_end", "slope"])
    for k, seg in enumerate(sys_.combined_graph(), start=1):
        w.writerow([k, seg.component_index, seg.q_start, seg.y_start, seg.q_end, seg.y_end, seg.slope])
    return buf.getvalue()


def system_summary(sys_: QuasiRegularSystem, prec: int) -> dict:
    rho = is_regular(sys_.mesh) if len(sys_.mesh) >= 2 else None
    ok = has_mesh_at_least(sys_.mesh, prec=prec) if len(sys_.mesh) >= 2 else None
    return {
        "n": sys_.n,
        "mesh_gap": rational_record(mesh_gap(sys_.mesh)) if len(sys_.mesh) >= 2 else None,
        "log4": interval_record(log4(prec)),
        "mesh_at_least_log4": ok,
        "rho": rational_record(rho) if rho is not None else None,
        "breakpoints": [rational_record(q) for q in sys_.breakpoints],
        "intervals": sys_.n_intervals,
    }


def cmd_system(cfg: RunConfig, args) -> int:
    sys_ = cfg.system()
    atomic_write(args.out, graph_csv(sys_))
    summary = dump_record("system", cfg.to_dict(), system_summary(sys_, cfg.precision_bits))
    if args.summary:
        atomic_write(args.summary, summary)
    else:
        sys.stderr.write(summary)
    return EXIT_OK


def _require_mesh(sys_: QuasiRegularSystem, prec: int) -> None:
    if has_mesh_at_least(sys_.mesh, prec=prec) is not True:
        raise MeshTooFine(
            f"mesh gap {mesh_gap(sys_.mesh)} is not certified >= log 4; "
            "the realization is only guaranteed for systems with mesh at least log 4"
        )


def construction_record(result: ConstructionResult) -> dict:
    certs = stage_certificates(result)
    proxy = result.direction()
    return {
        "points": [vector_record(p) for p in result.points],
        "windows": [
            {
                "stage": st.stage,
                "normal": vector_record(st.normal),
                "height_sq": str(st.height_sq),
                "tail_radius": interval_record(st.tail_radius),
            }
            for st in result.states
        ],
        "roundings": [
            {
                "stage": r.stage,
                "z": vector_record(r.z),
                "coefficients": [interval_record(c) for c in r.coefficients],
                "rounded": vector_record(r.rounded),
                "epsilons": [interval_record(e) for e in r.epsilons],
                "precision": r.precision,
            }
            for r in result.roundings
        ],
        "certificates": certs,
        "all_certified": all(v is True for c in certs for k, v in c.items() if k != "index"),
        "direction": {"normal": vector_record(proxy.normal), "tail_radius": interval_record(proxy.tail), "stage": proxy.stage},
    }


def cmd_construct(cfg: RunConfig, args) -> int:
    sys_ = cfg.system()
    _require_mesh(sys_, cfg.precision_bits)
    M = cfg.stages if cfg.stages is not None else len(cfg.mesh)
    result = run(cfg.n, GrowthSequence.from_mesh(cfg.mesh), M, cfg.precision_bits)
    rec = construction_record(result)
    atomic_write(args.out, dump_record("construct", cfg.to_dict(), rec))
    return EXIT_OK if rec["all_certified"] else EXIT_CONSTRUCT


def report_record(report) -> dict:
    return {
        "status": report.status,
        "covered": [rational_record(q) for q in report.covered],
        "bound": report.bound,
        "certified_upper": _decimal(report.certified_upper(), _CEIL),
        "leg1_max": _decimal(report.max_leg1, _CEIL),
        "leg2_max": _decimal(report.max_leg2, _CEIL),
        "leg1_ceiling": interval_record(report.leg1_bound()),
        "leg2_ceiling": interval_record(report.leg2_bound()),
        "analytic_ceiling": interval_record(report.analytic_ceiling()),
        "below_analytic_ceiling": report.below_analytic_ceiling(),
        "max_deviation": interval_record(report.max_deviation),
        "grid_spacing": rational_record(report.h),
        "sampling_error": rational_record(report.sampling_error),
        "grid_upper": _decimal(report.grid_upper(), _CEIL),
        "max_residual": interval_record(report.max_residual),
        "residuals_ok": report.residuals_ok(),
        "stages": report.stages,
        "direction_stage": report.direction_stage,
        "precision_bits": report.precision_bits,
        "grid": [
            {"interval": r.interval, "q": rational_record(r.q), "P": [rational_record(p) for p in r.P],
             "deviation": interval_record(r.deviation), "slack": interval_record(r.slack)}
            for r in report.rows
        ],
        "notes": report.notes,
    }


def cmd_verify(cfg: RunConfig, args) -> int:
    sys_ = cfg.system()
    _require_mesh(sys_, cfg.precision_bits)
    result = build_construction(sys_, cfg.precision_bits, cfg.stages)
    report = theorem_report(sys_, result, samples=cfg.grid, precision_bits=cfg.precision_bits)
    atomic_write(args.out, dump_record("verify", cfg.to_dict(), report_record(report)))
    sys.stderr.write(
        f"{report.status}: sup ||P - L_u|| <= {float(report.certified_upper()):.6g} "
        f"(bound {report.bound}, ceiling {float(report.analytic_ceiling().mid):.6g}) "
        f"over q in [{report.covered[0]}, {report.covered[1]}]\n"
    )
    if report.status == PASS:
        return EXIT_OK
    return EXIT_VERIFY_FAIL if report.status == FAIL else EXIT_INDETERMINATE


def _parse_u(text: str) -> list[Fraction]:
    try:
        return [to_fraction(c) for c in text.split(",")]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"--u: {exc}") from exc


def cmd_minima(args) -> int:
    if args.Q is None:
        raise ConfigError("minima needs --Q")
    Q = to_fraction(args.Q)
    if Q < 1:
        raise ConfigError("Q must be at least 1")
    prec = check_precision(args.precision_bits or DEFAULT_PRECISION, max_precision())
    budget = args.budget or DEFAULT_BUDGET
    inputs = {"Q": rational_record(Q), "mode": args.mode, "precision_bits": prec, "budget": budget}
    if args.u is not None:
        u = _parse_u(args.u)
        body = BodyFamily.from_direction(u)
        inputs["u"] = [rational_record(c) for c in u]
        window = [tuple(int(k == j) for k in range(body.n)) for j in range(body.n)]
    elif args.config:
        cfg = load_config(args.config, args)
        sys_ = cfg.system()
        _require_mesh(sys_, cfg.precision_bits)
        result = build_construction(sys_, cfg.precision_bits, cfg.stages)
        body = BodyFamily.from_proxy(result.direction())
        inputs["config"] = cfg.to_dict()
        window = _window_for(result, sys_, Q, prec)
    else:
        raise ConfigError("minima needs --u or --config")
    results: dict = {"n": body.n, "normal": vector_record(body.normal)}
    if args.mode == "exact":
        prof = successive_minima_bruteforce(body, Q, budget, prec)
        results["minima"] = [interval_record(v) for v in prof.values]
        results["witnesses"] = [vector_record(w) for w in prof.witnesses]
        if prof.values_sq is not None:
            results["minima_sq"] = [rational_record(v) for v in prof.values_sq]
    else:
        lams = [lambda_point(x, body, Q, prec) for x in window]
        vol, _ = volume(body, Q, prec=prec)
        sw = lemma4_sandwich(lams, vol)
        results["window"] = [vector_record(x) for x in window]
        results["sorted_point_values"] = [interval_record(v) for v in sw.sorted_values]
        results["slack_factor"] = interval_record(sw.factor)
        results["log_slack"] = interval_record(sw.factor.log()) if sw.factor.lower_fraction() > 0 else None
        results["volume"] = interval_record(vol)
    atomic_write(args.out, dump_record("minima", inputs, results))
    return EXIT_OK


def _window_for(result: ConstructionResult, sys_: QuasiRegularSystem, Q: Fraction, prec: int):
    """Window x_i..x_{i+n-1} of the interval containing log Q (clamped to the domain)."""
    lq = HPInterval(Q, prec=prec).log()
    q = (lq.lower_fraction() + lq.upper_fraction()) / 2
    lo, hi = sys_.domain
    i = sys_.interval_index(min(max(q, lo), hi))
    return [result.point(j) for j in range(i, i + sys_.n)]


# entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parageo", description="Realize quasi-regular systems by explicit integer points.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON run configuration")
        sp.add_argument("--out", help="output path (stdout if omitted)")
        sp.add_argument("--precision-bits", dest="precision_bits", type=int)
        sp.add_argument("--stages", type=int)
        sp.add_argument("--grid", type=int, help="uniform samples per interval")
        sp.add_argument("--budget", type=int, help="enumeration budget in lattice points")

    sp = sub.add_parser("system", help="combined graph CSV and system summary")
    common(sp)
    sp.add_argument("--summary", help="write the JSON summary here instead of stderr")
    common(sub.add_parser("construct", help="build the integer points and their certificates"))
    common(sub.add_parser("verify", help="certify the deviation bound over the covered range"))
    sp = sub.add_parser("minima", help="successive minima of C_u(Q)")
    common(sp, config_required=False)
    sp.add_argument("--mode", choices=("exact", "certificate"), default="exact")
    sp.add_argument("--u", help="direction as comma separated decimals")
    sp.add_argument("--Q", help="body parameter Q >= 1 as a decimal")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "minima":
            return cmd_minima(args)
        cfg = load_config(args.config, args)
        return {"system": cmd_system, "construct": cmd_construct, "verify": cmd_verify}[args.command](cfg, args)
    except BudgetExceeded as exc:
        print(f"parageo: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Indeterminate as exc:
        print(f"parageo: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (MeshTooFine, ConstructionError) as exc:
        print(f"parageo: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCT
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        print(f"parageo: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
