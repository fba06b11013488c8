"""Command-line entry point: exponent tables, audits and simulations as CSV/JSON.

Every output starts with its run manifest (command, parameters, seed,
version, timestamp).  In CSV it is a single ``# manifest: {...}`` comment
line; in JSON it is the single line holding the "manifest" key.  Everything
else is the data section, which is byte-identical across reruns with equal
parameters.

Exit codes: 0 all checks pass, 1 an audit row failed, 2 usage or domain
error, 3 infeasible request (enumeration ceiling, codebook cap).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import AwgnTypesError, CeilingError, DomainError, HypothesisViolation, InfeasibleError
from .exponents import (
    capacity,
    correct_decoding_exponent,
    error_exponent,
    parametric_curve,
    shannon_sphere_packing,
)
from .gauss_family import ChannelSpec
from .quantization import (
    SANDWICH_ATOL,
    check_region,
    pdf_to_type,
    random_family_instance,
    sandwich_batch,
)
from .simulator import CodebookRule, SimConfig, run, run_ensemble, stream
from .type_system import DEFAULT_CEILING, LatticeConfig, count_types_bounds

EXIT_OK, EXIT_AUDIT, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3
ERROR_TOL = 1e-6
_QUANT_STREAM = 4


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Machine format: 17 significant digits, round-trip exact."""
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "infeasible" if x > 0 else "-inf"
    return "%.17g" % x


def short(x: float) -> str:
    """Console format: 6 significant digits."""
    return repr(float(f"{x:.6g}"))


def _base(text: str) -> float:
    if text == "e":
        return math.e
    try:
        b = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid base {text!r}; use a number > 1 or 'e'")
    if not b > 1:
        raise argparse.ArgumentTypeError("base must exceed 1")
    return b


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def manifest(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "command")}
    return {
        "command": args.command,
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _emit(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_csv(args, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest(args), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
    _emit(args, buf.getvalue())


def write_json(args, data: dict) -> None:
    body = json.dumps(data, indent=2, sort_keys=True).replace("\n", "\n  ")
    text = "{\n" + '  "manifest": ' + json.dumps(manifest(args), sort_keys=True) + ",\n"
    text += '  "data": ' + body + "\n}\n"
    _emit(args, text)


def data_section(text: str) -> str:
    """Strip the manifest line from a CSV or JSON output."""
    return "".join(
        line for line in text.splitlines(keepends=True)
        if not line.startswith("# manifest: ") and not line.startswith('  "manifest": ')
    )


def _channel(args) -> ChannelSpec:
    return ChannelSpec.from_snr(args.snr, sigma2=args.sigma2, log_base=args.base)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- subcommands --------------------------------------------------------------------


def cmd_capacity(args) -> int:
    print(short(capacity(_channel(args))))
    return EXIT_OK


def cmd_exponent_curve(args) -> int:
    ch = _channel(args)
    if not args.rate_min <= args.rate_max:
        raise UsageError("--rate-min must not exceed --rate-max")
    rates = np.linspace(args.rate_min, args.rate_max, args.points) if args.points > 1 else np.array([args.rate_min])
    kinds = ["error", "correct"] if args.kind == "both" else [args.kind]
    rows, worst = [], 0.0
    for r in sorted(float(v) for v in rates):
        for kind in kinds:
            if kind == "error":
                p = error_exponent(ch, r)
                sf = shannon_sphere_packing(ch, r)
                worst = max(worst, abs(p.exponent - sf))
                rows.append([r, p.rho_star, p.exponent, sf, kind])
            else:
                p = correct_decoding_exponent(ch, r)
                rows.append([r, p.rho_star, p.exponent, "", kind])
    write_csv(args, ["rate", "rho_star", "exponent", "shannon_form", "kind"], rows)
    if "error" in kinds:
        _note(f"capacity {short(capacity(ch))}; max |exponent - shannon_form| {worst:.3g}")
        if worst >= ERROR_TOL:
            return EXIT_AUDIT
    return EXIT_OK


def cmd_parametric(args) -> int:
    ch = _channel(args)
    if not (args.rho_min > -1 and args.rho_min <= args.rho_max):
        raise UsageError("need -1 < --rho-min <= --rho-max")
    grid = np.linspace(args.rho_min, args.rho_max, args.points) if args.points > 1 else np.array([args.rho_min])
    rows = [[p.rho_star, p.rate, p.exponent, p.kind.value] for p in parametric_curve(ch, grid)]
    write_csv(args, ["rho", "rate", "exponent", "kind"], rows)
    return EXIT_OK


def cmd_types_audit(args) -> int:
    cfg = LatticeConfig(args.n, args.alpha, args.beta)
    rep = count_types_bounds(cfg, args.cx, args.cy, ceiling=args.ceiling)
    infeasible = any(s.startswith("enumeration infeasible") for s in rep.notes)
    tighter = next(s for s in rep.notes if s.startswith("tighter"))
    rows = []
    for name, exact, bound, ok in rep.rows():
        note = ""
        if exact is None:
            note = "enumeration infeasible; bounds-only report"
        elif name.startswith("log_num_types"):
            note = tighter
        if name == "type_class_sandwich":
            note = f"{exact} types checked in log space"
            exact, bound = None, None
        rows.append([name, exact, bound, ok, note])
    for s in rep.notes:
        if s.startswith("joint enumeration infeasible"):
            rows.append(["note", None, None, True, s])
    write_csv(args, ["name", "exact", "bound", "pass", "note"], rows)
    if infeasible:
        _note("enumeration infeasible; bounds-only report")
        return EXIT_INFEASIBLE
    return EXIT_OK if rep.all_pass else EXIT_AUDIT


def cmd_quant_audit(args) -> int:
    check_region(args.alpha, args.beta)
    cfg = LatticeConfig(args.n, args.alpha, args.beta)
    ch = ChannelSpec.from_snr(args.snr, log_base=args.base)
    rows, ok = [], True
    for k in range(args.instances):
        rng = stream(args.seed, _QUANT_STREAM, k)
        p_x, cond = random_family_instance(cfg, ch, rng)
        _, budget, report = pdf_to_type(p_x, cond, cfg, log_base=args.base)
        pre = budget.preconditions_met

        # sandwich on random pairs with y drawn from the channel
        x = rng.normal(0.0, math.sqrt(ch.s2), (args.pairs, cfg.n))
        y = x + rng.normal(0.0, math.sqrt(ch.sigma2), x.shape)
        good, e_real, e_q, below, above = sandwich_batch(x, y, cfg, ch)
        m_below = float(np.max(e_q - below - e_real))
        m_above = float(np.max(e_real - e_q - above))
        rows.append([k, "sandwich_below", m_below, 0.0, SANDWICH_ATOL, "<=", bool(m_below <= SANDWICH_ATOL), pre])
        rows.append([k, "sandwich_above", m_above, 0.0, SANDWICH_ATOL, "<=", bool(m_above <= SANDWICH_ATOL), pre])
        ok = ok and bool(np.all(good))
        for r in report.rows:
            rows.append([k, r.name, r.lhs, r.rhs, r.slack, r.relation, r.passed, pre])
            ok = ok and r.passed
        if not pre:
            _note(f"instance {k}: slack preconditions not met at n={cfg.n} (need n >= {budget.n_min:.3g})")
    write_csv(args, ["instance", "check", "lhs", "rhs", "slack", "relation", "pass", "precondition"], rows)
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_simulate(args) -> int:
    ch = _channel(args)
    rate = args.rate_frac_of_capacity * capacity(ch)
    cfg = SimConfig(args.n, rate, ch, CodebookRule(args.rule), args.trials, args.seed, args.workers)
    if args.method == "codebook":
        res = run(cfg)
    else:
        res = run_ensemble(cfg, tilt=None if args.no_tilt else "auto")
    e_sp = error_exponent(ch, rate).exponent
    e_c = correct_decoding_exponent(ch, rate).exponent
    data = {
        "config": {
            "n": cfg.n, "rate": rate, "snr": ch.snr, "sigma2": ch.sigma2, "rule": cfg.codebook_rule.value,
            "trials": cfg.trials, "seed": cfg.seed, "log_num_messages": cfg.log_num_messages,
        },
        "result": res.to_dict(),
        "analytic": {"capacity": capacity(ch), "sphere_packing_exponent": e_sp, "correct_decoding_exponent": e_c},
    }
    write_json(args, data)
    _note(
        f"p_err {short(res.p_err_hat)} p_correct {short(res.p_correct_hat)}; "
        f"E_sp {short(e_sp)} E_c {short(e_c)}"
    )
    return EXIT_OK


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="awgn-types", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def channel_flags(sp, snr_required=True):
        sp.add_argument("--snr", type=_positive, required=snr_required, default=None if snr_required else 1.0)
        sp.add_argument("--sigma2", type=_positive, default=1.0)
        sp.add_argument("--base", type=_base, default=2.0, help="log base, a number > 1 or 'e'")

    sp = sub.add_parser("capacity", help="print the channel capacity")
    channel_flags(sp)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("exponent-curve", help="error and correct-decoding exponents over a rate grid")
    channel_flags(sp)
    sp.add_argument("--rate-min", type=_positive, required=True)
    sp.add_argument("--rate-max", type=_positive, required=True)
    sp.add_argument("--points", type=_pos_int, default=50)
    sp.add_argument("--kind", choices=["error", "correct", "both"], default="both")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_exponent_curve)

    sp = sub.add_parser("parametric", help="(rate, exponent) pairs along the rho-family")
    channel_flags(sp)
    sp.add_argument("--rho-min", type=float, default=-0.9)
    sp.add_argument("--rho-max", type=float, default=10.0)
    sp.add_argument("--points", type=_pos_int, default=50)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_parametric)

    sp = sub.add_parser("types-audit", help="type counts against their bounds")
    sp.add_argument("--n", type=_pos_int, required=True)
    sp.add_argument("--alpha", type=float, default=0.3)
    sp.add_argument("--beta", type=float, default=0.3)
    sp.add_argument("--cx", type=_positive, default=0.5)
    sp.add_argument("--cy", type=_positive, default=0.25)
    sp.add_argument("--ceiling", type=_pos_int, default=DEFAULT_CEILING)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_types_audit)

    sp = sub.add_parser("quant-audit", help="quantization sandwich and pdf-to-type inequalities")
    sp.add_argument("--n", type=_pos_int, default=10_000)
    sp.add_argument("--alpha", type=float, default=0.2)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--snr", type=_positive, default=1.0)
    sp.add_argument("--base", type=_base, default=2.0)
    sp.add_argument("--instances", type=_pos_int, default=10)
    sp.add_argument("--pairs", type=_pos_int, default=100, help="random pairs per instance for the sandwich")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_quant_audit)

    sp = sub.add_parser("simulate", help="Monte Carlo error and correct-decoding probabilities")
    channel_flags(sp, snr_required=False)
    sp.add_argument("--n", type=_pos_int, required=True)
    sp.add_argument("--rate-frac-of-capacity", type=_positive, required=True)
    sp.add_argument("--trials", type=_pos_int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rule", choices=[r.value for r in CodebookRule], default="gaussian")
    sp.add_argument("--method", choices=["codebook", "ensemble"], default="codebook")
    sp.add_argument("--no-tilt", action="store_true", help="sample the channel directly in the ensemble method")
    sp.add_argument("--workers", type=_pos_int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CeilingError, InfeasibleError) as exc:
        _note(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except HypothesisViolation as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except (UsageError, DomainError) as exc:
        _note(f"usage error: {exc}")
        return EXIT_USAGE
    except AwgnTypesError as exc:
        _note(f"error: {exc}")
        return EXIT_AUDIT


if __name__ == "__main__":
    sys.exit(main())
