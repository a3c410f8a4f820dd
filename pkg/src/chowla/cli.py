"""Command line front end.

One subcommand per verification surface; every run writes its output file
atomically (temp file + rename) and prints a one-line summary.  With a fixed
configuration the output bytes are identical across runs and across thread
counts: workers only repartition the work, reductions merge in a fixed
order, and floats are printed in shortest round-trip form.

Exit codes: 0 success, 2 usage error, 1 computational error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Optional

from . import __version__, arith, family, lfun, model, stats

_DEF_THREADS = int(os.environ.get("CHOWLA_THREADS", "0")) or (os.cpu_count() or 1)


# ----------------------------------------------------------------------------
# serialization helpers
# ----------------------------------------------------------------------------


def _fmt(v) -> str:
    """Shortest round-trip decimal for floats, plain str otherwise."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _config_echo(args: argparse.Namespace) -> dict:
    # threads repartitions work without changing any emitted value, so it
    # stays out of the echo (outputs are byte-identical across thread counts)
    skip = {"func", "output", "figure", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".chowla-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_csv(path: str, args, header: list[str], rows: list[list]) -> None:
    lines = [f"# chowla {__version__}"]
    cfg = " ".join(f"{k}={_fmt(v)}" for k, v in _config_echo(args).items())
    lines.append(f"# config: {cfg}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _emit_json(path: str, args, payload: dict) -> None:
    doc = {"meta": {"artifact": f"chowla {__version__}", "config": _jsonable(_config_echo(args))}}
    doc.update(_jsonable(payload))
    _write_atomic(path, json.dumps(doc, indent=1) + "\n")


def _parse_complex_list(text: str) -> list[complex]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace("i", "j")
        if not tok:
            continue
        try:
            out.append(complex(tok))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad complex literal {tok!r} (use a+bi)") from exc
    if not out:
        raise argparse.ArgumentTypeError("empty z list")
    return out


def _parse_tau_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("tau grid must be A:B:STEP")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise argparse.ArgumentTypeError("need A <= B and STEP > 0")
        n = int(round((b - a) / step))
        grid = [a + k * step for k in range(n + 1) if a + k * step <= b + 1e-12]
        return grid
    return [float(t) for t in text.split(",") if t.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def _cmd_enumerate(args) -> str:
    rows = []
    if args.all:
        m_max = family._m_limit(args.x)
        mask = family.member_mask(m_max)
        header = ["m", "d", "is_member"]
        for m in range(1, m_max + 1):
            rows.append([m, 4 * m * m + 1, 1 if mask[m] else 0])
    elif args.values:
        header = ["m", "d", "L", "h"]
        for fd in family.enumerate_family(args.x):
            fac = arith.factor_chowla(fd.m).prime_powers
            res = lfun.class_number(fd.d, factors=fac)
            lv = lfun.l_value_rigorous(fd.d, 1e-6, factors=fac)
            rows.append([fd.m, fd.d, lv.value, res.h_true])
    else:
        header = ["m", "d"]
        for fd in family.enumerate_family(args.x):
            rows.append([fd.m, fd.d])
    out = args.output or "chowla_enumerate.csv"
    if args.format == "json":
        _emit_json(out, args, {"rows": [dict(zip(header, r)) for r in rows]})
    else:
        _emit_csv(out, args, header, rows)
    return f"enumerate x={args.x:g}: {len(rows)} rows -> {out}"


def _cmd_count_members(args) -> str:
    fc = family.count_and_compare(args.x)
    out = args.output or "chowla_family_count.json"
    _emit_json(
        out,
        args,
        {
            "x": fc.x,
            "count": fc.count,
            "predicted": fc.predicted,
            "density_constant": fc.density_constant,
            "uncertainty": fc.uncertainty,
        },
    )
    return f"family count x={args.x:g}: {fc.count} members (predicted {fc.predicted:.2f}) -> {out}"


def _cmd_lvalue(args) -> str:
    if args.mode == "rigorous":
        lv = lfun.l_value_rigorous(args.d, args.target)
    else:
        y = args.y if args.y is not None else max(2e4, math.log(args.d) ** 2)
        lv = lfun.l_value_fast(args.d, y)
    out = args.output or f"chowla_lvalue_{args.d}.json"
    _emit_json(out, args, {"d": lv.d, "value": lv.value, "abs_error_bound": lv.abs_error_bound, "mode": lv.mode})
    return f"L(1,chi_{args.d}) = {lv.value!r} (+-{lv.abs_error_bound:.2e}, {lv.mode}) -> {out}"


def _cmd_classnum(args) -> str:
    res = lfun.class_number(args.d)
    out = args.output or f"chowla_classnum_{args.d}.json"
    _emit_json(
        out,
        args,
        {
            "d": res.d,
            "h_true": res.h_true,
            "h_paper": res.h_paper,
            "margin": res.margin,
            "flags": list(res.flags),
        },
    )
    return f"h({args.d}) = {res.h_true} (paper normalization {res.h_paper}) -> {out}"


def _cmd_jacobsthal(args) -> str:
    tab = arith.prime_table(args.pmax)
    rows = []
    bad = 0
    for p in tab.primes.tolist():
        if p == 2 or p > args.pmax:
            continue
        s = arith.jacobsthal_sum(p)
        bad += s != -1
        rows.append([p, s])
    out = args.output or "chowla_jacobsthal.csv"
    if args.format == "json":
        _emit_json(out, args, {"rows": [{"p": p, "sum": s} for p, s in rows], "violations": bad})
    else:
        _emit_csv(out, args, ["p", "sum"], rows)
    return f"jacobsthal sums for {len(rows)} odd primes <= {args.pmax}: {bad} violations -> {out}"


def _cmd_char_average(args) -> str:
    emp, mod, err = stats.char_average(args.m, args.x)
    out = args.output or f"chowla_char_average_{args.m}.json"
    _emit_json(
        out,
        args,
        {"m": args.m, "x": args.x, "empirical": emp, "model": mod, "stderr": err},
    )
    return f"avg chi_d({args.m}) over x={args.x:g}: {emp:.6f} vs model {mod:.6f} (se {err:.2e}) -> {out}"


def _cmd_moments(args) -> str:
    rows = []
    for z in args.z:
        est = stats.moment_compare(z, args.x, y=args.y, threads=args.threads)
        rel = abs(est.empirical - est.model) / abs(est.model) if est.model != 0 else math.inf
        rows.append(
            {
                "z": z,
                "z_label": f"{z.real:g}" if z.imag == 0 else f"{z.real:g}+{z.imag:g}i",
                "empirical": est.empirical,
                "model": est.model,
                "rel_diff": rel,
                "n_discriminants": est.n_discriminants,
                "mode": est.mode,
                "empirical_err": est.empirical_err,
                "model_err": est.model_err,
            }
        )
    out = args.output or "chowla_moments.json"
    _emit_json(out, args, {"x": args.x, "rows": rows})
    if args.figure:
        from . import plotting

        plotting.render_moments(rows, args.figure)
    worst = max(r["rel_diff"] for r in rows)
    return f"moments at x={args.x:g}: {len(rows)} z values, worst rel diff {worst:.4f} -> {out}"


def _cmd_tail(args) -> str:
    rep = stats.tail_report(
        args.x, args.tau, y=args.y, threads=args.threads, mc_samples=args.samples, mc_seed=args.seed
    )
    header = [
        "tau",
        "empirical_upper",
        "empirical_lower",
        "model_phi",
        "model_psi",
        "model_source",
        "saddle_phi",
        "saddle_psi",
        "count_upper",
        "count_lower",
    ]
    rows = [
        [
            rep.tau_grid[i],
            rep.empirical_upper[i],
            rep.empirical_lower[i],
            rep.model_phi[i],
            rep.model_psi[i],
            rep.model_source[i],
            rep.saddle_phi[i],
            rep.saddle_psi[i],
            rep.counts_upper[i],
            rep.counts_lower[i],
        ]
        for i in range(len(rep.tau_grid))
    ]
    out = args.output or "chowla_tail.csv"
    if args.format == "json":
        _emit_json(out, args, {"x": rep.x, "n_discriminants": rep.n_discriminants, "rows": [dict(zip(header, r)) for r in rows]})
    else:
        _emit_csv(out, args, header, rows)
    if args.figure:
        from . import plotting

        plotting.render_tail(rep, args.figure)
    return f"tails at x={args.x:g} over {len(rows)} tau points ({rep.n_discriminants} fields) -> {out}"


def _cmd_saddle(args) -> str:
    rows = []
    for tau in args.tau:
        sad = model.solve_saddle(tau)
        rows.append(
            {
                "tau": sad.tau,
                "kappa": sad.kappa,
                "kappa_lower": sad.kappa_lower,
                "L_at": sad.L_at,
                "L2_at": sad.L2_at,
                "phi": sad.phi,
                "psi": sad.psi,
                "log_phi": sad.log_phi,
                "log_psi": sad.log_psi,
                "rel_error_indicator": sad.rel_error_indicator,
                "advisory": sad.advisory,
            }
        )
    out = args.output or "chowla_saddle.json"
    payload = {"C0": model.constants().C0, "rows": rows}
    if len(rows) == 1:
        payload.update(rows[0])
    _emit_json(out, args, payload)
    return f"saddle at {len(rows)} tau points -> {out}"


def _cmd_model_tail(args) -> str:
    rows = model.model_tail_rows(args.tau, args.samples, args.seed, p_mc=args.pmc, threads=args.threads)
    out = args.output or "chowla_model_tail.json"
    _emit_json(out, args, {"samples": args.samples, "seed": args.seed, "p_mc": args.pmc, "rows": rows})
    if args.figure:
        from . import plotting

        plotting.render_model_tail(rows, args.figure)
    return f"model tail: {args.samples} draws at {len(rows)} tau points -> {out}"


def _cmd_constants(args) -> str:
    c = model.constants()
    out = args.output or "chowla_constants.json"
    _emit_json(
        out,
        args,
        {
            "euler_gamma": c.euler_gamma,
            "zeta2": c.zeta2,
            "C0": c.C0,
            "catalan_G": c.catalan_G,
            "density_constant": c.density_constant,
            "C1": c.C1,
            "error_bounds": c.error_bounds,
        },
    )
    return f"constants (C0={c.C0:.6f}, G={c.catalan_G:.6f}) -> {out}"


def _cmd_count(args) -> str:
    rep = stats.class_count_report(
        args.H, normalization=args.normalization, threads=args.threads, trajectory=args.trajectory or ()
    )
    out = args.output or "chowla_count.json"
    _emit_json(
        out,
        args,
        {
            "H": rep.H,
            "normalization": rep.normalization,
            "total": rep.total,
            "predicted": rep.predicted,
            "ratio": rep.total / rep.predicted if rep.predicted else math.inf,
            "cutoff_d": rep.cutoff_d,
            "members_scanned": rep.members_scanned,
            "histogram": {str(k): v for k, v in rep.histogram.items()},
            "trajectory": rep.trajectory,
        },
    )
    if args.figure:
        from . import plotting

        plotting.render_count(rep, args.figure)
    return (
        f"count H={args.H} ({args.normalization}): total {rep.total} vs predicted "
        f"{rep.predicted:.1f} -> {out}"
    )


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="chowla",
        description="class numbers and L(1, chi_d) statistics for the fields Q(sqrt(4m^2+1))",
    )
    ap.add_argument("--version", action="version", version=f"chowla {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, figure=False, fmt="json"):
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--output", help="output path (default: chowla_<command>.<ext>)")
        p.add_argument("--threads", type=int, default=_DEF_THREADS, help="worker processes (env CHOWLA_THREADS)")
        p.add_argument("--seed", type=int, default=0)
        if figure:
            p.add_argument("--figure", help="also render a matplotlib figure to this path")

    p = sub.add_parser("enumerate", help="list family members d = 4m^2+1 <= x")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--all", action="store_true", help="emit every m with an is_member column")
    p.add_argument("--values", action="store_true", help="emit L and h per member (rigorous; slow)")
    common(p, fmt="csv")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("family-count", help="member count next to the sqrt(x)/2 density asymptotic")
    p.add_argument("--x", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_count_members)

    p = sub.add_parser("lvalue", help="L(1, chi_d) for one member")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mode", choices=("rigorous", "fast"), default="rigorous")
    p.add_argument("--target", type=float, default=1e-6, help="rigorous error budget")
    p.add_argument("--y", type=float, help="fast-mode smoothing length")
    common(p)
    p.set_defaults(func=_cmd_lvalue)

    p = sub.add_parser("classnum", help="class number of one member")
    p.add_argument("--d", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_classnum)

    p = sub.add_parser("jacobsthal", help="brute-force Jacobsthal sums for odd primes <= pmax")
    p.add_argument("--pmax", type=int, required=True)
    common(p, fmt="csv")
    p.set_defaults(func=_cmd_jacobsthal)

    p = sub.add_parser("char-average", help="average of chi_d(m) over the family vs E[X(m)]")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_char_average)

    p = sub.add_parser("moments", help="complex moments M_x(z) vs the model")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--z", type=_parse_complex_list, required=True, help="comma list, e.g. 1,2,-1,1+1i")
    p.add_argument("--y", type=float, help="smoothing length override")
    common(p, figure=True)
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("tail", help="family tail fractions vs the model on a tau grid")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--tau", type=_parse_tau_grid, required=True, help="A:B:STEP or comma list")
    p.add_argument("--y", type=float, help="smoothing length override")
    p.add_argument("--samples", type=int, default=2_000_000, help="Monte Carlo size for the tau < 2 model column")
    common(p, figure=True, fmt="csv")
    p.set_defaults(func=_cmd_tail)

    p = sub.add_parser("saddle", help="saddle point solution and tail estimates at tau")
    p.add_argument("--tau", type=_parse_tau_grid, required=True)
    common(p)
    p.set_defaults(func=_cmd_saddle)

    p = sub.add_parser("model-tail", help="Monte Carlo tails of L(1,X) vs the saddle point")
    p.add_argument("--tau", type=_parse_tau_grid, required=True)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--pmc", type=int, default=1000, help="random primes up to this bound")
    common(p, figure=True)
    p.set_defaults(func=_cmd_model_tail)

    p = sub.add_parser("constants", help="gamma, zeta(2), C0, Catalan G, density constant")
    common(p)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("count", help="class-number counting function F(h) up to H")
    p.add_argument("--H", type=int, required=True)
    p.add_argument("--normalization", choices=("paper", "classical"), default="paper")
    p.add_argument("--trajectory", type=_parse_int_list, help="extra H values for the ratio trajectory")
    common(p, figure=True)
    p.set_defaults(func=_cmd_count)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        summary = args.func(args)
    except (ValueError, OverflowError, ArithmeticError, RuntimeError) as exc:
        print(f"chowla: error: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
