from __future__ import annotations
import argparse, json, sys
from pathlib import Path

import numpy as np

from core.errors import FractalBenchError, InvalidSpec, MalformedInput
from core.grid import face_slice
from core.logging_io import (RunLog, RunManifest, manifest_path, read_histogram_csv, read_intervals_csv,
                             read_pgm, read_points_csv, write_histogram_csv, write_intervals_csv,
                             write_pgm, write_points_csv, write_rows)
from core.plan_runner import run_plan
from core.rationals import fmt12, format_rational, parse_rational
from fractals import cantor_function as cf
from fractals import cantor_sets as cs
from fractals import percolation as perc
from fractals import sierpinski as sp
from analysis import estimators as est
from analysis import multifractal as mf
from analysis import structure as st
from analysis.acceptance import CHECKS

DEFAULT_PLAN = Path(__file__).resolve().parent / "plans" / "acceptance.yaml"


def _arg_type(fn, what: str):
    def conv(text):
        try:
            return fn(text)
        except (FractalBenchError, ValueError) as e:
            raise argparse.ArgumentTypeError(f"bad {what} {text!r}: {e}")
    conv.__name__ = what
    return conv


rational = _arg_type(parse_rational, "rational")
variant = _arg_type(cs.parse_variant, "variant")
rule = _arg_type(perc.parse_rule, "rule")


def _carpet(text: str) -> sp.CarpetSpec:
    if text == "standard":
        return sp.STANDARD_CARPET
    if text == "dust":
        return sp.CANTOR_DUST
    if text.startswith("ring:"):
        return sp.ring_carpet(int(text.split(":", 1)[1]))
    raise InvalidSpec("expected standard, dust or ring:<b>")


carpet = _arg_type(_carpet, "carpet")


def _slice(text: str) -> tuple[int, int]:
    axis, _, index = text.partition(":")
    if not index:
        raise InvalidSpec("expected <axis>:<k>")
    if int(axis) not in (0, 1, 2):
        raise InvalidSpec(f"axis must be 0, 1 or 2, got {axis}")
    return int(axis), int(index)


face = _arg_type(_slice, "slice")


class Output:
    """Writes the command's file (if --out) and its manifest; prints otherwise."""

    def __init__(self, args, argv: list[str]):
        self.args = args
        self.manifest = RunManifest(argv=list(argv), seed=args.seed)

    @property
    def path(self):
        return self.args.out

    def fmt(self, default: str, allowed: tuple) -> str:
        fmt = self.args.format or default
        if fmt not in allowed:
            raise _usage(f"--format {fmt} not available here (use {', '.join(allowed)})")
        return fmt

    def done(self) -> None:
        if self.path:
            self.manifest.add_output(self.path)
            self.manifest.write(manifest_path(self.path))
            print(f"wrote {self.path}")

    def table(self, rows: list[dict], columns: tuple) -> None:
        if self.path:
            write_rows(rows, columns, self.path)
            self.done()
            return
        print(",".join(columns))
        for r in rows:
            print(",".join(_cell(r.get(c)) for c in columns))

    def json(self, obj: dict) -> None:
        text = json.dumps(_round12(obj), indent=2, default=_json_default)
        if self.path:
            with open(self.path, "w", encoding="utf-8") as f:
                f.write(text + "\n")
            self.done()
        else:
            print(text)


def _usage(msg: str):
    print(f"usage error: {msg}", file=sys.stderr)
    return SystemExit(2)


def _cell(v) -> str:
    if isinstance(v, float):
        return fmt12(v)
    return "" if v is None else str(v)


def _round12(v):
    """Floats to 12 significant digits, recursively."""
    if isinstance(v, (float, np.floating)):
        return float(fmt12(v))
    if isinstance(v, dict):
        return {k: _round12(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round12(x) for x in v]
    return v


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


def _need_out(out: Output, what: str) -> None:
    if not out.path:
        raise _usage(f"{what} output needs --out")


# --- gen ---

def cmd_gen(args, out: Output) -> None:
    if args.what == "cantor":
        s = cs.generate(args.variant, args.n)
        fmt = out.fmt("csv", ("csv", "json"))
        if fmt == "json":
            out.json({"variant": str(args.variant), "n": args.n, "length": format_rational(s.total_length()),
                      "intervals": [[format_rational(a), format_rational(b)] for a, b in s.pairs()]})
        elif out.path and not out.path.lower().endswith((".parquet", ".pq")):
            write_intervals_csv(s.pairs(), out.path)
            out.done()
        else:
            out.table([{"lo_num": a.numerator, "lo_den": a.denominator, "hi_num": b.numerator,
                        "hi_den": b.denominator} for a, b in s.pairs()], ("lo_num", "lo_den", "hi_num", "hi_den"))
        return
    if args.what == "triangle":
        if args.method == "chaos":
            pts = sp.chaos_game(sp.TRIANGLE, args.points, transient=args.transient, seed=args.seed)
            out.fmt("csv", ("csv",))
            _need_out(out, "point")
            write_points_csv(pts, out.path)
            out.done()
            return
        if out.fmt("pgm", ("pgm", "csv")) == "csv":
            tris = sp.triangle_subdivide(args.n).reshape(-1, 6)
            cols = ("x0", "y0", "x1", "y1", "x2", "y2")
            out.table([dict(zip(cols, map(float, t))) for t in tris], cols)
            return
        _need_out(out, "pgm")
        grid = (sp.triangle_raster(args.n) if args.method == "subdivide"
                else sp.ifs_render(sp.sierpinski_ifs(), args.n, 1 << args.n))
        write_pgm(grid, out.path)
        out.done()
        return
    if args.what == "carpet":
        if args.base is not None and args.base != args.carpet.base:
            raise _usage(f"--base {args.base} does not match the carpet generator (base {args.carpet.base})")
        out.fmt("pgm", ("pgm",))
        _need_out(out, "pgm")
        write_pgm(sp.carpet_generate(args.carpet, args.n), out.path)
        out.done()
        return
    if args.what == "sponge":
        sponge = sp.sponge_generate(args.n)
        if out.fmt("pgm" if args.slice else "csv", ("csv", "pgm")) == "pgm":
            _need_out(out, "pgm")
            axis, index = args.slice or (args.axis, args.index)
            write_pgm(face_slice(sponge, axis, index), out.path)
            out.done()
            return
        z, y, x = np.nonzero(sponge.cells)
        out.table([{"x": int(a), "y": int(b), "z": int(c)} for a, b, c in zip(x, y, z)], ("x", "y", "z"))


# --- cantor-fn ---

def cmd_cantor_fn(args, out: Output) -> None:
    if args.action == "eval":
        v = cf.evaluate(args.x, args.depth)
        rec = {"x": format_rational(args.x), "value": format_rational(v.value), "truncated": v.truncated,
               "bound": format_rational(v.bound)}
        if out.fmt("json", ("json", "csv")) == "json":
            out.json(rec)
        else:
            out.table([rec], ("x", "value", "truncated", "bound"))
        return
    if args.action == "plateau":
        iv = cf.plateau_of(args.m)
        out.json({"m": format_rational(args.m), "lo": format_rational(iv.lo), "hi": format_rational(iv.hi),
                  "width": format_rational(iv.length)})
        return
    stair = cf.staircase_polyline(args.n)
    print(f"length={fmt12(stair.length)} closed_form={fmt12(cf.staircase_length(args.n))}")
    out.fmt("csv", ("csv",))
    xg = np.gcd(stair.x_num, stair.x_den)
    yg = np.gcd(stair.y_num, stair.y_den)
    cols = {"x_num": stair.x_num // xg, "x_den": stair.x_den // xg, "y_num": stair.y_num // yg,
            "y_den": stair.y_den // yg}
    cols = {k: v.tolist() for k, v in cols.items()}
    out.table([dict(zip(cols, row)) for row in zip(*cols.values())], tuple(cols))


# --- mfa ---

def cmd_mfa(args, out: Output) -> None:
    m = mf.TwoScaleMeasure(float(args.l1), float(args.l2), float(args.p1), float(args.p2))
    points = mf.spectrum(m, mf.q_grid(args.q_min, args.q_max, args.q_step))
    print(f"D0={fmt12(mf.support_dimension(m))} D1={fmt12(mf.information_dimension(m))} "
          f"alpha_min={fmt12(mf.alpha_min(m))} alpha_max={fmt12(mf.alpha_max(m))}")
    out.fmt("csv", ("csv",))
    out.table([{"q": p.q, "tau": p.tau, "Dq": p.Dq, "alpha": p.alpha, "f": p.f} for p in points],
              ("q", "tau", "Dq", "alpha", "f"))


# --- dim ---

def _load_data(path: str, base: int, resolution_exp: int):
    """PGM raster, x,y points or an interval list (rasterised at base^k)."""
    if path.lower().endswith(".pgm"):
        return read_pgm(path, base)
    try:
        with open(path, "r") as f:
            header = f.readline().strip().split(",")
    except OSError as e:
        raise MalformedInput(f"cannot read {path}: {e}")
    if "lo_num" in header:
        s = cs.IntervalSet.from_pairs(read_intervals_csv(path))
        return cs.rasterize(s, base ** resolution_exp)
    return read_points_csv(path)


def cmd_dim(args, out: Output) -> None:
    k1, k2 = est.parse_scale_range(args.scales)
    scales = est.scale_list(args.base, k1, k2)
    data = _load_data(args.input, args.base, k2)
    log = RunLog.open(args.debug_log, f"dim.{args.method}")
    try:
        if args.method == "renyi":
            qs = mf.q_grid(args.q_min, args.q_max, args.q_step)
            rows = [{"q": q, "Dq": d, "r2": r2} for q, d, r2 in est.renyi_spectrum(data, qs, scales)]
            log.log("result", rows)
            out.fmt("csv", ("csv",))
            out.table(rows, ("q", "Dq", "r2"))
            return
        if args.method == "corr":
            pts = data if isinstance(data, np.ndarray) and data.dtype != bool else None
            if pts is None:
                raise InvalidSpec("correlation dimension needs a point file")
            fit = est.correlation_dimension(pts, scales)
            c = est.correlation_integral(pts, scales)
            rows = [{"delta": d, "value": v} for d, v in zip(scales, c)]
        else:
            series = est.box_count(data, scales)
            fit = est.fit_dimension(series) if args.method == "box" else est.information_dimension(series)
            if series.sampled:
                print("note: 1/delta is not an integer at some scales; counts are sampled")
            rows = [{"delta": d, "value": n} for d, n in zip(series.scales, series.counts)]
        log.log("result", {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2})
        print(f"slope={fmt12(fit.slope)} intercept={fmt12(fit.intercept)} r2={fmt12(fit.r2)} "
              f"scales={fit.points}")
        if out.path:
            out.fmt("csv", ("csv",))
            out.table(rows, ("delta", "value"))
    finally:
        log.close()


# --- measure ---

def cmd_measure(args, out: Output) -> None:
    if args.what == "lacuna1d":
        s = cs.IntervalSet.from_pairs(read_intervals_csv(args.input))
        gap = st.gap_lacunarity_1d(s)
        out.json({"lacunarity": format_rational(gap), "value": float(gap)})
    elif args.what == "lacuna2d":
        out.json({"lacunarity": st.hole_lacunarity_2d(read_pgm(args.input))})
    elif args.what == "variance":
        v = st.variance_lacunarity(read_pgm(args.input, args.base), args.L)
        out.json({"variance": v.value, "exponent": v.exponent, "sizes": list(v.sizes)})
    elif args.what == "hist":
        h = st.interval_histogram(cs.IntervalSet.from_pairs(read_intervals_csv(args.input)))
        _need_out(out, "histogram")
        write_histogram_csv(h.bins, out.path)
        out.done()
    else:
        a, b = read_histogram_csv(args.a), read_histogram_csv(args.b)
        out.json({"kl": st.kl_order(a, b)})


# --- perc ---

def cmd_perc(args, out: Output) -> None:
    log = RunLog.open(args.debug_log, f"perc.{args.action}")
    try:
        if args.action == "rg":
            source = args.source or ("published" if args.rule is perc.ConnectivityRule.HYBRID else "enumerated")
            out.json(perc.rg_report(args.rule, source))
        elif args.action == "mc":
            f, err = perc.mc_spanning(args.gen, args.rule, float(args.p), args.trials, args.seed, log)
            out.json({"rule": args.rule.value, "gen": args.gen, "p": float(args.p), "trials": args.trials,
                      "seed": args.seed, "fraction": f, "stderr": err})
        else:
            th = perc.mc_threshold(args.gen, args.rule, args.trials, args.seed, log)
            if not th.monotone:
                print("warning: spanning fractions were not monotone in p")
            out.json({"rule": args.rule.value, "gen": args.gen, "trials": args.trials, "seed": args.seed,
                      "p": th.p, "uncertainty": th.uncertainty, "iterations": th.iterations,
                      "monotone": th.monotone,
                      "history": [{"p": p, "fraction": f, "stderr": e} for p, f, e in th.history]})
    finally:
        log.close()


def cmd_reproduce(args, out: Output) -> None:
    log = RunLog.open(args.debug_log, "reproduce")
    try:
        rows = run_plan(args.plan, CHECKS, args.out, args.filter, log)
    finally:
        log.close()
    if args.out:
        out.done()
    if not rows:
        raise SystemExit(f"no criteria matched filter {args.filter!r}")
    failed = [r["id"] for r in rows if not r["passed"]]
    if failed:
        raise SystemExit(f"failed: {', '.join(failed)}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="SplitMix64 seed (default 0)")
    common.add_argument("--out", help="Output file; a <out>.manifest.json is written beside it")
    common.add_argument("--format", choices=("csv", "json", "pgm"), help="Output format where several apply")
    common.add_argument("--debug-log", help="Path to write an NDJSON trace")

    p = argparse.ArgumentParser(prog="fractalbench")
    sub = p.add_subparsers(dest="cmd", required=True)

    genp = sub.add_parser("gen", help="Generate pre-fractals")
    gsub = genp.add_subparsers(dest="what", required=True)
    g = gsub.add_parser("cantor", parents=[common], help="Interval list of a Cantor variant")
    g.add_argument("--variant", type=variant, default=cs.TRIADIC,
                   help="triadic | middle:<b> | digits:<b>:<kept> | twoscale:<l1>:<l2> | fat")
    g.add_argument("--n", type=int, required=True)
    g = gsub.add_parser("triangle", parents=[common], help="Sierpinski triangle raster or chaos-game points")
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--method", choices=("subdivide", "ifs", "chaos"), default="subdivide")
    g.add_argument("--points", type=int, default=100000)
    g.add_argument("--transient", type=int, default=64)
    g = gsub.add_parser("carpet", parents=[common], help="Carpet raster (PGM)")
    g.add_argument("--gen", "--n", dest="n", type=int, required=True)
    g.add_argument("--base", type=int, help="Generator side; must match --carpet")
    g.add_argument("--carpet", type=carpet, default=sp.STANDARD_CARPET, help="standard | dust | ring:<b>")
    g = gsub.add_parser("sponge", parents=[common], help="Menger sponge voxels (CSV) or a face slice (PGM)")
    g.add_argument("--gen", "--n", dest="n", type=int, required=True)
    g.add_argument("--slice", type=face, help="<axis>:<k> face slice written as PGM")
    g.add_argument("--axis", type=int, default=0)
    g.add_argument("--index", type=int, default=0)

    cfp = sub.add_parser("cantor-fn", help="Cantor function")
    csub = cfp.add_subparsers(dest="action", required=True)
    c = csub.add_parser("eval", parents=[common])
    c.add_argument("--x", type=rational, required=True)
    c.add_argument("--depth", type=int, default=64)
    c = csub.add_parser("plateau", parents=[common])
    c.add_argument("--m", type=rational, required=True)
    c = csub.add_parser("staircase", parents=[common])
    c.add_argument("--n", type=int, required=True)

    mfp = sub.add_parser("mfa", help="Two-scale multifractal spectrum")
    msub = mfp.add_subparsers(dest="action", required=True)
    m = msub.add_parser("spectrum", parents=[common])
    for name in ("--l1", "--l2", "--p1", "--p2"):
        m.add_argument(name, type=rational, required=True)
    m.add_argument("--q-min", type=float, default=-10.0)
    m.add_argument("--q-max", type=float, default=10.0)
    m.add_argument("--q-step", type=float, default=0.5)

    dimp = sub.add_parser("dim", help="Empirical dimension estimators")
    dsub = dimp.add_subparsers(dest="method", required=True)
    for name in ("box", "info", "corr", "renyi"):
        d = dsub.add_parser(name, parents=[common])
        d.add_argument("--in", dest="input", required=True, help="PGM raster, x,y point CSV or interval CSV")
        d.add_argument("--scales", default="1..6", help="k1..k2 for delta = base^-k")
        d.add_argument("--base", type=int, default=2)
        if name == "renyi":
            d.add_argument("--q-min", type=float, default=-5.0)
            d.add_argument("--q-max", type=float, default=5.0)
            d.add_argument("--q-step", type=float, default=1.0)

    mp = sub.add_parser("measure", help="Lacunarity and order measures")
    ssub = mp.add_subparsers(dest="what", required=True)
    for name in ("lacuna1d", "lacuna2d", "variance", "hist"):
        s = ssub.add_parser(name, parents=[common])
        s.add_argument("--in", dest="input", required=True)
        if name == "variance":
            s.add_argument("--L", type=int, required=True)
            s.add_argument("--base", type=int, default=3)
    s = ssub.add_parser("kl", parents=[common])
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)

    pp = sub.add_parser("perc", help="Carpet percolation")
    psub = pp.add_subparsers(dest="action", required=True)
    for name in ("rg", "mc", "threshold"):
        q = psub.add_parser(name, parents=[common])
        q.add_argument("--rule", type=rule, default=perc.ConnectivityRule.HYBRID.value)
        if name == "rg":
            q.add_argument("--source", choices=("enumerated", "published"),
                           help="Polynomial source (default: published for hybrid, enumerated for edge)")
            continue
        q.add_argument("--gen", type=int, default=4)
        q.add_argument("--trials", type=int, default=1000)
        if name == "mc":
            q.add_argument("--p", type=rational, required=True)

    rp = sub.add_parser("reproduce", parents=[common], help="Run the acceptance plan")
    rp.add_argument("--plan", default=str(DEFAULT_PLAN))
    rp.add_argument("--filter", help="Run only criteria of this group")
    return p


COMMANDS = {"gen": cmd_gen, "cantor-fn": cmd_cantor_fn, "mfa": cmd_mfa, "dim": cmd_dim,
            "measure": cmd_measure, "perc": cmd_perc, "reproduce": cmd_reproduce}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.cmd](args, Output(args, argv))
    except FractalBenchError as e:
        raise SystemExit(f"error: {e}")


if __name__ == "__main__":
    main()
