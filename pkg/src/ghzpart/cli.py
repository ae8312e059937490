"""Command-line front end: single evaluations, optimizer reports, sweeps.

Every command produces a list of records that is written as CSV (with
'#' metadata lines) or as a JSON array.  Exit codes: 0 success,
2 invalid input, 3 oracle mismatch under --verify.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .allocator import Unbounded, integer_optimum, opt_n_closed
from .dynamics import DynamicsScenario, monolithic_sequential_limit, peak_time, qfi_t, sequential_plan
from .noise_models import DomainError, NoiseParams, RateParams
from .qfi_core import (LOSS1, LOSS1_MODELS, LOSS2, Allocation, log_qfi, loss_detection_ratio,
                       normalize_scenario, qfi_partitioned)
from .ramsey_compare import crossing_table, crossing_time, minimize_xi_s, xi_s_squared
from .spectrum_oracle import MAX_DENSE_N, oracle_qfi

VERIFY_TOL = 1e-9
PARAM_KEYS = ("scenario", "F", "k", "p", "q", "eta", "gamma", "omega", "n", "m", "sizes", "T", "t_th",
              "loss_model", "precision")
DEFAULTS = {"scenario": "state_prep", "F": 1.0, "k": 1.0, "p": 1.0, "q": 1.0, "eta": 0.0, "gamma": 0.0,
            "omega": 0.0, "n": None, "m": 1, "sizes": None, "T": 1.0, "t_th": None, "loss_model": "exact",
            "precision": 17}
SWEEP_VARS = ("n", "m", "k", "F", "p", "q", "t", "phi")


class UsageError(Exception):
    """Bad input; maps to exit code 2."""


class VerifyError(Exception):
    """Closed form and oracle disagree; maps to exit code 3."""


# ------------------------------------------------------------------ parsing

def _sizes(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("sizes must be a comma-separated list of integers")


def _common(p):
    g = p.add_argument_group("parameters")
    g.add_argument("--scenario")
    g.add_argument("-F", type=float, dest="F")
    g.add_argument("-k", type=float)
    g.add_argument("-p", type=float)
    g.add_argument("-q", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--omega", type=float)
    g.add_argument("-n", "--n", type=float, dest="n")
    g.add_argument("-m", "--m", type=float, dest="m")
    g.add_argument("--sizes", type=_sizes)
    g.add_argument("-T", type=float, dest="T")
    g.add_argument("--t-th", type=float, dest="t_th")
    g.add_argument("--loss-model", dest="loss_model", help="undetected-loss model: exact or published")
    g.add_argument("--precision", type=int, help="significant digits (default 17)")
    o = p.add_argument_group("output")
    o.add_argument("-o", dest="output")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    o.add_argument("--config", help="JSON file of parameters; explicit flags win")
    o.add_argument("--verify", action="store_true")
    o.add_argument("--raw-units", action="store_true", dest="raw_units")


def build_parser():
    ap = argparse.ArgumentParser(prog="ghzpart", description="Partitioned noisy GHZ sensing calculator")
    ap.add_argument("--version", action="version", version=f"ghzpart {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qfi", help="QFI of one configuration")
    _common(p)

    p = sub.add_parser("optimize", help="closed-form and integer optimum of n or m")
    _common(p)
    p.add_argument("--what", choices=("m", "n"), default="m")
    p.add_argument("--range", type=_sizes, dest="search_range", help="lo,hi for the integer scan")
    p.add_argument("--sizes-mode", choices=("continuous", "integer"), default="continuous", dest="sizes_mode")

    p = sub.add_parser("sweep", help="grid sweep of one variable")
    _common(p)
    p.add_argument("--var", choices=SWEEP_VARS, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--outputs", default="qfi", help="comma list of: " + ",".join(SWEEP_OUTPUTS))
    p.add_argument("--integer", action="store_true", help="round n or m grid points to integers")

    p = sub.add_parser("dynamics", help="peak time and peak QFI of the time evolution")
    _common(p)

    p = sub.add_parser("sequential", help="best (m, t) for repeated cycles in a total time T")
    _common(p)

    p = sub.add_parser("sss", help="squeezed-state comparison")
    p.add_argument("action", nargs="?", choices=("minimize", "compare"), default="minimize")
    _common(p)
    p.add_argument("--m-list", type=_sizes, dest="m_list")
    p.add_argument("--xi2", type=float, help="squeezing parameter (default: OAT minimum at n)")
    return ap


def resolve(args):
    """Merge config file, explicit flags and defaults into a validated dict."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as e:
            raise UsageError(f"config: cannot read {args.config}: {e}")
        if not isinstance(cfg, dict):
            raise UsageError("config: expected a JSON object")
        unknown = sorted(set(cfg) - set(PARAM_KEYS))
        if unknown:
            raise UsageError(f"config: unknown key(s) {', '.join(unknown)}")
    out = {}
    for key in PARAM_KEYS:
        v = getattr(args, key, None)
        out[key] = v if v is not None else cfg.get(key, DEFAULTS[key])
    try:
        out["scenario"] = normalize_scenario(out["scenario"])
    except DomainError as e:
        raise UsageError(f"scenario: {e}")
    if out["loss_model"] not in LOSS1_MODELS:
        raise UsageError(f"loss_model: must be one of {LOSS1_MODELS}")
    for key in ("F", "k", "p", "q", "eta", "gamma", "omega", "T", "m"):
        try:
            out[key] = float(out[key])
        except (TypeError, ValueError):
            raise UsageError(f"{key}: not a number: {out[key]!r}")
        if not math.isfinite(out[key]):
            raise UsageError(f"{key}: must be finite")
    try:
        NoiseParams(out["F"], out["k"], out["p"], out["q"])
        RateParams(out["eta"], out["gamma"], out["omega"])
    except DomainError as e:
        raise UsageError(str(e))
    if out["T"] <= 0:
        raise UsageError("T: must be positive")
    if out["t_th"] is not None and out["t_th"] <= 0:
        raise UsageError("t_th: must be positive")
    if out["sizes"]:
        if any(s < 1 for s in out["sizes"]):
            raise UsageError("sizes: entries must be positive integers")
        out["n"] = float(sum(out["sizes"]))
        out["m"] = float(len(out["sizes"]))
    if out["n"] is not None:
        out["n"] = float(out["n"])
        if out["n"] < 1:
            raise UsageError("n: must be >= 1")
        if not 1 <= out["m"] <= out["n"]:
            raise UsageError("m: need 1 <= m <= n")
    elif out["m"] < 1:
        raise UsageError("m: must be >= 1")
    if not 1 <= out["precision"] <= 17:
        raise UsageError("precision: must be between 1 and 17")
    return out


def _need_n(c):
    if c["n"] is None:
        raise UsageError("n: required")
    return c["n"]


def _params(c):
    return NoiseParams(c["F"], c["k"], c["p"], c["q"])


def _integral(x):
    return float(x) == int(x)


# ------------------------------------------------------------------ commands

def cmd_qfi(c, args):
    n = _need_n(c)
    params = _params(c)
    if c["sizes"]:
        alloc = Allocation.from_sizes(c["sizes"])
        qv = qfi_partitioned(c["scenario"], params, alloc, model=c["loss_model"])
    elif _integral(n) and _integral(c["m"]):
        alloc = Allocation.equal(n, c["m"])
        qv = qfi_partitioned(c["scenario"], params, alloc, continuous=True, model=c["loss_model"])
    else:
        alloc = None  # real-valued n/m: continuous split only
    if alloc is not None:
        value, log_value = qv.value, qv.log_value
    else:
        log_value = _out_log_qfi(c, None)
        value = float(np.exp(log_value))
    rec = {"scenario": c["scenario"], "F": c["F"], "k": c["k"], "p": c["p"], "q": c["q"],
           "n": n, "m": c["m"], "qfi": value, "log_qfi": log_value}
    if c["scenario"] == LOSS1:
        rec["loss_model"] = c["loss_model"]
    if args.verify:
        sizes = alloc.sizes if alloc is not None and (c["sizes"] or n % c["m"] == 0) else None
        if sizes is None:
            raise UsageError("verify: needs integer group sizes (use --sizes or m dividing n)")
        if max(sizes) > MAX_DENSE_N:
            raise UsageError(f"verify: group sizes must be <= {MAX_DENSE_N}")
        oracle = sum(oracle_qfi(c["scenario"], c["F"], c["k"], c["p"], c["q"], int(s), path="sld").value
                      for s in sizes)
        dev = abs(value - oracle) / max(abs(oracle), 1e-300)
        rec["oracle_qfi"] = oracle
        rec["oracle_rel_dev"] = dev
        if dev > VERIFY_TOL:
            return [rec], VerifyError(f"verify: closed form deviates from the oracle by {dev:.3e}")
    return [rec], None


def cmd_optimize(c, args):
    params = _params(c)
    what = args.what
    if what == "m":
        n = _need_n(c)
        fixed = {"n": n}
        rng = tuple(args.search_range) if args.search_range else None
    else:
        fixed = {"m": c["m"]}
        rng = tuple(args.search_range) if args.search_range else None
        if rng is None:
            try:
                g = opt_n_closed(LOSS2 if c["scenario"] == LOSS1 else c["scenario"], params, c["m"])
                rng = (int(c["m"]), int(max(c["m"] + 2, math.ceil(4 * g))))
            except Unbounded as e:
                return [{"what": "n", "closed_form": None, "integer_optimum": None, "note": f"unbounded: {e}"}], None
    if rng is not None and (len(rng) != 2 or rng[0] > rng[1] or rng[0] < 1):
        raise UsageError("range: expected lo,hi with 1 <= lo <= hi")
    rep = integer_optimum(c["scenario"], params, n=fixed.get("n"), m=fixed.get("m"), which=what,
                          search_range=rng, model=c["loss_model"], sizes=args.sizes_mode)
    note = rep.note
    lo, hi = rep.neighbors
    rec = {"scenario": c["scenario"], "what": what, **fixed, "F": c["F"], "k": c["k"], "p": c["p"], "q": c["q"],
           "closed_form": rep.closed_form, "integer_optimum": rep.integer_optimum, "qfi": rep.qfi_at_integer.value,
           "qfi_below": None if lo is None else lo.value, "qfi_above": None if hi is None else hi.value, "note": note}
    return [rec], None


def _grid(args):
    if args.points < 2:
        raise UsageError("points: must be >= 2")
    if not args.start < args.stop:
        raise UsageError("start: must be below stop")
    if args.scale == "log":
        if args.start <= 0:
            raise UsageError("start: log scale needs start > 0")
        g = np.geomspace(args.start, args.stop, args.points)
    else:
        g = np.linspace(args.start, args.stop, args.points)
    if args.integer or args.var in ("n", "m"):
        g = np.round(g)
    return g


def _out_qfi(c, rec):
    lv = np.log(c["m"]) + log_qfi(c["scenario"], c["F"], c["k"], c["p"], c["q"], c["n"] / c["m"], c["loss_model"])
    return float(np.exp(lv))


def _out_log_qfi(c, rec):
    return float(np.log(c["m"]) + log_qfi(c["scenario"], c["F"], c["k"], c["p"], c["q"], c["n"] / c["m"],
                                          c["loss_model"]))


def _out_ratio(c, rec):
    return loss_detection_ratio(c["F"], c["k"], c["p"], c["n"], c["m"], c["loss_model"]).exact


def _out_ratio_approx(c, rec):
    return loss_detection_ratio(c["F"], c["k"], c["p"], c["n"], c["m"], c["loss_model"]).approx


def _dyn(c):
    return DynamicsScenario(c["scenario"], c["F"], c["k"], c["n"], c["m"], c["eta"], c["gamma"], c["loss_model"])


def _out_qfi_t(c, rec):
    return qfi_t(_dyn(c), c["t"]).value


def _out_qfi_per_time(c, rec):
    return qfi_t(_dyn(c), c["t"]).value / c["t"] if c["t"] > 0 else 0.0


def _out_xi2(c, rec):
    return xi_s_squared(int(c["n"]), c["phi"])


def _out_cross(c, rec):
    xi2 = c.get("xi2") or minimize_xi_s(int(c["n"])).xi2
    return crossing_time(c["F"], c["k"], c["n"], c["m"], xi2)


SWEEP_OUTPUTS = {"qfi": _out_qfi, "log_qfi": _out_log_qfi, "ratio": _out_ratio, "ratio_approx": _out_ratio_approx,
                 "qfi_t": _out_qfi_t, "qfi_per_time": _out_qfi_per_time, "xi2": _out_xi2,
                 "scaled_cross_time": _out_cross}


def cmd_sweep(c, args):
    grid = _grid(args)
    outs = [o.strip() for o in args.outputs.split(",") if o.strip()]
    bad = [o for o in outs if o not in SWEEP_OUTPUTS]
    if bad or not outs:
        raise UsageError(f"outputs: unknown {bad}; choose from {sorted(SWEEP_OUTPUTS)}")
    if args.var not in ("n",) and c["n"] is None:
        raise UsageError("n: required")
    if args.var == "t" and any(o in outs for o in ("qfi", "log_qfi")):
        raise UsageError("outputs: use qfi_t or qfi_per_time when sweeping t")
    rate = _dyn_rate(c)
    rows = []
    for x in grid:
        cc = dict(c)
        rec = {}
        if args.var == "t":
            if args.raw_units:
                cc["t"] = float(x)
            else:
                if rate <= 0:
                    raise UsageError("t: dimensionless time needs a positive decay rate (or --raw-units)")
                cc["t"] = float(x) / rate
            rec["t"] = cc["t"]
            rec["eta_t"] = c["eta"] * cc["t"]
            rec["gamma_t"] = c["gamma"] * cc["t"]
        else:
            cc[args.var] = float(x)
            rec[args.var] = float(x)
        try:
            NoiseParams(cc["F"], cc["k"], cc["p"], cc["q"])
            if cc["n"] is None or not 1 <= cc["m"] <= cc["n"]:
                raise DomainError("m: need 1 <= m <= n")
        except DomainError as e:
            raise UsageError(f"{args.var}={x}: {e}")
        for o in outs:
            v = SWEEP_OUTPUTS[o](cc, rec)
            if args.var == "t" and not args.raw_units:
                v *= {"qfi_t": rate**2, "qfi_per_time": rate}.get(o, 1.0)
            rec[o] = v
        rows.append(rec)
    return rows, None


def _dyn_rate(c):
    sc = c["scenario"]
    if sc in ("loss1", "loss2"):
        return c["eta"]
    if sc == "dephasing":
        return c["gamma"]
    return 2 * c["gamma"] + c["eta"]


def cmd_dynamics(c, args):
    _need_n(c)
    try:
        sc = _dyn(c)
    except DomainError as e:
        raise UsageError(str(e))
    try:
        rep = peak_time(sc)
    except Unbounded as e:
        return [{"scenario": sc.scenario, "n": c["n"], "m": c["m"], "note": f"unbounded: {e}"}], None
    t = rep.closed_form
    rec = {"scenario": sc.scenario, "n": c["n"], "m": c["m"], "F": c["F"], "k": c["k"]}
    if args.raw_units:
        rec.update({"eta": c["eta"], "gamma": c["gamma"], "t_star": t, "t_star_numeric": rep.numeric})
    else:
        rate = sc.rate
        rec.update({"eta_t": c["eta"] * t, "gamma_t": c["gamma"] * t, "rate_t_star": rate * t,
                    "rate_t_star_numeric": rate * rep.numeric})
    rec["rel_diff"] = rep.rel_diff
    scale = 1.0 if args.raw_units else sc.rate**2  # QFI in units of 1/rate^2
    rec["qfi"] = qfi_t(sc, t).value * scale
    rec["qfi_numeric"] = rep.qfi_at_numeric.value * scale
    return [rec], None


def cmd_sequential(c, args):
    n = _need_n(c)
    r = 2 * c["gamma"] + c["eta"]
    if r <= 0:
        return [{"n": n, "note": "unbounded: 2 gamma + eta = 0, cycles can be made arbitrarily long"}], None
    m_fixed = c["m"] if args.m is not None else None
    plan = sequential_plan(c["F"], c["k"], n, c["gamma"], c["eta"], c["T"], c["t_th"], m_fixed)
    rec = {"n": n, "F": c["F"], "k": c["k"], "eta": c["eta"], "gamma": c["gamma"], "T": c["T"], "t_th": c["t_th"],
           "m": plan.m, "t": plan.t, "info": plan.info, "m_tilde": plan.m_tilde, "info_limit": plan.info_limit}
    if not args.raw_units:
        rec["scaled_t"] = n * r * plan.t / plan.m
    if c["k"] < 1 and c["m"] == 1 and args.m is None:
        nm, info, approx = monolithic_sequential_limit(c["F"], c["k"], c["gamma"], c["eta"], c["T"])
        rec.update({"monolithic_best_n": nm, "monolithic_info": info, "monolithic_info_approx": approx})
    return [rec], None


def cmd_sss(c, args):
    n = _need_n(c)
    if not _integral(n) or n < 3:
        raise UsageError("n: must be an integer >= 3")
    n = int(n)
    st = minimize_xi_s(n)
    xi2 = args.xi2 if args.xi2 is not None else st.xi2
    if xi2 <= 0:
        raise UsageError("xi2: must be positive")
    if args.action == "minimize":
        return [{"n": n, "phi": st.phi, "xi2": st.xi2}], None
    ms = args.m_list or [int(c["m"])]
    if any(m < 1 or m > n for m in ms):
        raise UsageError("m_list: entries must lie in 1..n")
    rows = [{"n": n, "m": row.m, "F": c["F"], "k": c["k"], "xi2": xi2, "scaled_cross_time": row.scaled_cross_time,
             "advantage": row.advantage} for row in crossing_table(c["F"], c["k"], n, ms, xi2)]
    return rows, None


COMMANDS = {"qfi": cmd_qfi, "optimize": cmd_optimize, "sweep": cmd_sweep, "dynamics": cmd_dynamics,
            "sequential": cmd_sequential, "sss": cmd_sss}


# ------------------------------------------------------------------ output

def fmt_number(x, digits=17):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x.is_integer() and abs(x) < 2**53:
            return str(int(x))
        return format(x, f".{digits}g")
    return str(x)


def _json_value(x, digits):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return x if digits == 17 else float(format(x, f".{digits}g"))
    if isinstance(x, np.integer):
        return int(x)
    return x


def render(records, command, config, fmt="csv", digits=17):
    buf = io.StringIO()
    if fmt == "json":
        data = [{k: _json_value(v, digits) for k, v in r.items()} for r in records]
        buf.write(json.dumps(data, indent=1))
        buf.write("\n")
        return buf.getvalue()
    buf.write(f"# tool: ghzpart {__version__}\n")
    buf.write(f"# command: {command}\n")
    for key in PARAM_KEYS:
        buf.write(f"# {key}: {fmt_number(config.get(key), digits) if not isinstance(config.get(key), list) else ','.join(map(str, config[key]))}\n")
    cols = []
    for r in records:
        for key in r:
            if key not in cols:
                cols.append(key)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([fmt_number(r.get(key), digits) for key in cols])
    return buf.getvalue()


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        config = resolve(args)
        records, failure = COMMANDS[args.command](config, args)
    except (UsageError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    text = render(records, args.command, config, args.format, config["precision"])
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
