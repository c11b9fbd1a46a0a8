"""Command-line front end: single evaluations, depth scans and parameter sweeps.

Exit status is 0 on success, 1 when a numerical routine fails to converge
and 2 for invalid input.
"""

import argparse
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import closed_form, exact, meanfield, mps
from .errors import DepthCapReached, InputError, NonConvergenceError, ShadowTwirlError
from .monte_carlo import McConfig, estimate_betas
from .noise import effective_f, load_channel
from .scaling import fit_base

logger = logging.getLogger(__name__)

HEADER = "q,f,n,k,t,beta_noiseless,beta_noisy,log_shadow_norm,engine,chi,mc_stderr,runtime_ms"
FIELDS = HEADER.split(",")
ENGINES = ("exact", "mps", "mc", "closed")
MAX_GRID = 100_000
MC_MAX_RELATIVE_ERROR = 0.25
MAX_DEPTH = mps.MAX_DEPTH


# ---------------------------------------------------------------- grids


def parse_int_grid(text, name):
    """``"2,4,6"``, ``"2:24"`` (inclusive) or ``"2:24:2"``, mixed freely."""
    values = []
    for token in text.split(","):
        token = token.strip()
        try:
            if ":" in token:
                parts = [int(p) for p in token.split(":")]
                if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] <= 0):
                    raise ValueError
                step = parts[2] if len(parts) == 3 else 1
                values.extend(range(parts[0], parts[1] + 1, step))
            else:
                values.append(int(token))
        except ValueError:
            raise InputError(f"--{name}: cannot parse {token!r} as an integer or a:b range") from None
    if not values:
        raise InputError(f"--{name}: empty grid")
    return values


def parse_f_grid(text):
    """Damping values; ``th`` or ``th+0.001`` stand for the noise threshold of each point."""
    tokens = []
    for token in text.split(","):
        token = token.strip()
        if token.startswith("th"):
            rest = token[2:]
            try:
                shift = float(rest) if rest else 0.0
            except ValueError:
                raise InputError(f"--f: cannot parse threshold offset in {token!r}") from None
            tokens.append(("th", shift))
        else:
            try:
                tokens.append(("value", float(token)))
            except ValueError:
                raise InputError(f"--f: cannot parse {token!r} as a number") from None
    return tokens


def resolve_f(token, q, n):
    kind, value = token
    if kind == "value":
        return value
    base = closed_form.pauli_threshold(q) if n is None else closed_form.renyi_threshold(q, n)
    return min(base + value, 1.0)


def parse_t_grid(text):
    if text.strip() == "opt":
        return ["opt"]
    values = parse_int_grid(text, "t")
    bad = [t for t in values if not 0 <= t <= MAX_DEPTH]
    if bad:
        raise InputError(f"--t: depths must lie in [0, {MAX_DEPTH}], got {bad[0]}")
    return values


# ---------------------------------------------------------------- records


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def record_to_csv(rec):
    return ",".join(_fmt(rec[name]) for name in FIELDS)


def _record(q, f, n, k, t, beta, beta_eps, log_norm, engine, chi=None, stderr=None, ms=None):
    return {
        "q": q, "f": f, "n": n, "k": k, "t": t,
        "beta_noiseless": beta, "beta_noisy": beta_eps, "log_shadow_norm": log_norm,
        "engine": engine, "chi": chi, "mc_stderr": stderr, "runtime_ms": ms,
    }


def resolve_depth(opts, q, f, n, k):
    if opts.t_value != "opt":
        return opts.t_value
    if n is None:
        return mps.optimal_depth(q, f, k, opts.chi, opts.t_cap, t0_noiseless=opts.t0n).t_best
    return mps.renyi_optimal_depth(q, f, n, k, opts.chi, opts.t_cap, opts.t0n).t_best


def pauli_record(opts, engine, q, f, k, t):
    """One record for a contiguous, aligned weight-``k`` Pauli."""
    start = time.perf_counter()
    chi = stderr = None
    if engine == "exact":
        params = exact.CircuitParams(q, f, t, t0_noiseless=opts.t0n)
        beta, beta_eps = exact.beta_pair(exact.WeightVector.contiguous(k), params)
    elif engine == "mps":
        chi = opts.chi
        beta, beta_eps = mps.beta_pair_pauli(q, f, k, t, chi, 0, opts.t0n)
    elif engine == "mc":
        params = exact.CircuitParams(q, f, t, t0_noiseless=opts.t0n)
        mc = McConfig(opts.samples, opts.seed, threads=1)
        est = estimate_betas(exact.WeightVector.contiguous(k), params, mc)
        if est.relative_error > MC_MAX_RELATIVE_ERROR:
            raise NonConvergenceError(
                f"Monte Carlo relative error {est.relative_error:.2f} exceeds "
                f"{MC_MAX_RELATIVE_ERROR:.2f} at q={q}, f={f}, k={k}, t={t}; increase --samples"
            )
        beta, beta_eps, stderr = est.beta, est.beta_eps, est.beta_eps_stderr
    elif engine == "closed":
        beta, beta_eps = closed_form.beta_pair_closed(q, f, k, t, opts.t0n)
    else:
        raise InputError(f"unknown engine {engine!r}")
    log_norm = math.log(beta) - 2.0 * math.log(beta_eps)
    ms = (time.perf_counter() - start) * 1e3 if opts.timing else None
    return _record(q, f, None, k, t, beta, beta_eps, log_norm, engine, chi, stderr, ms)


def renyi_record(opts, engine, q, f, n, A, t):
    """One record for the order-``n`` Renyi variance bound; the beta columns stay empty."""
    start = time.perf_counter()
    chi = None
    if engine == "mps":
        chi = opts.chi
        value = mps.renyi_shadow_norm(q, f, n, A, t, chi, opts.t0n)
    elif engine == "closed":
        if t == 0:
            if f != 1.0 and not opts.t0n:
                raise InputError("the depth-0 Renyi closed form is noiseless; use --t0-noise off")
            value = closed_form.renyi_variance_t0(q, n, A)
        elif t == 1:
            value = closed_form.renyi_variance_t1(q, n, A, f)
        else:
            raise InputError(f"closed forms exist only for t in {{0, 1}}, got t = {t}")
    else:
        raise InputError(f"engine {engine!r} does not support Renyi quantities (use mps or closed)")
    ms = (time.perf_counter() - start) * 1e3 if opts.timing else None
    return _record(q, f, n, A, t, None, None, math.log(value), engine, chi, None, ms)


def _engines(opts, renyi):
    if opts.engine != "all":
        return [opts.engine]
    return ["mps", "closed"] if renyi else list(ENGINES)


def _applicable(engine, q, k, t, renyi):
    if engine == "closed":
        return t in (0, 1) and not (renyi and t == 1 and k % 2)
    if engine == "exact":
        # mirrors the exact engine's open-boundary padding
        reach = t + 1
        return reach + reach % 2 + k + reach <= exact.MAX_SITES
    return True


def evaluate_point(opts, point):
    """All records of one grid point, in engine order."""
    q, f_token, n, k, t_spec = point
    f = resolve_f(f_token, q, n)
    opts_t = argparse.Namespace(**vars(opts))
    opts_t.t_value = t_spec
    t = resolve_depth(opts_t, q, f, n, k)
    renyi = n is not None
    engines = _engines(opts, renyi)
    out = []
    for engine in engines:
        if opts.engine == "all" and not _applicable(engine, q, k, t, renyi):
            continue
        if renyi:
            out.append(renyi_record(opts, engine, q, f, n, k, t))
        else:
            out.append(pauli_record(opts, engine, q, f, k, t))
    return out


def run_grid(opts, points):
    if opts.threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            chunks = list(pool.map(lambda p: evaluate_point(opts, p), points))
    else:
        chunks = [evaluate_point(opts, p) for p in points]
    return [rec for chunk in chunks for rec in chunk]


def relative_spread(records):
    """Max relative spread of the shadow norm across the deterministic engines."""
    values = [math.exp(r["log_shadow_norm"]) for r in records if r["engine"] != "mc"]
    if len(values) < 2:
        return None
    return (max(values) - min(values)) / min(values)


def fit_records(records, k_min=None):
    """Fitted scaling base per ``(q, f, n, engine)`` group, at the best scanned depth for each size.

    Sizes below ``k_min`` are dropped; by default the upper half of the sizes is used.
    """
    groups = {}
    for r in records:
        key = (r["q"], r["f"], r["n"], r["engine"])
        best = groups.setdefault(key, {})
        best[r["k"]] = min(best.get(r["k"], math.inf), r["log_shadow_norm"])
    fits = []
    for (q, f, n, engine), best in groups.items():
        ks = sorted(best)
        if k_min is None:
            use = ks[len(ks) // 2:]
        else:
            use = [k for k in ks if k >= k_min]
        if len(use) < 2:
            continue
        b = fit_base(use, [math.exp(best[k]) for k in use], per_site=1 if n is None else n)
        fits.append({"q": q, "f": f, "n": n, "engine": engine, "k_min": use[0], "k_max": use[-1], "base": b})
    return fits


# ---------------------------------------------------------------- commands


def _default_threads():
    env = os.environ.get("SHADOW_TWIRL_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputError(f"SHADOW_TWIRL_THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise InputError(f"SHADOW_TWIRL_THREADS must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


def _emit(opts, payload, text):
    print(json.dumps(payload) if opts.json else text)


def cmd_effective_f(opts):
    f = effective_f(load_channel(opts.channel_file))
    _emit(opts, {"f": f}, f"{f:.12f}")


def cmd_threshold(opts):
    q = opts.q
    if opts.kind == "pauli":
        f_th = closed_form.pauli_threshold(q)
    else:
        if opts.n is None:
            raise InputError("threshold renyi needs --n")
        f_th = closed_form.renyi_threshold(q, opts.n)
    _emit(opts, {"kind": opts.kind, "q": q, "n": opts.n, "f_th": f_th}, f"{f_th:.{opts.precision}f}")


def _single_point(opts, n, k):
    t = parse_t_grid(opts.t)
    if len(t) != 1:
        raise InputError("--t must be a single depth or 'opt' here")
    return (opts.q, ("value", opts.f), n, k, t[0])


def _print_records(opts, records):
    if opts.json:
        for r in records:
            print(json.dumps(r))
        return
    if len(records) > 1:
        print(HEADER + ",spread")
        spread = relative_spread(records)
        for r in records:
            print(record_to_csv(r) + "," + _fmt(spread))
        ref = next((r for r in records if r["engine"] in ("exact", "mps")), None)
        mc = next((r for r in records if r["engine"] == "mc"), None)
        if ref is not None and mc is not None and ref["beta_noisy"] is not None and mc["mc_stderr"]:
            dev = abs(mc["beta_noisy"] - ref["beta_noisy"]) / mc["mc_stderr"]
            print(f"# mc deviation from {ref['engine']}: {dev:.2f} sigma")
    else:
        print(HEADER)
        print(record_to_csv(records[0]))


def cmd_shadow_norm(opts):
    if opts.k is None:
        raise InputError("shadow-norm needs --k")
    _print_records(opts, evaluate_point(opts, _single_point(opts, None, opts.k)))


def cmd_renyi(opts):
    if opts.n is None or opts.A is None:
        raise InputError("renyi needs --n and --A")
    if opts.engine in ("exact", "mc"):
        raise InputError(f"engine {opts.engine!r} does not support Renyi quantities (use mps or closed)")
    _print_records(opts, evaluate_point(opts, _single_point(opts, opts.n, opts.A)))


def cmd_optimal_depth(opts):
    if opts.k is None:
        raise InputError("optimal-depth needs --k")
    scan = mps.optimal_depth(opts.q, opts.f, opts.k, opts.chi, opts.t_cap, t0_noiseless=opts.t0n)
    norm = scan.table[scan.t_best]
    payload = {"q": opts.q, "f": opts.f, "k": opts.k, "t_star": scan.t_best,
               "shadow_norm": norm, "capped": scan.capped}
    text = f"{scan.t_best}\t{_fmt(norm)}" + ("\t(t_cap reached)" if scan.capped else "")
    _emit(opts, payload, text)


def cmd_tmax(opts):
    try:
        t = mps.t_max(opts.q, opts.f, opts.chi, opts.t_cap, t0_noiseless=opts.t0n)
    except DepthCapReached as exc:
        _emit(opts, {"q": opts.q, "f": opts.f, "t_max": None, "t_cap": exc.t_cap}, str(exc))
        return
    _emit(opts, {"q": opts.q, "f": opts.f, "t_max": t}, str(t))


def cmd_meanfield(opts):
    if opts.k is None:
        raise InputError("meanfield needs --k")
    try:
        k = float(opts.k)
    except ValueError:
        raise InputError(f"--k: cannot parse {opts.k!r} as a number") from None
    res = meanfield.tstar_meanfield(opts.q, opts.f, k)
    payload = {"q": opts.q, "f": opts.f, "k": k, "t_star": res.t_star, "valid": res.valid,
               "coeff_bulk": res.coeffs.coeff_bulk, "coeff_edge": res.coeffs.coeff_edge}
    text = f"{res.t_star:.{opts.precision}f}" + ("" if res.valid else "\t(no benefit from depth)")
    _emit(opts, payload, text)


def cmd_scan(opts):
    qs = parse_int_grid(opts.q_grid, "q")
    fs = parse_f_grid(opts.f_grid)
    ts = parse_t_grid(opts.t)
    if opts.n is not None:
        if opts.A is None:
            raise InputError("a Renyi scan (--n) needs a region grid --A")
        ns = parse_int_grid(opts.n, "n")
        sizes = parse_int_grid(opts.A, "A")
    else:
        if opts.k is None:
            raise InputError("scan needs --k (Pauli) or --n with --A (Renyi)")
        ns = [None]
        sizes = parse_int_grid(opts.k, "k")
    count = len(qs) * len(fs) * len(ns) * len(sizes) * len(ts)
    if count > MAX_GRID:
        raise InputError(f"grid has {count} points, more than the limit of {MAX_GRID}")
    points = list(itertools.product(qs, fs, ns, sizes, ts))
    # fail on an unwritable path before doing any work
    out = open(opts.out, "w", encoding="utf-8", newline="") if opts.out else None
    try:
        records = run_grid(opts, points)
        lines = [json.dumps(r) for r in records] if opts.json else [HEADER] + [record_to_csv(r) for r in records]
        text = "\n".join(lines) + "\n"
        if out is None:
            sys.stdout.write(text)
        else:
            out.write(text)
    finally:
        if out is not None:
            out.close()
    if opts.fit:
        stream = sys.stdout if opts.out else sys.stderr
        for fit in fit_records(records, opts.fit_min):
            n = "-" if fit["n"] is None else fit["n"]
            print(f"base q={fit['q']} f={_fmt(fit['f'])} n={n} engine={fit['engine']} "
                  f"k={fit['k_min']}..{fit['k_max']}: {fit['base']:.6f}", file=stream)


# ---------------------------------------------------------------- parser


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--precision", type=int, default=4, help="decimals for printed scalars")
    common.add_argument("--chi", type=int, default=mps.DEFAULT_CHI, help="MPS bond-dimension cap")
    common.add_argument("--t-cap", type=int, default=None, dest="t_cap",
                        help="largest depth scanned (default 16, 64 for tmax)")
    common.add_argument("--t0-noise", choices=("on", "off"), default="off", dest="t0_noise",
                        help="apply the noise layer to the depth-0 circuit")
    common.add_argument("--engine", choices=ENGINES + ("all",), default="mps")
    common.add_argument("--samples", type=_positive_int, default=100_000, help="Monte Carlo samples")
    common.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $SHADOW_TWIRL_THREADS or all cores)")
    common.add_argument("--timing", action="store_true",
                        help="fill runtime_ms (makes output run-dependent)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="shadow-twirl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("effective-f", parents=[common], help="effective damping of a channel file")
    p.add_argument("channel_file")
    p.set_defaults(func=cmd_effective_f)

    p = sub.add_parser("threshold", parents=[common], help="noise threshold f_th")
    p.add_argument("kind", choices=("pauli", "renyi"))
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_threshold)

    for name, func, help_text in (
        ("shadow-norm", cmd_shadow_norm, "shadow norm of a contiguous Pauli"),
        ("renyi", cmd_renyi, "variance bound for Tr(rho_A^n)"),
        ("optimal-depth", cmd_optimal_depth, "depth minimizing a Pauli shadow norm"),
        ("tmax", cmd_tmax, "operator-independent depth bound"),
        ("meanfield", cmd_meanfield, "mean-field optimal depth"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--q", type=int, required=True)
        p.add_argument("--f", type=float, default=1.0)
        p.add_argument("--k", type=str if name == "meanfield" else int)
        p.add_argument("--n", type=int)
        p.add_argument("--A", type=int)
        p.add_argument("--t", default="0", help="depth or 'opt'")
        p.set_defaults(func=func)

    p = sub.add_parser("scan", parents=[common], help="parameter sweep to CSV")
    p.add_argument("--q", dest="q_grid", default="2", help="grid, e.g. 2,3 or 2:4")
    p.add_argument("--f", dest="f_grid", default="1", help="grid of damping values; 'th' and 'th+d' allowed")
    p.add_argument("--k", help="Pauli sizes, e.g. 2:24")
    p.add_argument("--n", help="Renyi orders; switches to a Renyi scan")
    p.add_argument("--A", help="Renyi region sizes")
    p.add_argument("--t", default="opt", help="depths or 'opt'")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--fit", action="store_true", help="print fitted scaling bases")
    p.add_argument("--fit-min", type=int, dest="fit_min",
                   help="smallest size used in the fit (default: upper half of the sizes)")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None):
    parser = build_parser()
    opts = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if opts.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        opts.t0n = opts.t0_noise == "off"
        if opts.t_cap is None:
            opts.t_cap = 64 if opts.command == "tmax" else 16
        if not 0 <= opts.t_cap <= MAX_DEPTH:
            raise InputError(f"--t-cap must lie in [0, {MAX_DEPTH}], got {opts.t_cap}")
        if opts.threads is None:
            opts.threads = _default_threads()
        if opts.command != "scan" and isinstance(getattr(opts, "t", None), str):
            parse_t_grid(opts.t)
        opts.func(opts)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ShadowTwirlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
