"""Command-line front end.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are the subcommand's long options (dashes or underscores).  Flags given
on the command line win over the file.  Exit status: 0 success, 2 usage
error, 3 numerical failure.
"""

import argparse
import concurrent.futures
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .convexity import (
    certify,
    counterexample,
    counterexample_grid,
    hessian_analytic,
    hessian_dirichlet,
    hessian_numeric,
    interpolation_constants,
    lambda_estimate,
    convexity_alpha,
)
from .energy import EnergySpec, evaluate, first_variation, sublevel_bounds
from .exceptions import OTFlowError, ResolutionError
from .geometry import (
    PeriodicDensity,
    PeriodicField,
    read_density_csv,
    sine_density,
    write_density_csv,
)
from .transport import geodesic, optimal_map, write_map_csv

logger = logging.getLogger("otflow")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
N_MIN, N_MAX = 64, 8192


class UsageError(Exception):
    pass


# --- value parsing -------------------------------------------------------


def _grid_size(text):
    n = int(text)
    if n < N_MIN or n > N_MAX or n & (n - 1):
        raise argparse.ArgumentTypeError(f"n must be a power of two in [{N_MIN}, {N_MAX}]")
    return n


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _energy(text):
    try:
        return EnergySpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}") from None


def _keyvals(text):
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {part!r}")
        out[key.strip()] = val.strip()
    return out


def _budget(text):
    try:
        kv = _keyvals(text)
        unknown = set(kv) - {"c", "m", "delta"}
        if unknown:
            raise ValueError(f"unknown budget key(s) {sorted(unknown)}")
        return {k: float(v) for k, v in kv.items()}
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def synthesize_initial(descriptor, n, allow_zeros=False):
    """``uniform``, ``sine:amp=A,mode=K[,phase=P]``, ``paper-ce:h=H`` or a CSV path."""
    name, _, rest = descriptor.partition(":")
    name = name.strip().lower()
    if name == "uniform" and not rest:
        return PeriodicDensity.uniform(n)
    if name == "sine":
        kv = _keyvals(rest)
        unknown = set(kv) - {"amp", "mode", "phase"}
        if unknown:
            raise UsageError(f"unknown sine parameter(s) {sorted(unknown)}")
        amp = float(kv.get("amp", 0.5))
        if not 0 <= amp < 1:
            raise UsageError("sine amplitude must lie in [0, 1)")
        return sine_density(n, amp, int(kv.get("mode", 1)), float(kv.get("phase", 0.0)))
    if name == "paper-ce":
        kv = _keyvals(rest)
        if set(kv) - {"h"}:
            raise UsageError("paper-ce takes only h")
        if not allow_zeros:
            raise UsageError("paper-ce has zeros; it is only accepted by convexity commands")
        return counterexample(float(kv.get("h", 1.0)), n).u_h
    path = Path(descriptor)
    if not path.exists():
        raise UsageError(f"unknown initial-data descriptor or missing file: {descriptor}")
    u = read_density_csv(path)
    if len(u.values) != n:
        logger.info("using n = %d from %s", len(u.values), path)
    if not allow_zeros and u.min <= 0:
        raise UsageError(f"{path}: density must be strictly positive")
    return u


def _field(descriptor, n):
    name, _, rest = descriptor.partition(":")
    if name.strip().lower() != "sine":
        raise UsageError("field descriptor must be sine:amp=A,mode=K[,phase=P]")
    kv = _keyvals(rest)
    x = np.arange(n) / n
    amp = float(kv.get("amp", 0.05))
    mode = int(kv.get("mode", 1))
    phase = float(kv.get("phase", 0.0))
    return PeriodicField(amp * np.sin(2 * np.pi * (mode * x + phase)))


def _threads():
    raw = os.environ.get("OTFLOW_THREADS", "")
    try:
        return max(1, int(raw)) if raw else max(1, os.cpu_count() or 1)
    except ValueError:
        raise UsageError(f"OTFLOW_THREADS must be an integer, got {raw!r}") from None


# --- artifacts -----------------------------------------------------------


def _resolved(args):
    skip = {"func", "config"}
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = str(val) if isinstance(val, (EnergySpec, Path)) else val
    return out


def _header(args):
    return [f"otflow {__version__}", "config " + json.dumps(_resolved(args), sort_keys=True)]


def _write_json(path, payload, args):
    payload = {"otflow_version": __version__, "config": _resolved(args), **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=False)
        fh.write("\n")


def _write_rows(path, header, rows, args):
    with open(path, "w") as fh:
        for line in _header(args):
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _plot(args):
    return getattr(args, "plot", None)


# --- subcommands ---------------------------------------------------------


def cmd_distance(args):
    mu = synthesize_initial(args.source, args.n)
    nu = synthesize_initial(args.target, args.n)
    tm = optimal_map(mu, nu)
    w2 = math.sqrt(tm.cost)
    print(f"w2 {w2!r}")
    print(f"theta {tm.theta!r}")
    if args.map_output:
        write_map_csv(args.map_output, tm, _header(args))
    if _plot(args):
        from .plotting import plot_map

        plot_map(tm.x, tm.values, args.plot)
    return EXIT_OK


def cmd_geodesic(args):
    mu0 = synthesize_initial(args.source, args.n)
    mu1 = synthesize_initial(args.target, args.n)
    curves = []
    for s in args.s:
        if not 0 <= s <= 1:
            raise UsageError("s must lie in [0, 1]")
        nus = geodesic(mu0, mu1, s)
        curves.append((f"s={s:g}", nus.x, nus.values))
        print(f"s {s!r} min {nus.min!r} max {nus.max!r}")
        if args.output:
            out = Path(args.output)
            target = out if len(args.s) == 1 else out.with_name(f"{out.stem}_s{s:g}{out.suffix}")
            write_density_csv(target, nus, _header(args))
    if _plot(args):
        from .plotting import plot_densities

        plot_densities(curves, args.plot, "displacement interpolation")
    return EXIT_OK


def cmd_energy(args):
    u = synthesize_initial(args.input, args.n)
    value = evaluate(args.energy, u)
    print(f"energy {value!r}")
    b = sublevel_bounds(args.energy, max(value, 1e-12))
    print(f"sup_bound {b.M!r} floor {b.floor!r} holder {b.holder!r}")
    if args.first_variation:
        fv = first_variation(args.energy, u)
        _write_rows(args.first_variation, ["x", "dE"], zip(u.x, fv), args)
    if _plot(args):
        from .plotting import plot_densities

        plot_densities([("u", u.x, u.values)], args.plot, f"{args.energy}: E = {value:.6g}")
    return EXIT_OK


def cmd_hessian(args):
    if args.input.lower().startswith("paper-ce"):
        h = float(_keyvals(args.input.partition(":")[2]).get("h", 1.0))
        pair = counterexample(h)
        grid_a, grid_b = counterexample_grid(h, args.n if args.n >= 16 * h else 4096)
        print(f"A {pair.A_value!r} B {pair.B_value!r} A_grid {grid_a!r} B_grid {grid_b!r}")
        return EXIT_OK
    u = synthesize_initial(args.input, args.n)
    f = _field(args.field, args.n)
    spec = args.energy
    if spec.family == "dirichlet":
        analytic = hessian_dirichlet(u, f)
    elif spec.family == "hk":
        analytic = float("nan")
    else:
        analytic = hessian_analytic(spec, u, f)
    numeric = hessian_numeric(spec, u, f, args.step)
    print(f"analytic {analytic!r}")
    print(f"numeric {numeric!r}")
    return EXIT_OK


def cmd_lambda(args):
    spec = args.energy
    cp = 2 * args.c if args.convention == "half" and spec.family != "perturbed" else args.c
    alpha = convexity_alpha(spec, cp, args.m)
    d, beta, lam_hat = interpolation_constants(alpha, args.form)
    lam = lambda_estimate(spec, args.c, args.m, convention=args.convention, form=args.form)
    print(f"alpha {alpha!r}")
    print(f"d {d!r}")
    print(f"beta {beta!r}")
    print(f"lambda_hat {lam_hat!r}")
    print(f"lambda {lam!r}")
    return EXIT_OK


def _ce_row(h):
    pair = counterexample(h)
    return h, pair.A_value, pair.B_value, pair.A_value / h**2


def cmd_counterexample(args):
    hs = args.h
    if any(h < 1 for h in hs):
        raise UsageError("h must be >= 1")
    with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(_ce_row, hs))
    print("h,A,B,A/h^2")
    for row in rows:
        print(",".join(repr(float(v)) for v in row))
    if args.output:
        _write_rows(args.output, ["h", "A", "B", "A_over_h2"], rows, args)
    if _plot(args):
        from .plotting import plot_counterexample

        plot_counterexample(hs, [r[1] for r in rows], [r[2] for r in rows], args.plot)
    return EXIT_OK


def _records_jko(traj):
    recs = []
    for i, mu in enumerate(traj.densities):
        step = traj.steps[i - 1] if i else None
        recs.append(
            {
                "n": i,
                "t": i * traj.tau,
                "energy": evaluate(traj.spec, mu),
                "w2_increment": step.w2 if step else 0.0,
                "residual": step.el_residual if step else 0.0,
                "min_density": mu.min,
                "density": mu.values.tolist(),
            }
        )
    return recs


def _records_pde(traj):
    return [
        {
            "n": i,
            "t": float(t),
            "energy": evaluate(traj.spec, mu),
            "min_density": mu.min,
            "density": mu.values.tolist(),
        }
        for i, (t, mu) in enumerate(zip(traj.times, traj.states))
    ]


def _dump(records, directory, args):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for r in records:
        write_density_csv(
            d / f"step_{r['n']:05d}.csv", PeriodicDensity(np.asarray(r["density"])), _header(args)
        )


def _run_flow(spec, mu0, tau, horizon, budget):
    from .jko import flow

    return flow(spec, mu0, tau, horizon, budget)


def cmd_flow(args):
    from .jko import DomainBudget

    mu0 = synthesize_initial(args.initial, args.n)
    budget = None
    if args.budget:
        e0 = evaluate(args.energy, mu0)
        b = args.budget
        budget = DomainBudget(b.get("c", 2 * e0 + 1), b.get("m", 0.0), b.get("delta", 1.0))
        try:
            budget.validate(args.energy, mu0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    taus = [args.tau / 2**k for k in range(args.halvings + 1)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as pool:
        trajs = list(pool.map(lambda t: _run_flow(args.energy, mu0, t, args.horizon, budget), taus))
    failed = False
    out = Path(args.output) if args.output else None
    for k, traj in enumerate(trajs):
        recs = _records_jko(traj)
        payload = {
            "kind": "jko",
            "energy": str(args.energy),
            "tau": traj.tau,
            "n": args.n,
            "seed": args.seed,
            "failure": traj.failure,
            "exit_step": traj.budget.exit_step if traj.budget else None,
            "exit_reason": traj.budget.reason if traj.budget else "",
            "records": recs,
        }
        target = out
        if out is not None and len(trajs) > 1:
            target = out.with_name(f"{out.stem}_tau{k}{out.suffix}")
        if target is not None:
            _write_json(target, payload, args)
        if args.dump_densities:
            sub = Path(args.dump_densities) / (f"tau{k}" if len(trajs) > 1 else "")
            _dump(recs, sub, args)
        last = recs[-1]
        print(
            f"tau {traj.tau!r} steps {len(traj.steps)} energy {last['energy']!r} "
            f"min {last['min_density']!r}"
        )
        if traj.failure:
            print(f"failure: {traj.failure}", file=sys.stderr)
            failed = True
        if traj.budget and traj.budget.exit_step is not None:
            print(f"domain exit at step {traj.budget.exit_step}: {traj.budget.reason}")
        if _plot(args) and k == len(trajs) - 1:
            from .plotting import plot_trajectory

            plot_trajectory(recs, args.plot, f"{args.energy}, tau = {traj.tau:g}")
    if len(trajs) > 1:
        from .pde_oracle import compare, pde_solve

        ref = pde_solve(args.energy, mu0, min(t.times[-1] for t in trajs) or args.horizon)
        gaps = [compare(t, ref).final_sup for t in trajs]
        print("tau,sup_gap,order")
        for k, (tau, gap) in enumerate(zip(taus, gaps)):
            order = math.log2(gaps[k - 1] / gap) if k and gap > 0 else float("nan")
            print(f"{tau!r},{gap!r},{order!r}")
        if args.convergence_plot:
            from .plotting import plot_convergence

            plot_convergence(taus, gaps, args.convergence_plot)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_pde(args):
    from .pde_oracle import pde_solve

    mu0 = synthesize_initial(args.initial, args.n)
    traj = pde_solve(args.energy, mu0, args.horizon, dt=args.dt, method=args.method, save=args.save)
    recs = _records_pde(traj)
    payload = {
        "kind": "pde",
        "energy": str(args.energy),
        "method": traj.scheme,
        "n": args.n,
        "seed": args.seed,
        "message": traj.message,
        "records": recs,
    }
    if args.output:
        _write_json(args.output, payload, args)
    if args.dump_densities:
        _dump(recs, args.dump_densities, args)
    print(f"steps {len(recs) - 1} energy {recs[-1]['energy']!r} min {recs[-1]['min_density']!r}")
    if traj.message:
        print(traj.message, file=sys.stderr)
    if _plot(args):
        from .plotting import plot_trajectory

        plot_trajectory(recs, args.plot, f"{args.energy} ({traj.scheme})")
    return EXIT_NUMERIC if traj.message else EXIT_OK


def _load_traj(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
        recs = data["records"]
        times = np.array([r["t"] for r in recs], dtype=float)
        states = np.array([r["density"] for r in recs], dtype=float)
        energies = np.array([r["energy"] for r in recs], dtype=float)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"{path}: not a trajectory file ({exc})") from None
    return times, states, energies


def _interp_states(times, states, t):
    j = int(np.clip(np.searchsorted(times, t), 1, len(times) - 1)) if len(times) > 1 else 0
    if len(times) == 1:
        return states[0]
    t0, t1 = times[j - 1], times[j]
    w = 0.0 if t1 == t0 else min(max((t - t0) / (t1 - t0), 0.0), 1.0)
    return (1 - w) * states[j - 1] + w * states[j]


def cmd_compare(args):
    ta, sa, ea = _load_traj(args.first)
    tb, sb, eb = _load_traj(args.second)
    if sa.shape[1] != sb.shape[1]:
        raise UsageError("trajectories live on different grids")
    t_max = min(ta[-1], tb[-1])
    if len(ta) > 1 and len(tb) > 1 and t_max <= 0:
        raise UsageError("trajectories share no time range")
    rows = []
    for t, ua, e in zip(ta, sa, ea):
        if t > t_max * (1 + 1e-12) + 1e-15:
            break
        ub = _interp_states(tb, sb, t)
        d = ua - ub
        eb_t = float(np.interp(t, tb, eb))
        rows.append((t, float(np.max(np.abs(d))), float(np.sqrt(np.mean(d * d))), e - eb_t))
    print("t,sup,l2,energy_gap")
    for r in rows:
        print(",".join(repr(float(v)) for v in r))
    if args.output:
        _write_rows(args.output, ["t", "sup", "l2", "energy_gap"], rows, args)
    return EXIT_OK


def cmd_certify(args):
    u = synthesize_initial(args.initial, args.n)
    report = certify(
        args.energy,
        u,
        args.c,
        args.m,
        delta=args.delta,
        count=args.samples,
        seed=args.seed,
        convention=args.convention,
    )
    print(f"lambda {report.lambda_estimate!r}")
    print(f"alpha {report.alpha!r}")
    print(f"samples {report.samples}")
    print(f"sampled_min_ratio {report.sampled_min_ratio!r}")
    print(f"violations {len(report.violations)}")
    if args.output:
        _write_json(
            args.output,
            {
                "lambda": report.lambda_estimate,
                "alpha": report.alpha,
                "d": report.constants.d,
                "beta": report.constants.beta,
                "lambda_hat": report.constants.lam,
                "samples": report.samples,
                "sampled_min_ratio": report.sampled_min_ratio,
                "violations": report.violations,
            },
            args,
        )
    return EXIT_NUMERIC if report.violations else EXIT_OK


# --- parser --------------------------------------------------------------


def _common(p, plot=True):
    p.add_argument("--config", help="file of key = value defaults")
    p.add_argument("--n", type=_grid_size, default=256, help="grid size (power of two)")
    p.add_argument("--seed", type=int, default=0)
    if plot:
        p.add_argument("--plot", help="write a figure to this path")


def build_parser():
    parser = argparse.ArgumentParser(prog="otflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"otflow {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="W2 distance and optimal map")
    _common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--map-output", help="CSV x,T of the optimal map")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("geodesic", help="displacement interpolation")
    _common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--s", type=_float_list, default=[0.5])
    p.add_argument("--output")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("energy", help="evaluate an energy")
    _common(p)
    p.add_argument("--energy", type=_energy, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--first-variation", help="CSV x,dE of the first variation")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("hessian", help="second variation along a geodesic")
    _common(p, plot=False)
    p.add_argument("--energy", type=_energy, default=EnergySpec("dirichlet"))
    p.add_argument("--input", required=True)
    p.add_argument("--field", default="sine:amp=0.05,mode=1")
    p.add_argument("--step", type=_positive, default=1e-3)
    p.set_defaults(func=cmd_hessian)

    p = sub.add_parser("lambda", help="restricted convexity modulus")
    _common(p, plot=False)
    p.add_argument("--energy", type=_energy, default=EnergySpec("dirichlet"))
    p.add_argument("--c", type=_positive, required=True)
    p.add_argument("--m", type=_positive, required=True)
    p.add_argument("--convention", choices=("full", "half"), default="full")
    p.add_argument("--form", choices=("linear", "squared"), default="squared")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("counterexample", help="non-convexity witness sweep")
    _common(p)
    p.add_argument("--h", type=_float_list, default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--output")
    p.set_defaults(func=cmd_counterexample)

    for name, func in (("flow", cmd_flow), ("pde", cmd_pde)):
        p = sub.add_parser(name, help="JKO flow" if name == "flow" else "PDE oracle")
        _common(p)
        p.add_argument("--energy", type=_energy, required=True)
        p.add_argument("--initial", default="sine:amp=0.1,mode=1")
        p.add_argument("--horizon", type=_positive, default=1e-4)
        p.add_argument("--output")
        p.add_argument("--dump-densities", help="directory for per-step density CSVs")
        if name == "flow":
            p.add_argument("--tau", type=_positive, default=1e-6)
            p.add_argument("--budget", type=_budget, help="c=C,m=M,delta=D")
            p.add_argument("--halvings", type=int, default=0, help="also run tau/2, tau/4, ...")
            p.add_argument("--convergence-plot")
        else:
            p.add_argument("--method", choices=("radau", "bdf", "rk4"), default="radau")
            p.add_argument("--dt", type=_positive, help="RK4 step (default: automatic)")
            p.add_argument("--save", type=int, default=100)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="compare two trajectory files")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--output")
    p.add_argument("--config", help="file of key = value defaults")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("certify", help="sampled restricted-convexity certificate")
    _common(p, plot=False)
    p.add_argument("--energy", type=_energy, default=EnergySpec("dirichlet"))
    p.add_argument("--initial", default="sine:amp=0.1,mode=1")
    p.add_argument("--c", type=_positive, required=True)
    p.add_argument("--m", type=_positive, required=True)
    p.add_argument("--delta", type=_positive, default=0.05)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--convention", choices=("full", "half"), default="half")
    p.add_argument("--output")
    p.set_defaults(func=cmd_certify)
    return parser


def read_config(path):
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _command(parser, argv):
    names = set(_subparser_action(parser).choices)
    return next((tok for tok in argv if tok in names), None)


def _subparser_action(parser):
    return next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))


def parse_config(argv):
    """Parse argv, filling defaults from ``--config`` when given."""
    parser = build_parser()
    path = _config_path(argv)
    command = _command(parser, argv)
    if path is None or command is None:
        return parser.parse_args(argv)
    values = read_config(path)
    sp = _subparser_action(parser).choices[command]
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    for key, raw in values.items():
        if key not in actions:
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = actions[key]
        if not action.option_strings:
            raise UsageError(f"config key {key!r} is positional; pass it on the command line")
        try:
            value = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices and value not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        action.required = False
        sp.set_defaults(**{key: value})
    return parser.parse_args(argv)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_config(argv)
    except UsageError as exc:
        print(f"otflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"otflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResolutionError as exc:
        print(f"otflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OTFlowError as exc:
        print(f"otflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"otflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
