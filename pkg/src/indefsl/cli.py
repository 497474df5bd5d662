"""Command-line front end.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration or
violated precondition, 3 numerical blow-up.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .errors import BlowUpError, ConvergenceError, DegenerateError, InvalidInputError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

GLOBAL_KEYS = ("seed", "tol", "format", "out")


class ConfigError(InvalidInputError):
    pass


# ---------------------------------------------------------------------------
# serialization


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im], NaN to None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(float(obj.real)), clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def render_csv(meta: dict, header: list, rows: list) -> str:
    buf = io.StringIO()
    for key in ("tool", "version", "subcommand", "seed", "passed", "exit_code"):
        buf.write(f"# {key}: {json.dumps(clean(meta[key]))}\n")
    buf.write(f"# config: {json.dumps(clean(meta['config']), sort_keys=True)}\n")
    buf.write(f"# tolerances: {json.dumps(clean(meta['tolerances']), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument handling


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _global_parent(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d if suppress else 0, help="RNG seed (default 0)")
    g.add_argument("--tol", type=float, default=d, help="override the main tolerance")
    g.add_argument("--format", choices=("json", "csv"), default=d if suppress else "json")
    g.add_argument("--out", default=d, help="output path (default: stdout)")
    g.add_argument("--config", default=d, help="JSON file whose keys override the flags")
    return p


POTENTIAL_HELP = (
    "potential: polynomial in x1..xm (e.g. 'x1^3 - x1*x2'), "
    "'wave:F=<p(s)>,G=<p(s)>' or 'wave:spline,seed=N[,knots=K][,bound=B]'"
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indefsl", parents=[_global_parent(False)],
        description="Construct and verify indefinite special Lagrangian submanifolds.",
        epilog="Exit codes: 0 pass, 1 check failure, 2 config/precondition error, 3 blow-up.")
    parser.add_argument("--version", action="version", version=f"indefsl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    gp = _global_parent(True)

    p = sub.add_parser("verify-graph", parents=[gp], help="check a gradient graph",
                       description="Residual, plane, mean-curvature and phase checks on the "
                                   "graph of (grad u) I_{k,m}. " + POTENTIAL_HELP)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--potential", required=False, help=POTENTIAL_HELP)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--domain", type=float, default=1.0, help="half-width of the sample box")

    p = sub.add_parser("gen", parents=[gp], help="generate and check example families")
    p.add_argument("--family", choices=("torus", "rot", "normal-bundle"), default="torus")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--c", default="2,0,0", help="level values (torus) or the fold constant (rot)")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--causal", choices=("spacelike", "timelike"), default="spacelike")
    p.add_argument("--branch", type=int, default=None)
    p.add_argument("--base", choices=("helicoid", "paraboloid"), default="helicoid")
    p.add_argument("--param", type=float, default=0.5, help="helicoid pitch or paraboloid curvature")

    p = sub.add_parser("solve", parents=[gp], help="hyperbolic Cauchy solve (k = 1)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--extent", type=float, default=12.0)
    p.add_argument("--dx", type=float, default=0.1875)
    p.add_argument("--cfl", type=float, default=0.4)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--data", default=None, help="JSON record {'f': {...}, 'h': {...}}")
    p.add_argument("--boundary", choices=("periodic", "absorbing"), default="periodic")
    p.add_argument("--output-cadence", type=int, default=1)
    p.add_argument("--snapshot-cadence", type=int, default=0)
    p.add_argument("--snapshots", default=None, help="binary snapshot file")
    p.add_argument("--slab-window", default=None, help="t0,t1 for post-hoc verification")
    p.add_argument("--linear", action="store_true", help="force the right side to zero")

    p = sub.add_parser("second-variation", parents=[gp], help="instability witnesses")
    p.add_argument("--base", choices=("timelike-plane", "wave", "spacelike-plane"),
                   default="timelike-plane")
    p.add_argument("--potential", default="wave:F=s^3/20,G=s^3/20", help=POTENTIAL_HELP)
    p.add_argument("--center", default="0,0")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--q-max", type=int, default=20)
    p.add_argument("--fit-range", default="5,25", help="q_lo,q_hi of the growth fit")
    p.add_argument("--normal", choices=("spacelike", "timelike"), default="spacelike")
    p.add_argument("--transverse-nodes", type=int, default=129)

    p = sub.add_parser("null-check", parents=[gp], help="null-condition sampling for m = 3")
    p.add_argument("--samples", type=int, default=10_000)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Flags merged with the --config file; unknown config keys are rejected."""
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    params.setdefault("tol", None)
    params.setdefault("out", None)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        sc = cfg.pop("subcommand", None)
        if sc is not None and sc != args.command:
            raise ConfigError(f"config is for {sc!r}, not {args.command!r}")
        bad = sorted(set(cfg) - set(params) - {"tolerances"})
        if bad:
            raise ConfigError(f"unknown config keys {bad}")
        params.update(cfg)
    tol_over = params.pop("tolerances", None) or {}
    if not isinstance(tol_over, dict):
        raise ConfigError("'tolerances' must be an object")
    params["_tolerances"] = tol_over
    return params


def _tolerances(defaults: dict, params: dict, main: str) -> dict:
    tol = dict(defaults)
    if params.get("tol") is not None:
        tol[main] = float(params["tol"])
    over = params.get("_tolerances", {})
    bad = sorted(set(over) - set(tol))
    if bad:
        raise ConfigError(f"unknown tolerance names {bad}; known: {sorted(tol)}")
    tol.update({k: float(v) for k, v in over.items()})
    return tol


# ---------------------------------------------------------------------------
# subcommands: each returns (passed, results, tolerances, (header, rows))


def cmd_verify_graph(params: dict):
    from .expr import domain_half_width, parse_potential
    from .geometry import graph_immersion, mean_curvature, phase_along
    from .graphs import graph_frame, is_nondegenerate, sl_residual
    from .indlinalg import HermitianForm
    from .planes import is_special_plane

    tol = _tolerances({"residual": 1e-9, "plane": 1e-8, "mean_curvature": 5e-4,
                       "phase": 1e-6}, params, "residual")
    m, k = int(params["m"]), int(params["k"])
    if params.get("potential") is None:
        raise ConfigError("--potential is required")
    if not 0 <= k <= m or m < 1:
        raise ConfigError("need 0 <= k <= m")
    if int(params["points"]) < 1 or float(params["domain"]) <= 0:
        raise ConfigError("points and domain must be positive")
    u, desc = parse_potential(str(params["potential"]), m)
    R = domain_half_width(desc, float(params["domain"]))
    rng = np.random.default_rng(int(params["seed"]))
    pts = rng.uniform(-R, R, size=(int(params["points"]), m))
    form = HermitianForm(k, m)
    imm = graph_immersion(u, k)
    rows, ok_all = [], True
    rmax = hmax = 0.0
    for x in pts:
        im, det = sl_residual(u, k, x)
        nondeg = is_nondegenerate(det)
        verdict = is_special_plane(graph_frame(u, k, x), form, tol["plane"])
        try:
            hn = float(np.linalg.norm(mean_curvature(imm, x)))
        except DegenerateError:
            hn = float("nan")
        ok = (abs(im) < tol["residual"] and nondeg and verdict.special
              and hn < tol["mean_curvature"])
        ok_all &= bool(ok)
        rmax = max(rmax, abs(im))
        hmax = max(hmax, hn) if math.isfinite(hn) else float("inf")
        ph = verdict.phase if verdict.phase is not None else complex("nan")
        rows.append(list(x) + [im, abs(det), ph.real, ph.imag, hn, verdict.verdict, bool(ok)])
    pr = phase_along(imm, pts, const_tol=tol["phase"])
    phase_ok = pr.verdict == "special"
    results = {"potential": desc, "domain_half_width": R, "points": len(pts),
               "max_residual": rmax, "max_mean_curvature": hmax,
               "phase_deviation": pr.max_deviation, "phase_verdict": pr.verdict,
               "points_passed": int(sum(r[-1] for r in rows))}
    header = [f"x{i + 1}" for i in range(m)] + ["sl_residual", "abs_det", "phase_re", "phase_im",
                                                "mean_curvature", "plane_verdict", "passed"]
    return bool(ok_all and phase_ok), results, tol, (header, rows)


def cmd_gen(params: dict):
    fam = params["family"]
    rng = np.random.default_rng(int(params["seed"]))
    count = int(params["count"])
    if count < 1:
        raise ConfigError("count must be positive")
    if fam == "torus":
        return _gen_torus(params, rng, count)
    if fam == "rot":
        return _gen_rot(params, rng, count)
    if fam == "normal-bundle":
        return _gen_normal_bundle(params, rng, count)
    raise ConfigError(f"unknown family {fam!r}")


def _gen_torus(params, rng, count):
    from .generators import LevelSetSpec, levelset_sample, torus_moment_values, torus_system
    from .indlinalg import HermitianForm
    from .planes import implicit_lagrangian_check, implicit_special_check

    tol = _tolerances({"omega": 1e-9, "parity": 1e-8, "moment": 1e-10}, params, "omega")
    m, k = int(params["m"]), int(params["k"])
    spec = LevelSetSpec(m, k, _floats(params["c"]))
    seeds = [np.concatenate([np.ones(m), np.zeros(m)])]
    pts, failures = levelset_sample(spec, seeds, count, rng)
    sysm = torus_system(spec)
    form = HermitianForm(k, m)
    P = [q.point for q in pts]
    lag = implicit_lagrangian_check(sysm, P, form, tol=tol["omega"])
    spc = implicit_special_check(sysm, P, form, tol=tol["parity"])
    mv = np.array([torus_moment_values(p[:m] + 1j * p[m:], k, m) for p in P])
    spread = float(np.max(np.ptp(mv, axis=0))) if len(P) > 1 else 0.0
    rows = []
    for p, lp, sp in zip(P, lag.points, spc.points):
        rows.append(list(p) + [lp.residual, max(map(abs, lp.omega_brackets), default=0.0),
                               lp.gram_det, sp.parity_value, sp.frame_verdict,
                               bool(lp.passed and sp.passed)])
    passed = lag.passed and spc.passed and spread < tol["moment"] and len(P) == count
    results = {"family": "torus", "m": m, "k": k, "c": spec.c, "requested": count,
               "sampled": len(P), "newton_failures": failures,
               "max_bracket": lag.max_bracket,
               "max_parity": max((abs(q.parity_value) for q in spc.points), default=0.0),
               "moment_spread": spread,
               "notes": sorted({q.note for q in spc.points if q.note})}
    header = ([f"x{i + 1}" for i in range(m)] + [f"y{i + 1}" for i in range(m)]
              + ["residual", "max_bracket", "gram_det", "parity_value", "frame_verdict", "passed"])
    return bool(passed), results, tol, (header, rows)


def _gen_rot(params, rng, count):
    from .generators import RotFoldSpec, SingularConeWarning, rotfold_sample
    from .indlinalg import HermitianForm
    from .planes import is_special_plane

    tol = _tolerances({"plane": 1e-8, "phase": 1e-7}, params, "plane")
    m, k = int(params["m"]), int(params["k"])
    cs = _floats(params["c"])
    if len(cs) != 1:
        raise ConfigError("rot needs a single constant --c")
    c = cs[0]
    branch = params.get("branch")
    if branch is None:
        branch = 0 if c >= 0 else 1
    spec = RotFoldSpec(m, k, c, params["causal"], int(branch))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SingularConeWarning)
        samples = rotfold_sample(spec, count, rng)
    cone = any(issubclass(w.category, SingularConeWarning) for w in caught)
    form = HermitianForm(k, m)
    rows, phases, ok_all = [], [], True
    for s in samples:
        v = is_special_plane(s.frame, form, tol["plane"])
        ph = v.phase if v.phase is not None else complex("nan")
        phases.append(ph)
        ok_all &= v.special
        rows.append(list(s.point) + [s.lam.real, s.lam.imag, ph.real, ph.imag, s.so_moment,
                                     v.verdict, v.special])
    ph = np.array(phases)
    dev = float(np.max(np.abs(ph - ph[0]))) if ph.size else 0.0
    passed = ok_all and dev < tol["phase"]
    results = {"family": "rot", "m": m, "k": k, "c": c, "causal": spec.causal,
               "branch": spec.branch, "sampled": len(samples), "phase_deviation": dev,
               "singular_cone_warning": cone}
    header = ([f"x{i + 1}" for i in range(m)] + [f"y{i + 1}" for i in range(m)]
              + ["lambda_re", "lambda_im", "phase_re", "phase_im", "so_moment", "verdict", "passed"])
    return bool(passed), results, tol, (header, rows)


def _gen_normal_bundle(params, rng, count):
    from .generators import (helicoid, is_austere, normal_bundle_frames, paraboloid,
                             shape_sample_from_immersion)
    from .indlinalg import HermitianForm
    from .planes import dz_phase, is_lagrangian_plane

    tol = _tolerances({"phase": 1e-8}, params, "phase")
    a = float(params["param"])
    if params["base"] == "helicoid":
        if a == 0:
            raise ConfigError("helicoid pitch must be nonzero")
        base = helicoid(a)
        qs = np.column_stack([abs(a) + rng.uniform(0.2, 1.5, count),
                              rng.uniform(0, 2 * np.pi, count)])
    else:
        base = paraboloid(a)
        qs = rng.uniform(-0.5, 0.5, size=(count, 2))
    form = HermitianForm(1, 3)
    rows, phases, ok_pred, austere = [], [], True, True
    for q in qs:
        s = shape_sample_from_immersion(base, q)
        austere &= is_austere(s, rng)
        coeff = float(rng.normal())
        nb = normal_bundle_frames(s, [coeff])
        lag = is_lagrangian_plane(nb.frame, form)
        ph = complex(dz_phase(nb.frame, form))
        pred = nb.predicted_phase
        err = abs(ph - pred) if pred is not None else float("nan")
        good = lag == "lagrangian" and err < tol["phase"]
        ok_pred &= good
        phases.append(ph)
        rows.append(list(q) + [coeff, ph.real, ph.imag, err, lag, bool(good)])
    ph = np.array(phases)
    dev = float(np.max(np.abs(ph - ph[0])))
    passed = ok_pred and dev < tol["phase"]
    results = {"family": "normal-bundle", "base": base.name, "param": a, "sampled": count,
               "base_austere": bool(austere), "phase_deviation": dev,
               "phase": [float(ph[0].real), float(ph[0].imag)]}
    header = ["u1", "u2", "fiber_coeff", "phase_re", "phase_im", "prediction_error",
              "lagrangian", "passed"]
    return bool(passed), results, tol, (header, rows)


def cmd_solve(params: dict):
    from .geometry import graph_immersion, mean_curvature
    from .hypersolve import RunConfig, run, solution_to_potential, write_snapshots

    tol = _tolerances({"energy_growth": 0.05, "nondegeneracy": 0.5, "mean_curvature": 1e-2},
                      params, "energy_growth")
    data = params.get("data")
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--data is not valid JSON: {exc}") from None
    window = params.get("slab_window")
    if isinstance(window, str):
        window = _floats(window)
    T = float(params["T"])
    if window is None:
        # centered on T/2, wide enough for the slab stencils' margins
        half = max(0.05 * T, 8 * float(params["cfl"]) * float(params["dx"]))
        window = [max(0.0, 0.5 * T - half), min(T, 0.5 * T + half)]
    if len(window) != 2:
        raise ConfigError("slab window needs two times")
    kw = dict(m=int(params["m"]), eps=float(params["eps"]), extent=float(params["extent"]),
              dx=float(params["dx"]), cfl=float(params["cfl"]), T=T,
              boundary=params["boundary"], output_cadence=int(params["output_cadence"]),
              snapshot_cadence=int(params["snapshot_cadence"]), slab_window=list(window),
              nonlinear=not params.get("linear", False))
    if data is not None:
        kw["data"] = data
    cfg = RunConfig.from_dict(kw)
    res = run(cfg)
    if params.get("snapshots"):
        write_snapshots(params["snapshots"], res.snapshots, res.final.dx, res.final.dt)
    results = {"steps": res.final.step, "t_final": res.final.t, "dt": res.final.dt,
               "spacelike_margin": res.spacelike_margin, "energy_growth": res.energy_growth,
               "nondegeneracy_min": res.nondegeneracy_min, "max_abs_u": res.max_abs_u,
               "blowup": None}
    header = ["step", "t", "sl_residual_max", "nondegeneracy_min", "energy", "max_abs_u"]
    rows = [list(r) for r in res.rows]
    if res.blowup is not None:
        results["blowup"] = {"message": str(res.blowup), "time": res.blowup.time}
        return None, results, tol, (header, rows)
    passed = res.energy_growth < tol["energy_growth"] and res.nondegeneracy_min > tol["nondegeneracy"]
    if res.slab is not None and len(res.slab.times) >= 12:
        results["slab_residual"] = res.slab.residual()
        lo, hi = res.slab.times[2], res.slab.times[-3]
        pot = solution_to_potential(res.slab, (lo, hi))
        imm = graph_immersion(pot, 1)
        rng = np.random.default_rng(int(params["seed"]))
        half = 0.5 * cfg.extent
        pts = np.column_stack([rng.uniform(lo, hi, 5),
                               rng.uniform(-half, half, size=(5, cfg.m - 1))])
        hmax = max(float(np.linalg.norm(mean_curvature(imm, p))) for p in pts)
        results["slab_mean_curvature_max"] = hmax
        passed = passed and hmax < tol["mean_curvature"]
    return bool(passed), results, tol, (header, rows)


def cmd_second_variation(params: dict):
    from .expr import parse_potential
    from .geometry import graph_immersion
    from .varcheck import (Region, flat_closed_form, growth_scan, instability_probe,
                           spacelike_plane, timelike_plane)

    tol = _tolerances({"r2": 0.99, "closed_form": 1e-6, "minimal": 1e-3}, params, "closed_form")
    base = params["base"]
    center = _floats(params["center"])
    delta = params.get("delta")
    if base == "timelike-plane":
        imm, delta = timelike_plane(), float(delta or 1.0)
    elif base == "spacelike-plane":
        imm, delta = spacelike_plane(), float(delta or 1.0)
    else:
        u, _ = parse_potential(str(params["potential"]), 2)
        imm, delta = graph_immersion(u, 1), float(delta or 0.5)
    region = Region(tuple(center), delta)
    q_max = int(params["q_max"])
    lohi = [int(v) for v in _floats(params["fit_range"])]
    if len(lohi) != 2 or not 1 <= lohi[0] < lohi[1]:
        raise ConfigError("fit range must be q_lo,q_hi with 1 <= q_lo < q_hi")
    nodes = int(params["transverse_nodes"])
    probe = instability_probe(imm, region, q_max=q_max, normal=params["normal"],
                              transverse_nodes=nodes, minimal_tol=tol["minimal"])
    qs = list(range(lohi[0], lohi[1] + 1))
    rows, fits = [], {}
    for label, axis in (("pos", probe.axis_pos), ("neg", probe.axis_neg)):
        scan, fit = growth_scan(imm, region, axis, qs, params["normal"], nodes)
        fits[label] = {"axis": axis, "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
        rows += [[label, axis, q, v] for q, v in scan]
    passed = (fits["pos"]["slope"] > 0 and fits["neg"]["slope"] < 0
              and min(fits["pos"]["r2"], fits["neg"]["r2"]) > tol["r2"])
    results = {"base": imm.name, "region": {"center": list(region.center), "delta": delta},
               "probe": probe.to_dict(), "fits": fits}
    if base == "timelike-plane":
        sn = 1.0 if params["normal"] == "spacelike" else -1.0
        cf_pos = flat_closed_form(probe.q_pos, delta, probe.axis_pos, [-1, 1], sn)
        cf_neg = flat_closed_form(probe.q_neg, delta, probe.axis_neg, [-1, 1], sn)
        err = max(abs(cf_pos - probe.v_pos), abs(cf_neg - probe.v_neg))
        results["closed_form"] = {"V_pos": cf_pos, "V_neg": cf_neg, "max_error": err}
        passed = passed and err < tol["closed_form"]
    return bool(passed), results, tol, (["witness", "axis", "q", "V2"], rows)


def cmd_null_check(params: dict):
    from .hypersolve import null_condition_check

    tol = _tolerances({"violation": 1e-10, "control": 1e-12}, params, "violation")
    n = int(params["samples"])
    if n < 1:
        raise ConfigError("samples must be positive")
    rep = null_condition_check(n, np.random.default_rng(int(params["seed"])))
    d = rep.to_dict()
    passed = (rep.max_violation < tol["violation"] and rep.generic_control_min > tol["control"]
              and rep.q0_nonnull_control_min > tol["control"])
    rows = [[k, d[k]] for k in sorted(d)]
    return bool(passed), d, tol, (["quantity", "value"], rows)


COMMANDS = {
    "verify-graph": cmd_verify_graph,
    "gen": cmd_gen,
    "solve": cmd_solve,
    "second-variation": cmd_second_variation,
    "null-check": cmd_null_check,
}


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    command = args.command
    try:
        params = resolve(args)
        if params.get("format") not in ("json", "csv"):
            raise ConfigError("format must be 'json' or 'csv'")
        passed, results, tol, table = COMMANDS[command](params)
    except (InvalidInputError, DegenerateError, ConvergenceError) as exc:
        print(f"indefsl {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:  # raised before a run could record it
        print(f"indefsl {command}: blow-up at t={exc.time}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    if passed is None:
        code = EXIT_BLOWUP
    else:
        code = EXIT_PASS if passed else EXIT_FAIL
    echo = {k: v for k, v in params.items() if k not in ("out", "format", "_tolerances")}
    meta = {"tool": "indefsl", "version": __version__, "subcommand": command,
            "seed": params["seed"], "config": echo, "tolerances": tol,
            "passed": bool(passed), "exit_code": code}
    if params["format"] == "json":
        text = dumps(dict(meta, results=results))
    else:
        text = render_csv(meta, *table)
    _emit(text, params.get("out"))
    if code != EXIT_PASS:
        print(f"indefsl {command}: exit {code}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
