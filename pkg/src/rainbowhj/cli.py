"""Command-line interface.

    rainbow-hj price-mc    --config run.json [--seed N] [--paths N] [--workers N]
    rainbow-hj price-pde   --config run.json [--slices initial|terminal|all]
    rainbow-hj closed-form --config run.json
    rainbow-hj hopf-lax    --config run.json
    rainbow-hj verify      --config run.json
    rainbow-hj convergence --config run.json

Exit codes: 0 success, 1 check failure, 2 validation error, 3 runtime error,
4 unsupported dimension, 5 Hamilton-Jacobi domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .correspondence import hamiltonian_residual, short_map_check, solution_metric
from .errors import (
    CflViolation,
    HJDomainError,
    RainbowError,
    UnsupportedDimension,
    ValidationError,
)
from .hamilton_jacobi import (
    HJProblem,
    abs_hamiltonian,
    abs_initial,
    affine_initial,
    bracket_radius,
    hopf_lax_solve,
    legendre_transform,
    max_call_initial,
    polynomial_hamiltonian,
    power4_hamiltonian,
    quadratic_hamiltonian,
    semigroup_residual,
)
from .market_model import MarketModel, OptionSpec, payoff_max_call, term_count, validate_model
from .montecarlo import PathConfig, mc_price
from .pde import GridSpec, bs_closed_form_1d, closed_form_surface, default_grid, solve_bs_pde

EXIT_OK, EXIT_CHECK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_DIMENSION, EXIT_HJ = 0, 1, 2, 3, 4, 5

_num = {"type": "number"}
_int = {"type": "integer"}
_nums = {"type": "array", "items": _num, "minItems": 1}
_num_or_nums = {"oneOf": [_num, _nums]}
_int_or_ints = {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "array", "items": _int, "minItems": 1}]}
_axis = {
    "type": "object",
    "additionalProperties": False,
    "required": ["min", "max", "nodes"],
    "properties": {"min": _num_or_nums, "max": _num_or_nums, "nodes": _int_or_ints},
}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


CONFIG_SCHEMA = _section(
    {
        "market": _section(
            {
                "spot": _nums,
                "vol": _nums,
                "rate": _num,
                "corr": {"type": "array", "items": _nums},
                "drift": _nums,
            },
            ["spot", "vol", "rate"],
        ),
        "option": _section(
            {"kind": {"enum": ["max-call"]}, "strike": _num, "maturity": _num},
            ["strike", "maturity"],
        ),
        "mc": _section(
            {
                "n_paths": _int,
                "seed": {"type": "integer", "minimum": 0},
                "antithetic": {"type": "boolean"},
                "workers": {"type": "integer", "minimum": 1},
            },
            ["n_paths"],
        ),
        "grid": _section(
            {
                "nodes": _int_or_ints,
                "time_steps": _int,
                "scheme": {"enum": ["theta-1d", "adi-2d", "explicit-2d"]},
                "theta": _num,
                "x_min": _num_or_nums,
                "x_max": _num_or_nums,
                "width": _num_or_nums,
                "rannacher": _int,
                "adi": {"enum": ["mcs", "douglas"]},
            },
            ["nodes", "time_steps"],
        ),
        "hj": _section(
            {
                "dimension": {"type": "integer", "minimum": 1},
                "hamiltonian": _section(
                    {
                        "kind": {"enum": ["quadratic", "power-4", "abs", "polynomial"]},
                        "coefficients": _nums,
                    },
                    ["kind"],
                ),
                "initial": _section(
                    {
                        "kind": {"enum": ["affine", "abs", "max-call"]},
                        "slope": _num_or_nums,
                        "intercept": _num,
                        "strike": _num,
                        "lipschitz": _num,
                    },
                    ["kind"],
                ),
                "times": _nums,
                "x_grid": _axis,
                "p_grid": _axis,
                "q_grid": _axis,
            },
            ["hamiltonian", "initial", "times"],
        ),
        "verify": _section(
            {
                "checks": {
                    "type": "array",
                    "items": {"enum": ["residual", "metric", "short_map", "semigroup", "term_count"]},
                },
                "seed": {"type": "integer", "minimum": 0},
                "residual_nodes": {"type": "array", "items": _int, "minItems": 2},
                "short_map_scale": _num,
                "short_map_pairs": _int,
                "short_map_dims": {"type": "array", "items": _int, "minItems": 1},
                "metric_triples": _int,
                "semigroup_nodes": _int,
                "term_count_max": _int,
            }
        ),
        "convergence": _section(
            {
                "method": {"enum": ["pde", "mc"]},
                "ladder": {"type": "array", "items": _int, "minItems": 1},
                "seeds": {"type": "integer", "minimum": 1},
            },
            ["method", "ladder"],
        ),
        "output": _section({"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}}),
    }
)


class CheckFailed(Exception):
    pass


def load_config(path) -> dict:
    """Parse and schema-check a run configuration; raises ValidationError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise ValidationError(f"config{where}: {exc.message}") from exc
    return cfg


def _require(cfg: dict, *sections: str) -> None:
    missing = [s for s in sections if s not in cfg]
    if missing:
        raise ValidationError(f"config is missing section(s): {', '.join(missing)}")


def build_market(cfg: dict):
    m = cfg["market"]
    n = len(m["spot"])
    corr = m.get("corr", np.eye(n).tolist())
    model = MarketModel(spot=m["spot"], vol=m["vol"], rate=m["rate"], corr=corr, drift=m.get("drift"))
    return validate_model(model)


def build_option(cfg: dict) -> OptionSpec:
    o = cfg["option"]
    return OptionSpec(strike=o["strike"], maturity=o["maturity"], kind=o.get("kind", "max-call"))


def build_paths(cfg: dict, args) -> PathConfig:
    mc = cfg["mc"]
    return PathConfig(
        n_paths=args.paths if args.paths is not None else mc["n_paths"],
        seed=args.seed if args.seed is not None else mc.get("seed", 0),
        antithetic=mc.get("antithetic", False),
        workers=args.workers if args.workers is not None else mc.get("workers", 1),
    )


def build_grid(cfg: dict, model, option, nodes=None, time_steps=None) -> GridSpec:
    g = cfg["grid"]
    nodes = g["nodes"] if nodes is None else nodes
    time_steps = g["time_steps"] if time_steps is None else time_steps
    if model.n > 2:
        raise UnsupportedDimension(model.n)
    scheme = g.get("scheme")
    if "x_min" in g or "x_max" in g:
        if not ("x_min" in g and "x_max" in g):
            raise ValidationError("grid.x_min and grid.x_max must be given together")
        return GridSpec(
            g["x_min"], g["x_max"],
            tuple(nodes) if isinstance(nodes, list) else (nodes,) * model.n,
            time_steps,
            scheme or ("theta-1d" if model.n == 1 else "adi-2d"),
            g.get("theta", 0.5),
            g.get("rannacher", 0),
            g.get("adi", "mcs"),
        )
    grid = default_grid(
        model, option, nodes, time_steps, scheme, g.get("theta", 0.5), g.get("width"), g.get("rannacher", 0)
    )
    if "adi" in g:
        grid = GridSpec(grid.x_min, grid.x_max, grid.nodes, grid.time_steps, grid.scheme, grid.theta, grid.rannacher, g["adi"])
    return grid


def _axes(axis_cfg: dict, n: int):
    def per_dim(v):
        return list(v) if isinstance(v, list) else [v] * n

    lo, hi, nodes = per_dim(axis_cfg["min"]), per_dim(axis_cfg["max"]), per_dim(axis_cfg["nodes"])
    if not len(lo) == len(hi) == len(nodes) == n:
        raise ValidationError(f"grid axes must have {n} entries")
    return tuple(np.linspace(a, b, k) for a, b, k in zip(lo, hi, nodes))


def build_hj(cfg: dict):
    hj = cfg["hj"]
    n = hj.get("dimension", 1)
    hk = hj["hamiltonian"]["kind"]
    if hk == "quadratic":
        H = quadratic_hamiltonian(n)
    elif hk == "power-4":
        H = power4_hamiltonian(n)
    elif hk == "abs":
        H = abs_hamiltonian(n)
    else:
        if n != 1 or "coefficients" not in hj["hamiltonian"]:
            raise ValidationError("hj.hamiltonian: polynomial needs dimension 1 and coefficients")
        H = polynomial_hamiltonian(hj["hamiltonian"]["coefficients"])
    ini = hj["initial"]
    if ini["kind"] == "affine":
        slope = np.atleast_1d(np.asarray(ini.get("slope", 1.0), dtype=float))
        if slope.size == 1:
            slope = np.full(n, slope[0])
        if slope.size != n:
            raise ValidationError(f"hj.initial.slope must have {n} entries")
        g, lip = affine_initial(slope, ini.get("intercept", 0.0)), float(np.linalg.norm(slope))
    elif ini["kind"] == "abs":
        g, lip = abs_initial(), 1.0
    else:
        g, lip = max_call_initial(ini.get("strike", 0.0)), 1.0
    lip = ini.get("lipschitz", lip)
    problem = HJProblem(H, g, lip, n)
    p_axes = _axes(hj.get("p_grid", {"min": -10.0, "max": 10.0, "nodes": 4001 if n == 1 else 161}), n)
    q_axes = _axes(hj.get("q_grid", {"min": -3.0, "max": 3.0, "nodes": 601 if n == 1 else 61}), n)
    x_axes = _axes(hj.get("x_grid", {"min": -3.0, "max": 3.0, "nodes": 601 if n == 1 else 61}), n)
    return problem, p_axes, q_axes, x_axes, hj["times"]


# -- output --------------------------------------------------------------------

def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _write(text: str, path) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit(args, summary: dict, table_text: str | None = None) -> None:
    """Route the primary artifact to --output/stdout and the summary alongside."""
    if args.format == "json" or table_text is None:
        _write(_json_text(summary), args.output)
        return
    _write(table_text, args.output)
    if not args.quiet:
        (sys.stdout if args.output else sys.stderr).write(_json_text(summary))


# -- commands ------------------------------------------------------------------

def cmd_price_mc(cfg, args) -> int:
    _require(cfg, "market", "option", "mc")
    model, option, paths = build_market(cfg), build_option(cfg), build_paths(cfg, args)
    est = mc_price(model, option, paths)
    result = {"price": est.price, "std_error": est.std_error, "n_paths": est.n_paths, "seed": paths.seed}
    table = _csv_text(list(result), [list(result.values())])
    _emit(args, result, table)
    return EXIT_OK


def cmd_closed_form(cfg, args) -> int:
    _require(cfg, "market", "option")
    model, option = build_market(cfg), build_option(cfg)
    if model.n != 1:
        raise UnsupportedDimension(model.n, "1")
    price = bs_closed_form_1d(model.spot[0], option.strike, model.rate, float(model.vol[0]), option.maturity)
    result = {"price": price}
    _emit(args, result, _csv_text(["price"], [[price]]))
    return EXIT_OK


def cmd_price_pde(cfg, args) -> int:
    _require(cfg, "market", "option", "grid")
    model, option = build_market(cfg), build_option(cfg)
    grid = build_grid(cfg, model, option)
    surface = solve_bs_pde(model, option, grid, save_every=1 if args.slices == "all" else None)
    idx = {"initial": [0], "terminal": [len(surface.times) - 1], "all": None}[args.slices]
    summary = {
        "price_at_spot": surface.price_at(model.spot, 0),
        "grid": {
            "x_min": list(grid.x_min),
            "x_max": list(grid.x_max),
            "nodes": list(grid.nodes),
            "time_steps": grid.time_steps,
        },
        "scheme": grid.scheme,
    }
    _emit(args, summary, surface.to_csv(time_indices=idx))
    return EXIT_OK


def cmd_hopf_lax(cfg, args) -> int:
    _require(cfg, "hj")
    problem, p_axes, q_axes, x_axes, times = build_hj(cfg)
    L = legendre_transform(problem.hamiltonian, p_axes, q_axes, unbracketed="raise")
    radius = bracket_radius(L, problem.lipschitz)
    surface = hopf_lax_solve(problem, L, x_axes, times)
    summary = {
        "bracket_radius": radius,
        "hamiltonian": problem.hamiltonian.name,
        "lipschitz": problem.lipschitz,
        "times": [float(t) for t in surface.times],
    }
    _emit(args, summary, surface.to_csv())
    return EXIT_OK


def _residual_check(cfg, v) -> dict:
    if "market" in cfg and "option" in cfg:
        model, option = build_market(cfg), build_option(cfg)
        s0 = float(model.spot[0])
        model = validate_model(MarketModel.single(s0, float(model.vol[0]), model.rate))
    else:
        model, option, s0 = validate_model(MarketModel.single(100.0, 0.2, 0.05)), OptionSpec(100.0, 1.0), 100.0
    ladder = v.get("residual_nodes", [51, 101, 201, 401])
    centre = math.log(s0)
    width = max(5 * float(model.vol[0]) * math.sqrt(option.maturity), 0.5)
    errs, hs = [], []
    for n_nodes in ladder:
        x = np.linspace(centre - width, centre + width, n_nodes)
        t = np.linspace(0.0, 0.5 * option.maturity, n_nodes)
        rep = hamiltonian_residual(model, closed_form_surface(model, option, x, t))
        errs.append(rep.max_abs)
        hs.append(x[1] - x[0])
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return {"passed": slope >= 1.8, "max_abs": errs, "mesh_width": hs, "slope": slope}


def _metric_check(v, rng) -> dict:
    triples = v.get("metric_triples", 1000)
    worst_tri = -math.inf
    ok = True
    for _ in range(triples):
        a, b, c = rng.normal(size=(3, 17)) * rng.uniform(0.1, 10.0)
        dab, dbc, dac = solution_metric(a, b), solution_metric(b, c), solution_metric(a, c)
        ok &= dab >= 0 and dab == solution_metric(b, a) and dac <= dab + dbc + 1e-12
        ok &= (dab == 0) == bool(np.all(a == b))
        worst_tri = max(worst_tri, dac - dab - dbc)
    ok &= solution_metric(a, a) == 0.0
    return {"passed": bool(ok), "triples": triples, "max_triangle_excess": worst_tri}


def _short_map_check(cfg, v, rng) -> dict:
    scale = v.get("short_map_scale", 1.0)
    k = cfg["option"]["strike"] if "option" in cfg else 100.0
    per_dim = {}
    ok = True
    for n in v.get("short_map_dims", [1, 2, 3, 8]):
        pairs = rng.uniform(0.0, 3.0 * k, size=(v.get("short_map_pairs", 10_000), 2, n))
        rep = short_map_check(lambda s: scale * payoff_max_call(s, k), pairs)
        per_dim[str(n)] = rep.max_ratio
        ok &= rep.passed
    return {"passed": bool(ok), "scale": scale, "max_ratio": per_dim}


def _semigroup_check(v) -> dict:
    nodes = v.get("semigroup_nodes", 2001)
    H = quadratic_hamiltonian()
    L = legendre_transform(H, np.linspace(-10, 10, 4001), np.linspace(-3, 3, 601))
    problem = HJProblem(H, abs_initial(), 1.0)
    x = np.linspace(-3, 3, nodes)
    res = semigroup_residual(problem, L, x, 0.5, 1.0)
    same = semigroup_residual(problem, L, x, 0.5, 0.5)
    return {"passed": res <= 2e-3 and same == 0.0, "residual": res, "residual_equal_times": same}


def _term_count_check(v) -> dict:
    n_max = v.get("term_count_max", 5)
    series = [term_count(n) for n in range(1, n_max + 1)]
    expected = [4, 7, 11, 16, 22]
    k = min(len(series), len(expected))
    return {"passed": series[:k] == expected[:k], "series": series}


def cmd_verify(cfg, args) -> int:
    v = cfg.get("verify", {})
    checks = v.get("checks", ["residual", "metric", "short_map", "semigroup", "term_count"])
    rng = np.random.default_rng(v.get("seed", 0))
    report = {}
    for name in checks:
        if name == "residual":
            report[name] = _residual_check(cfg, v)
        elif name == "metric":
            report[name] = _metric_check(v, rng)
        elif name == "short_map":
            report[name] = _short_map_check(cfg, v, rng)
        elif name == "semigroup":
            report[name] = _semigroup_check(v)
        elif name == "term_count":
            report[name] = _term_count_check(v)
    passed = all(r["passed"] for r in report.values())
    summary = {"passed": passed, "checks": report}
    rows = [[name, r["passed"]] for name, r in report.items()]
    _emit(args, summary, _csv_text(["check", "passed"], rows))
    return EXIT_OK if passed else EXIT_CHECK


def cmd_convergence(cfg, args) -> int:
    _require(cfg, "market", "option", "convergence")
    conv = cfg["convergence"]
    model, option = build_market(cfg), build_option(cfg)
    ladder = conv["ladder"]
    rows = []
    if conv["method"] == "pde":
        if model.n != 1:
            raise UnsupportedDimension(model.n, "1 (closed-form oracle)")
        ref = bs_closed_form_1d(model.spot[0], option.strike, model.rate, float(model.vol[0]), option.maturity)
        header = ["nodes", "time_steps", "mesh_width", "price", "reference", "abs_error"]
        for n_nodes in ladder:
            grid = build_grid(cfg, model, option, nodes=n_nodes, time_steps=n_nodes) if "grid" in cfg else default_grid(
                model, option, n_nodes, n_nodes
            )
            price = solve_bs_pde(model, option, grid, save_every=None).price_at(model.spot, 0)
            rows.append([n_nodes, n_nodes, grid.spacing()[0], price, ref, abs(price - ref)])
        x_col = 2
    else:
        seeds = conv.get("seeds", 8)
        base_seed = args.seed if args.seed is not None else cfg.get("mc", {}).get("seed", 0)
        workers = args.workers if args.workers is not None else cfg.get("mc", {}).get("workers", 1)
        antithetic = cfg.get("mc", {}).get("antithetic", False)
        if model.n == 1:
            ref = bs_closed_form_1d(model.spot[0], option.strike, model.rate, float(model.vol[0]), option.maturity)
        elif model.n == 2:
            ref = solve_bs_pde(model, option, default_grid(model, option, 201, 200), save_every=None).price_at(model.spot)
        else:
            raise UnsupportedDimension(model.n, "1 or 2 (reference value)")
        header = ["n_paths", "seeds", "mean_price", "reference", "rms_error", "mean_std_error"]
        for n_paths in ladder:
            ests = [
                mc_price(model, option, PathConfig(n_paths, (base_seed + j) % 2**64, antithetic, workers))
                for j in range(seeds)
            ]
            prices = np.array([e.price for e in ests])
            rms = float(np.sqrt(np.mean((prices - ref) ** 2)))
            rows.append([n_paths, seeds, float(prices.mean()), ref, rms, float(np.mean([e.std_error for e in ests]))])
        x_col = 0
    errs = np.array([r[-2 if conv["method"] == "mc" else -1] for r in rows], dtype=float)
    xs = np.array([r[x_col] for r in rows], dtype=float)
    slope = None
    if len(rows) >= 2 and np.all(errs > 0):
        slope = float(np.polyfit(np.log(xs), np.log(errs), 1)[0])
    summary = {"method": conv["method"], "slope": slope, "rows": [dict(zip(header, r)) for r in rows]}
    _emit(args, summary, _csv_text(header, rows))
    return EXIT_OK


COMMANDS = {
    "price-mc": (cmd_price_mc, "json"),
    "price-pde": (cmd_price_pde, "csv"),
    "closed-form": (cmd_closed_form, "json"),
    "hopf-lax": (cmd_hopf_lax, "csv"),
    "verify": (cmd_verify, "json"),
    "convergence": (cmd_convergence, "csv"),
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--output", help="write the primary output here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="primary output format")
    common.add_argument("--seed", type=int, help="override mc.seed")
    common.add_argument("--paths", type=int, help="override mc.n_paths")
    common.add_argument("--workers", type=int, help="override mc.workers")
    common.add_argument("--quiet", action="store_true", help="suppress summaries and messages")
    parser = argparse.ArgumentParser(prog="rainbow-hj", description="Rainbow option pricing and HJ verification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "price-pde":
            p.add_argument("--slices", choices=["initial", "terminal", "all"], default="initial")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    fn, default_format = COMMANDS[args.command]

    def fail(code: int, exc: BaseException) -> int:
        if not args.quiet:
            sys.stderr.write(f"error: {exc}\n")
        return code

    try:
        cfg = load_config(args.config)
        out = cfg.get("output", {})
        if args.output is None:
            args.output = out.get("path")
        if args.format is None:
            args.format = out.get("format", default_format)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ValidationError(f"--seed {args.seed} must be an unsigned 64-bit integer")
        return fn(cfg, args)
    except UnsupportedDimension as exc:
        return fail(EXIT_DIMENSION, exc)
    except HJDomainError as exc:
        return fail(EXIT_HJ, exc)
    except ValidationError as exc:
        return fail(EXIT_VALIDATION, exc)
    except (CflViolation, RainbowError, ArithmeticError, ValueError, OSError) as exc:
        return fail(EXIT_RUNTIME, exc)


if __name__ == "__main__":
    sys.exit(main())
