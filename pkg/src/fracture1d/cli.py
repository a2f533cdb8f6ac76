"""Command-line entry points.

One command per invocation: cwstar, sharp, minimize, scan, sweep,
reconstruct.  Every flag can come from a config file (INI sections
named after the commands, plus an optional [model] section defining a
custom polynomial density); command-line values win.  Exit codes:
0 success, 2 domain or configuration error, 3 non-convergence under
--strict.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from . import harness, serialize
from .material import (
    MaterialModel,
    NonConvergence,
    polynomial_model,
    resolve_model,
    surface_constant_quadrature,
)
from .regularized import SolveSettings, minimize as run_minimize
from .sharp import DomainError, build_sharp_minimizer, crack_count, continuous_crack_estimate, reconstruct_deformation, v_n
from .material import c_wstar

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3


class ConfigError(ValueError):
    pass


_COMMAND_KEYS = {
    "cwstar": {"model", "abs_tol"},
    "sharp": {"model", "lambda", "mu", "out"},
    "minimize": {
        "model",
        "functional",
        "lambda",
        "mu",
        "epsilon",
        "grid",
        "max_iterations",
        "gtol",
        "multistart",
        "seed",
        "strict",
        "out",
    },
    "scan": {"model", "mu", "lambda_min", "lambda_max", "step", "out"},
    "sweep": {
        "model",
        "functional",
        "lambda",
        "mu",
        "epsilons",
        "grid",
        "max_iterations",
        "gtol",
        "multistart",
        "seed",
        "strict",
        "out",
    },
    "reconstruct": {"field", "out"},
}

_DEFAULTS = {
    "model": "lj",
    "abs_tol": 1e-10,
    "mu": 0.0,
    "out": ".",
    "functional": "V",
    "grid": 1000,
    "max_iterations": 3000,
    "gtol": 1e-8,
    "multistart": 3,
    "seed": 0,
    "strict": False,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracture1d",
        description="Sharp-interface and regularized 1d brittle-fracture energies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--model", help="material model name (default lj)")
        p.add_argument("--out", help="output directory (default .)")

    p = sub.add_parser("cwstar", help="print the surface-energy constant")
    common(p)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)

    p = sub.add_parser("sharp", help="write the sharp minimizing configurations")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)

    p = sub.add_parser("minimize", help="minimize a regularized functional")
    common(p)
    p.add_argument("--functional", choices=["E", "V"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--gtol", type=float)
    p.add_argument("--multistart", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_const", const=True)

    p = sub.add_parser("scan", help="tabulate the crack count across loads")
    common(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("sweep", help="run an epsilon sweep against the sharp limit")
    common(p)
    p.add_argument("--functional", choices=["I", "V"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--epsilons", help="comma-separated decreasing list")
    p.add_argument("--grid", type=int)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--gtol", type=float)
    p.add_argument("--multistart", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_const", const=True)

    p = sub.add_parser("reconstruct", help="recover the deformation graph from a field file")
    common(p)
    p.add_argument("--field", help="path of a saved piecewise-linear field")

    return parser


def _read_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path!r} not found")
        cp.read(path)
    return cp


def _merged_value(args, cli_name, config, section, key, cast):
    cli_value = getattr(args, cli_name, None)
    if cli_value is not None:
        return cli_value
    if config.has_option(section, key):
        raw = config.get(section, key)
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    if key in _DEFAULTS:
        return _DEFAULTS[key]
    return None


def _config_model(config: configparser.ConfigParser) -> dict[str, MaterialModel]:
    if not config.has_section("model"):
        return {}
    section = config["model"]
    unknown = set(section) - {"name", "coeffs", "growth_c", "growth_m"}
    if unknown:
        raise ConfigError(f"unknown keys in [model]: {sorted(unknown)}")
    name = section.get("name")
    coeffs = section.get("coeffs")
    if not name or not coeffs:
        raise ConfigError("[model] needs both 'name' and 'coeffs'")
    growth = None
    if "growth_c" in section or "growth_m" in section:
        if not ("growth_c" in section and "growth_m" in section):
            raise ConfigError("[model] growth constants come in pairs")
        growth = (section.getfloat("growth_c"), section.getfloat("growth_m"))
    values = [float(tok) for tok in coeffs.replace(",", " ").split()]
    return {name: polynomial_model(name, values, growth)}


_CASTS = {
    "model": str,
    "abs_tol": float,
    "lambda": float,
    "mu": float,
    "epsilon": float,
    "epsilons": str,
    "grid": int,
    "max_iterations": int,
    "gtol": float,
    "multistart": int,
    "seed": int,
    "strict": bool,
    "out": str,
    "functional": str,
    "lambda_min": float,
    "lambda_max": float,
    "step": float,
    "field": str,
}

_CLI_NAMES = {"lambda": "lam"}


def _gather(args, config) -> dict:
    command = args.command
    section = command
    if config.has_section(section):
        unknown = set(config[section]) - _COMMAND_KEYS[command]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    merged = {}
    for key in _COMMAND_KEYS[command]:
        cli_name = _CLI_NAMES.get(key, key)
        merged[key] = _merged_value(args, cli_name, config, section, key, _CASTS[key])
    return merged


def _require(merged: dict, *keys) -> None:
    missing = [k for k in keys if merged.get(k) is None]
    if missing:
        raise ConfigError(f"missing required settings: {sorted(missing)}")


def _require_positive(merged: dict, *keys) -> None:
    for k in keys:
        v = merged.get(k)
        if v is not None and v <= 0:
            raise ConfigError(f"setting {k!r} must be positive, got {v!r}")


def _out_dir(merged: dict) -> Path:
    out = Path(merged["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model(merged: dict, config) -> MaterialModel:
    try:
        return resolve_model(merged["model"], _config_model(config))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_cwstar(merged, config) -> int:
    _require_positive(merged, "abs_tol")
    model = _model(merged, config)
    value, err = surface_constant_quadrature(model, merged["abs_tol"])
    print(f"{value:.12g} +/- {err:.3g}")
    return EXIT_OK


def _cmd_sharp(merged, config) -> int:
    _require(merged, "lambda", "mu")
    lam, mu = merged["lambda"], merged["mu"]
    if lam <= 1.0:
        raise DomainError("sharp configurations require lambda > 1")
    if mu < 0.0:
        raise DomainError("mu must be nonnegative")
    model = _model(merged, config)
    out = _out_dir(merged)
    cw = c_wstar(model)
    n = crack_count(cw, mu, lam)
    x = continuous_crack_estimate(cw, mu, lam)
    stem = f"sharp_lambda{lam:g}_mu{mu:g}"
    cracks = {}
    for variant in ("A", "B"):
        minimizer = build_sharp_minimizer(n, lam, variant, cw, mu)
        serialize.write_field(out / f"{stem}_variant{variant}.field", minimizer.field)
        cracks[variant] = minimizer.cracks
        graph = reconstruct_deformation(minimizer.field)
        (out / f"{stem}_deformation_{variant}.csv").write_text(
            serialize.deformation_csv(graph), encoding="utf-8"
        )
        (out / f"{stem}_deformation_{variant}.json").write_text(
            serialize.deformation_json(graph), encoding="utf-8"
        )
    (out / f"{stem}_cracks.csv").write_text(serialize.cracks_csv(cracks), encoding="utf-8")
    summary = {
        "lambda": lam,
        "mu": mu,
        "model": model.name,
        "c_wstar": cw,
        "x": x,
        "n": n,
        "energy": v_n(n, cw, mu, lam),
    }
    (out / f"{stem}.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"n={n} energy={v_n(n, cw, mu, lam):.12g} x={x:.12g}")
    return EXIT_OK


def _settings(merged) -> SolveSettings:
    return SolveSettings(
        lam=merged["lambda"],
        epsilon=merged.get("epsilon", 1.0) or 1.0,
        mu=merged["mu"],
        grid_n=merged["grid"],
        max_iterations=merged["max_iterations"],
        gtol=merged["gtol"],
        multistart=merged["multistart"],
        seed=merged["seed"],
    )


def _cmd_minimize(merged, config) -> int:
    _require(merged, "lambda", "epsilon", "functional")
    _require_positive(merged, "lambda", "epsilon", "grid", "gtol", "max_iterations")
    model = _model(merged, config)
    out = _out_dir(merged)
    settings = _settings(merged)
    result = run_minimize(merged["functional"], model, settings)
    stem = (
        f"minimize_{merged['functional']}_lambda{merged['lambda']:g}"
        f"_mu{merged['mu']:g}_eps{merged['epsilon']:g}"
    )
    (out / f"{stem}.csv").write_text(
        serialize.discrete_csv(result.minimizer), encoding="utf-8"
    )
    metadata = {
        "functional": merged["functional"],
        "lambda": merged["lambda"],
        "mu": merged["mu"],
        "epsilon": merged["epsilon"],
        "grid_n": merged["grid"],
        "seed": merged["seed"],
        "model": model.name,
    }
    (out / f"{stem}.json").write_text(
        serialize.solve_summary_json(result, metadata), encoding="utf-8"
    )
    print(
        f"energy={result.energy:.12g} rescaled={result.rescaled_energy:.12g} "
        f"transitions={result.transition_count} converged={result.converged}"
    )
    if merged["strict"] and not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_scan(merged, config) -> int:
    _require(merged, "mu", "lambda_min", "lambda_max", "step")
    _require_positive(merged, "step")
    if merged["lambda_min"] < 1.0 or merged["lambda_max"] <= merged["lambda_min"]:
        raise ConfigError("scan needs 1 <= lambda-min < lambda-max")
    model = _model(merged, config)
    out = _out_dir(merged)
    report = harness.crack_scan(
        (merged["lambda_min"], merged["lambda_max"]), merged["step"], merged["mu"], model
    )
    stem = f"scan_mu{merged['mu']:g}"
    (out / f"{stem}.csv").write_text(serialize.scan_csv(report), encoding="utf-8")
    (out / f"{stem}.json").write_text(serialize.scan_json(report), encoding="utf-8")
    print(f"rows={len(report.rows)}")
    return EXIT_OK


def _cmd_sweep(merged, config) -> int:
    _require(merged, "lambda", "epsilons", "functional")
    _require_positive(merged, "lambda", "grid", "gtol", "max_iterations")
    epsilons = [float(tok) for tok in merged["epsilons"].replace(",", " ").split()]
    model = _model(merged, config)
    out = _out_dir(merged)
    base = SolveSettings(
        lam=merged["lambda"],
        epsilon=1.0,
        mu=merged["mu"],
        grid_n=merged["grid"],
        max_iterations=merged["max_iterations"],
        gtol=merged["gtol"],
        multistart=merged["multistart"],
        seed=merged["seed"],
    )
    if merged["functional"] == "I":
        report = harness.gamma_sweep_I(
            merged["lambda"], model, epsilons, merged["grid"], base
        )
    else:
        report = harness.gamma_sweep_V(
            merged["lambda"], merged["mu"], model, epsilons, merged["grid"], base
        )
    stem = f"sweep_{merged['functional']}_lambda{merged['lambda']:g}_mu{merged['mu']:g}"
    (out / f"{stem}.csv").write_text(serialize.sweep_csv(report), encoding="utf-8")
    (out / f"{stem}.json").write_text(serialize.sweep_json(report), encoding="utf-8")
    not_converged = [row.epsilon for row in report.rows if not row.converged]
    print(f"rows={len(report.rows)} unconverged={len(not_converged)}")
    if merged["strict"] and not_converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_reconstruct(merged, config) -> int:
    _require(merged, "field")
    path = Path(merged["field"])
    if not path.is_file():
        raise ConfigError(f"field file {path} not found")
    parsed = serialize.parse_field(path.read_text(encoding="utf-8"))
    graph = reconstruct_deformation(parsed)
    out = _out_dir(merged)
    stem = path.stem + "_deformation"
    (out / f"{stem}.csv").write_text(serialize.deformation_csv(graph), encoding="utf-8")
    (out / f"{stem}.json").write_text(serialize.deformation_json(graph), encoding="utf-8")
    print(f"segments={len(graph.segments)} jumps={len(graph.jumps)}")
    return EXIT_OK


_HANDLERS = {
    "cwstar": _cmd_cwstar,
    "sharp": _cmd_sharp,
    "minimize": _cmd_minimize,
    "scan": _cmd_scan,
    "sweep": _cmd_sweep,
    "reconstruct": _cmd_reconstruct,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _read_config(getattr(args, "config", None))
        merged = _gather(args, config)
        return _HANDLERS[args.command](merged, config)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
