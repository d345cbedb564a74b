"""Command-line interface: ``nl-spectra <subcommand>``.

Inline descriptor arguments (``--sigma``, ``--model``) take a JSON object or
``@path`` to a file containing one.  Sweeps read a declarative INI config
with ``[sweep]``, ``[model]`` and ``[sigma]`` sections.  Every run echoes its
fully resolved configuration and the tool version into the output (CSV
comment header or JSON ``meta``) for provenance.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys

import numpy as np

from . import __version__
from .experiments import (
    SweepConfig,
    TableResult,
    emit_results,
    run_detection,
    run_phase_sweep,
    run_spectrum_experiment,
    run_transfer_table,
)
from .laplacian import build_compressed, build_laplacian, compress_vector
from .models import Eta, ModelSpec, SparsityMode, sample_observation, sample_planted_clique
from .nonlin import Zero, sigma_from_json_obj, sigma_to_json_obj
from .optimize import OptimizeConfig, heatmap_sweep, optimize_family
from .spectra import summarize
from .theory import DEFAULT_QUADRATURE, beta_star, free_conv_density


def _read_descriptor(text: str) -> dict:
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as f:
            text = f.read()
    return json.loads(text)


def _sigma_arg(text: str):
    return sigma_from_json_obj(_read_descriptor(text))


def _model_arg(text: str) -> dict:
    return _read_descriptor(text)


def _model_from_descriptor(desc: dict) -> ModelSpec:
    if desc.get("kind", "sparse_biased") != "sparse_biased":
        raise ValueError(f"expected a sparse_biased model descriptor, got {desc.get('kind')!r}")
    return ModelSpec.from_json_obj(desc)


def _parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` (step size, inclusive right end up to rounding)."""
    a, b, step = (float(v) for v in text.split(":"))
    if step <= 0:
        raise ValueError("grid step must be > 0")
    return np.arange(a, b + step / 2, step)


def _parse_beta_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        a, b, count = text.split(":")
        return tuple(np.linspace(float(a), float(b), int(count)))
    return tuple(float(v) for v in text.split(","))


def _meta(args: argparse.Namespace, extra: dict | None = None) -> dict:
    meta = {"tool": "nl-spectra", "version": __version__, "command": args.command, "numpy": np.__version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func", "out"):
            continue
        meta[f"arg.{key}"] = value if isinstance(value, (int, float, bool, str)) else str(value)
    if extra:
        meta.update(extra)
    return meta


def _emit_json(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _cmd_simulate(args: argparse.Namespace) -> int:
    desc = args.model
    sigma = args.sigma
    if desc.get("kind") == "planted_clique":
        inst = sample_planted_clique(args.n, float(desc["beta"]), args.seed)
    else:
        inst = sample_observation(_model_from_descriptor(desc), args.n, args.seed)
    if args.compressed:
        m = build_compressed(inst.y_hat, sigma)
        x = compress_vector(inst.x) if inst.x.any() else None
    else:
        m = build_laplacian(inst.y_hat, sigma)
        x = inst.x if inst.x.any() else None
    summary = summarize(m, x)
    obj = summary.to_json_obj()
    obj["meta"] = _meta(args)
    _emit_json(obj, args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cp = configparser.ConfigParser()
    with open(args.config, "r", encoding="utf-8") as f:
        cp.read_file(f)
    sw = cp["sweep"]
    mdl = cp["model"]
    eta_kind = mdl.get("eta", "point_mass")
    if eta_kind == "point_mass":
        eta = Eta("point_mass", c=mdl.getfloat("eta_c", 1.0))
    elif eta_kind == "half_normal":
        eta = Eta("half_normal")
    else:
        eta = Eta(
            "discrete",
            atoms=tuple(float(v) for v in mdl.get("atoms").split(",")),
            weights=tuple(float(v) for v in mdl.get("weights").split(",")),
        )
    model = ModelSpec(
        eta=eta,
        p=mdl.getfloat("p", 0.05),
        sparsity_mode=SparsityMode(mdl.get("sparsity_mode", "random_subset")),
    )
    sigma = sigma_from_json_obj(json.loads(cp["sigma"]["descriptor"])) if cp.has_section("sigma") else Zero()
    config = SweepConfig(
        model=model,
        sigma=sigma,
        n=sw.getint("n"),
        beta_grid=_parse_beta_grid(sw.get("beta_grid")),
        trials=sw.getint("trials"),
        seed=sw.getint("seed", 0),
        use_compressed=sw.getboolean("use_compressed", True),
        statistics=tuple(s.strip() for s in sw.get("statistics", "lambda1_L, overlap").split(",")),
        p_rule=sw.get("p_rule", "fixed"),
        workers=sw.getint("workers", 1),
    )
    result = run_phase_sweep(config)
    result.meta = _meta(args, {f"config.{s}.{k}": v for s in cp.sections() for k, v in cp[s].items()})
    emit_results(result, args.out, "csv")
    return 0


def _cmd_density(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.grid)
    q = DEFAULT_QUADRATURE
    if args.eps is not None:
        from dataclasses import replace

        q = replace(q, inversion_epsilon=args.eps)
    res = free_conv_density(args.sigma, grid, q)
    table = TableResult(
        header=["x", "density", "converged"],
        rows=[[float(x), float(d), int(c)] for x, d, c in zip(res.x, res.density, res.converged)],
        meta=_meta(args),
    )
    emit_results(table, args.out, "csv")
    return 0


def _cmd_threshold(args: argparse.Namespace) -> int:
    model = _model_from_descriptor(args.model)
    value = beta_star(args.sigma, model)
    _emit_json({"beta_star": value, "meta": _meta(args)}, args.out)
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    model = _model_from_descriptor(args.model)
    config = OptimizeConfig(
        family=args.family,
        max_evals=args.max_evals,
        restarts=args.restarts,
        seed=args.seed,
        step_knots=args.step_knots,
    )
    sigma, value, evals = optimize_family(args.family, model, config)
    _emit_json(
        {
            "params": sigma_to_json_obj(sigma),
            "beta_star": value,
            "evals": evals,
            "meta": _meta(args),
        },
        args.out,
    )
    return 0


def _cmd_heatmap(args: argparse.Namespace) -> int:
    model = _model_from_descriptor(args.model)
    fixed = {}
    for item in args.fixed or []:
        name, value = item.split("=")
        fixed[name] = float(value)
    grids = {}
    for spec in (args.grid_x, args.grid_y):
        name, lo, hi, count = spec.split(":")
        grids[name] = np.linspace(float(lo), float(hi), int(count))
    result = heatmap_sweep(args.family, model, fixed, grids)
    table = TableResult(
        header=[f"{result.yname}\\{result.xname}"] + [format(v, ".17g") for v in result.xvals],
        rows=[[float(yv)] + [float(v) for v in row] for yv, row in zip(result.yvals, result.values)],
        meta=_meta(args),
    )
    emit_results(table, args.out, "csv")
    return 0


def _cmd_transfer(args: argparse.Namespace) -> int:
    sigmas = [sigma_from_json_obj(d) for d in map(_read_descriptor, args.sigma)]
    models = [_model_from_descriptor(d) for d in map(_read_descriptor, args.model)]
    table = run_transfer_table(sigmas, models)
    table.meta = _meta(args)
    emit_results(table, args.out, "csv")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    model = _model_from_descriptor(args.model)
    report = run_detection(
        model,
        args.sigma,
        args.n,
        args.tau,
        args.trials,
        args.seed,
        statistic=args.statistic,
        use_compressed=args.compressed,
    )
    obj = report.to_json_obj()
    obj["meta"] = _meta(args)
    _emit_json(obj, args.out)
    return 0


def _cmd_spectrum(args: argparse.Namespace) -> int:
    model = _model_from_descriptor(args.model)
    result = run_spectrum_experiment(model, args.sigma, args.n, args.seed, bins=args.bins)
    result.meta = _meta(args)
    emit_results(result, args.out, "csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nl-spectra", description=__doc__)
    parser.add_argument("--version", action="version", version=f"nl-spectra {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sigma(p, required=False):
        p.add_argument(
            "--sigma",
            type=_sigma_arg,
            default=None if required else Zero(),
            required=required,
            help='nonlinearity descriptor JSON or @file, e.g. \'{"family":"tanh","params":{"a":1.7,"b":0.58}}\'',
        )

    p = sub.add_parser("simulate", help="sample one instance and summarize its deformed spectrum")
    p.add_argument("--model", type=_model_arg, required=True)
    add_sigma(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compressed", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a phase-transition sweep from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("density", help="bulk density of the deformed spectrum on a grid")
    add_sigma(p)
    p.add_argument("--grid", required=True, help="a:b:step (use --grid=... when a is negative)")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("threshold", help="critical signal strength for a nonlinearity/model pair")
    add_sigma(p)
    p.add_argument("--model", type=_model_arg, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("optimize", help="minimize the threshold over a nonlinearity family")
    p.add_argument("--family", choices=["tanh", "z_shaped", "step"], required=True)
    p.add_argument("--model", type=_model_arg, required=True)
    p.add_argument("--max-evals", type=int, default=2000, dest="max_evals")
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-knots", type=int, default=16, dest="step_knots")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("heatmap", help="threshold heatmap over two family parameters")
    p.add_argument("--family", choices=["tanh", "z_shaped"], required=True)
    p.add_argument("--model", type=_model_arg, required=True)
    p.add_argument("--fixed", action="append", help="name=value, repeatable")
    p.add_argument("--grid-x", required=True, dest="grid_x", help="name:lo:hi:count")
    p.add_argument("--grid-y", required=True, dest="grid_y", help="name:lo:hi:count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("transfer", help="threshold cross table: nonlinearities x models")
    p.add_argument("--sigma", action="append", required=True, help="descriptor JSON or @file, repeatable")
    p.add_argument("--model", action="append", required=True, help="descriptor JSON or @file, repeatable")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_transfer)

    p = sub.add_parser("detect", help="type-I/II error of a thresholding detector")
    p.add_argument("--model", type=_model_arg, required=True)
    add_sigma(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--statistic", choices=["lambda1_L", "lambda1_Y", "max_row"], default="lambda1_L")
    p.add_argument("--compressed", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("spectrum", help="eigenvalue histogram with analytic overlay for one instance")
    p.add_argument("--model", type=_model_arg, required=True)
    add_sigma(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
