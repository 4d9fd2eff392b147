"""Command line interface.

Every subcommand accepts ``--config FILE`` plus one flag per configuration
key (``--n-omega 101``, ``--method tv``, ``--lambda 0.1`` ...); flags win
over the file. Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import io
from .experiments import (ConfigError, ExperimentConfig, adjoint_test,
                          reconstruct, run_experiment, simulate_data)
from .metrics import add_noise, rel_error, rel_residual
from .solvers import NotReached

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
ADJOINT_TOLERANCE = 1e-2


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="flat key = value file")
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--lambda" if f.name == "lam" else "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None, metavar="VALUE",
                            help=f"override {f.name} (default {f.default!r})")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(ExperimentConfig)}
    return cfg.replace(**overrides).validate()


def _cmd_phantom(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    values = cfg.phantom_values(grid)
    io.write_field(args.out, values, grid.h)
    if args.pgm:
        io.write_pgm(args.pgm, values)
    print(f"wrote {args.out} ({grid.nx}x{grid.ny}, h={grid.h:g})")
    return EXIT_OK


def _cmd_medium(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    medium = cfg.medium(grid)
    io.write_field(f"{args.prefix}_c.patf", medium.c, grid.h)
    io.write_field(f"{args.prefix}_a.patf", medium.a, grid.h)
    print(f"c in [{medium.c.min():g}, {medium.c.max():g}], "
          f"a in [{medium.a.min():g}, {medium.a.max():g}]")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _config(args)
    g = simulate_data(cfg)
    h_t = cfg.T / (cfg.nt - 1)
    io.write_sinogram(args.out, g, h_t)
    if args.csv:
        io.write_csv(args.csv, g)
    if args.pgm:
        io.write_pgm(args.pgm, g, image_axes=False)
    print(f"wrote {args.out} ({g.shape[0]} sensors x {g.shape[1]} samples)")
    return EXIT_OK


def _cmd_noise(args) -> int:
    cfg = _config(args)
    values, h_t = io.read_sinogram(args.input)
    chi = cfg.sensor_array(cfg.grid()).chi
    if values.shape[0] != chi.size:
        raise ConfigError(f"sinogram has {values.shape[0]} sensors, expected {chi.size}")
    noisy, delta = add_noise(values, cfg.noise, cfg.noise_seed, mask=chi[:, None])
    io.write_sinogram(args.out, noisy, h_t)
    print(f"delta_l2={delta:.9g}")
    return EXIT_OK


def _load_data(cfg, path):
    values, h_t = io.read_sinogram(path)
    op = cfg.operator()
    if values.shape != op.range_shape:
        raise ConfigError(f"sinogram shape {values.shape} does not match {op.range_shape}")
    if not np.isclose(h_t, op.h_t, rtol=1e-9):
        raise ConfigError(f"sinogram time step {h_t} differs from T/(nt-1) = {op.h_t}")
    return op, values


def _cmd_reconstruct(args) -> int:
    cfg = _config(args)
    op, g = _load_data(cfg, args.data)
    truth = op.project(io.read_field(args.truth).values) if args.truth else None
    delta = args.delta
    if cfg.stop == "discrepancy" and delta is None:
        raise ConfigError("--delta is required for discrepancy stopping")
    image, log = reconstruct(op, g, cfg, delta, truth)
    io.write_field(args.out, image, op.grid.h)
    if args.log:
        log.to_csv(args.log, objective=cfg.method in ("h1", "tv"))
    if args.pgm:
        io.write_pgm(args.pgm, image)
    line = f"iterations={log.iterations} rel_residual={log.column('rel_residual')[-1]:.6f}"
    if truth is not None:
        line += f" rel_error={rel_error(image, truth):.6f}"
    print(line)
    return EXIT_OK


def _cmd_adjoint(args) -> int:
    cfg = _config(args)
    mismatches = adjoint_test(cfg, zero_data=args.zero_data)
    return EXIT_OK if max(mismatches) <= ADJOINT_TOLERANCE else EXIT_NUMERIC


def _cmd_metrics(args) -> int:
    cfg = _config(args)
    image = io.read_field(args.reconstruction).values
    if args.truth:
        print(f"rel_error={rel_error(image, io.read_field(args.truth).values):.9g}")
    if args.data:
        op, g = _load_data(cfg, args.data)
        print(f"rel_residual={rel_residual(op, image, g):.9g}")
    if not (args.truth or args.data):
        raise ConfigError("metrics needs --truth and/or --data")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _config(args)
    run_experiment(cfg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patrecon",
                                     description="Photoacoustic simulation and reconstruction")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="write the phantom as a field file")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--pgm")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("medium", help="write sound speed and damping fields")
    p.add_argument("--prefix", required=True, help="writes PREFIX_c.patf and PREFIX_a.patf")
    p.set_defaults(func=_cmd_medium)

    p = sub.add_parser("simulate", help="simulate exact boundary data")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--pgm")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("noise", help="add Gaussian noise of a given relative size")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("reconstruct", help="reconstruct an image from a sinogram")
    p.add_argument("-d", "--data", required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--truth", help="reference field for the error column")
    p.add_argument("--delta", type=float, help="noise level for discrepancy stopping")
    p.add_argument("--log", help="iteration log CSV")
    p.add_argument("--pgm")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("adjoint-test", help="dot-product test of the adjoint")
    p.add_argument("--zero-data", action="store_true", help="use g = 0")
    p.set_defaults(func=_cmd_adjoint)

    p = sub.add_parser("metrics", help="relative error and residual of a reconstruction")
    p.add_argument("-r", "--reconstruction", required=True)
    p.add_argument("--truth")
    p.add_argument("--data")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("run", help="full experiment: simulate, noise, reconstruct, export")
    p.set_defaults(func=_cmd_run)

    for name, p in sub.choices.items():
        _add_config_flags(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NotReached, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
