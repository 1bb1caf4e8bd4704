"""Command-line surface: mesh generation, solving, convergence, validation.

Exit codes: 0 success, 1 usage error (bad arguments, missing or malformed
input files), 2 numerical or data failure (solver breakdown, non-conforming
mesh).  Diagnostics go to stderr; data files are written only where the
config or flags say so.
"""

import argparse
import sys
from dataclasses import replace

from .. import __version__
from ..linalg import SingularMatrixError, SolverError
from ..mesh import (
    IntervalSpec,
    MeshFormatError,
    build_structured_mesh,
    read_mesh,
    validate_conformity,
    write_mesh,
)
from .config import ConfigError, parse_config, parse_domain_spec
from .runner import run_config

__all__ = ["cli_main", "main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="femkit", description="Finite-element toolkit CLI")
    parser.add_argument("--version", action="version", version=f"femkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    mesh_cmd = sub.add_parser("mesh", help="generate a structured mesh file")
    mesh_cmd.add_argument("spec", help="domain spec, e.g. 'rectangle(0,1,0,1,4,4)' or 'dike(90,20)'")
    mesh_cmd.add_argument("-o", "--output", required=True, help="output mesh file")

    solve_cmd = sub.add_parser("solve", help="solve the problem described by a config file")
    solve_cmd.add_argument("config", help="config file path")
    solve_cmd.add_argument("-o", "--out-prefix", default=None, help="override the output path prefix")

    conv_cmd = sub.add_parser("convergence", help="run a registered convergence study")
    conv_cmd.add_argument("config", help="config file path (kind = convergence)")
    conv_cmd.add_argument("--levels", type=int, default=None, help="number of refinement levels")
    conv_cmd.add_argument("-o", "--out-prefix", default=None, help="override the output path prefix")

    val_cmd = sub.add_parser("validate", help="check a mesh file for conformity")
    val_cmd.add_argument("mesh", help="mesh file path")
    return parser


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --version / --help
        return 0 if exc.code in (0, None) else 1

    try:
        return _dispatch(args)
    except (SolverError, SingularMatrixError, MeshFormatError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "mesh":
        try:
            spec = parse_domain_spec(args.spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if isinstance(spec, IntervalSpec):
            raise UsageError("the mesh file format stores triangulations; 'interval' has none")
        mesh = build_structured_mesh(spec)
        write_mesh(mesh, args.output)
        print(
            f"wrote {args.output}: {mesh.n_vertices} vertices, "
            f"{mesh.n_triangles} triangles, {len(mesh.boundary_edges)} boundary edges",
            file=sys.stderr,
        )
        return 0

    if args.command == "solve":
        config = parse_config(args.config)
        summary = run_config(config, out_prefix=args.out_prefix)
        for line in summary.diagnostics:
            print(line, file=sys.stderr)
        for path in summary.files:
            print(f"wrote {path}", file=sys.stderr)
        return 0

    if args.command == "convergence":
        config = parse_config(args.config)
        if config.kind != "convergence":
            raise UsageError(f"config kind is {config.kind!r}, expected 'convergence'")
        if args.levels is not None:
            config.convergence = replace(config.convergence, levels=args.levels)
        summary = run_config(config, out_prefix=args.out_prefix)
        for line in summary.diagnostics:
            print(line, file=sys.stderr)
        for path in summary.files:
            print(f"wrote {path}", file=sys.stderr)
        return 0

    if args.command == "validate":
        mesh = read_mesh(args.mesh, validate=False)
        report = validate_conformity(mesh)
        print(report.summary(), file=sys.stderr)
        if not report.passed:
            return 2
        print(
            f"{args.mesh}: conforming ({mesh.n_vertices} vertices, {mesh.n_triangles} triangles)",
            file=sys.stderr,
        )
        return 0

    raise UsageError(f"unknown command {args.command!r}")


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
