"""Turn parsed configs into solves and data files.

This is the glue behind ``femkit solve``: build the mesh, assemble the
problem named by the config, run the right solver, and write the
configured CSV/VTK artifacts.  Diagnostics are collected as text lines for
the CLI to print on stderr.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from ..advdiff import AdvDiffProblem, run as run_advdiff, steady_solve
from ..assembly import LinearSystem, Stiffness, apply_dirichlet, assemble_bilinear, assemble_load
from ..coupling import CoupledProblem, run_coupled
from ..elements import FemField, P1_1D, P1_2D, P2_2D, build_dofmap
from ..linalg import cg_solve
from ..mesh import IntervalSpec, build_interval_mesh, build_structured_mesh
from ..stokes import StokesProblem, solve_stokes
from .config import ProblemConfig
from .expressions import compile_expression
from .writers import write_field_csv, write_vtk

__all__ = ["RunSummary", "build_mesh", "solve_poisson", "run_config"]


@dataclass
class RunSummary:
    files: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def note(self, message: str):
        self.diagnostics.append(message)


def build_mesh(spec):
    if isinstance(spec, IntervalSpec):
        return build_interval_mesh(spec.a, spec.b, spec.n)
    return build_structured_mesh(spec)


def _space_tag(mesh, space: str | None):
    if not hasattr(mesh, "triangles"):
        return P1_1D
    return P2_2D if space == "p2" else P1_2D


def solve_poisson(mesh, space: str | None, kappa, f, dirichlet, neumann=(), tol: float = 1e-14) -> FemField:
    """Assemble and CG-solve -div(kappa grad u) = f with Dirichlet data."""
    if not dirichlet:
        raise ValueError("poisson needs at least one Dirichlet boundary label")
    dofmap = build_dofmap(mesh, _space_tag(mesh, space))
    matrix = assemble_bilinear(mesh, Stiffness(kappa), dofmap)
    rhs = assemble_load(mesh, f, dofmap)
    reduced = apply_dirichlet(LinearSystem(matrix, rhs), dirichlet, dofmap)
    solution, _ = cg_solve(reduced.matrix, reduced.rhs, tol=tol)
    return FemField(dofmap, reduced.reconstruct(solution))


def _bc_tables(config: ProblemConfig, table: dict, pair_valued: bool):
    """Split a bc table into Dirichlet data, neumann labels, and the inflow entry."""
    dim = config.dim
    dirichlet: dict = {}
    neumann: list = []
    inflow = None
    for label, spec in table.items():
        if spec.kind == "neumann":
            neumann.append(label)
        elif spec.kind == "inflow":
            inflow = (label, compile_expression(spec.exprs[0], dim))
        else:
            exprs = [compile_expression(e, 2 if pair_valued else dim) for e in spec.exprs]
            dirichlet[label] = tuple(exprs) if pair_valued else exprs[0]
    return dirichlet, tuple(neumann), inflow


def _stokes_problem(config: ProblemConfig, mesh, bc_table) -> StokesProblem:
    mu = config.coefficient("mu_stokes", config.coefficient("mu"))
    dirichlet, neumann, _ = _bc_tables(config, bc_table, pair_valued=True)
    return StokesProblem(
        mesh=mesh,
        mu=mu,
        body_force=(config.expression("f1", 0.0), config.expression("f2", 0.0)),
        dirichlet=dirichlet,
        neumann=neumann,
        eps=config.coefficient("eps", 1e-8),
    )


def _advdiff_problem(config: ProblemConfig, mesh, dirichlet, neumann, beta) -> AdvDiffProblem:
    return AdvDiffProblem(
        mesh=mesh,
        mu=config.coefficient("mu"),
        beta=beta,
        f=config.expression("f", 0.0),
        dirichlet=dirichlet,
        neumann=neumann,
        u0=config.expression("u0", 0.0),
        dt=config.time.dt,
        t_final=config.time.t_final,
    )


def _write_scalar(config, summary, fld, prefix, stem=""):
    fmt = config.output.format
    if fmt == "none":
        return
    name = f"{prefix}{stem}"
    if fmt in ("csv", "both"):
        write_field_csv(fld, name + ".csv")
        summary.files.append(name + ".csv")
    if fmt in ("vtk", "both") and fld.space.dim == 2:
        write_vtk(fld.mesh, {"u": fld}, name + ".vtk")
        summary.files.append(name + ".vtk")


def _snapshot_sink(config, summary, prefix):
    if config.output.format == "none" or prefix is None:
        return None, 0
    every = config.time.output_every if config.time else 0

    def sink(t, fld):
        step = round(t / config.time.dt)
        _write_scalar(config, summary, fld, prefix, f"_step{step:05d}")

    return (sink if every else None), every


def run_config(config: ProblemConfig, out_prefix: str | None = None) -> RunSummary:
    """Run the problem a config describes and write its outputs."""
    summary = RunSummary()
    prefix = out_prefix if out_prefix is not None else config.output.prefix

    if config.kind == "convergence":
        from .convergence import convergence_study

        table = convergence_study(config)
        summary.note(table.format())
        if prefix and config.output.format != "none":
            path = f"{prefix}_rates.csv"
            names = list(table.rows[0].errors)
            lines = ["h," + ",".join(names)]
            for row in table.rows:
                lines.append(",".join([repr(row.h)] + [repr(row.errors[n]) for n in names]))
            for name, slope in table.slopes.items():
                lines.append(f"# slope {name} = {slope!r}")
            parent = os.path.dirname(path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(path, "w", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
            summary.files.append(path)
        return summary

    mesh = build_mesh(config.domain)

    if config.kind in ("poisson1d", "poisson2d"):
        kappa = config.expression("kappa", config.coefficient("mu", 1.0))
        dirichlet, neumann, _ = _bc_tables(config, config.bc, pair_valued=False)
        fld = solve_poisson(mesh, config.space, kappa, config.expression("f", 0.0), dirichlet, neumann)
        summary.note(f"poisson solved: {fld.dofmap.n_dofs} dofs")
        if prefix:
            _write_scalar(config, summary, fld, prefix)
        return summary

    if config.kind == "stokes":
        problem = _stokes_problem(config, mesh, config.bc)
        solution = solve_stokes(problem)
        u1, u2 = solution.velocity
        summary.note(
            f"stokes solved: {solution.report.size} unknowns, "
            f"divergence L2 = {solution.divergence:.3e}"
        )
        if prefix and config.output.format != "none":
            if config.output.format in ("csv", "both"):
                for stem, fld in (("_u1", u1), ("_u2", u2), ("_p", solution.pressure)):
                    write_field_csv(fld, f"{prefix}{stem}.csv")
                    summary.files.append(f"{prefix}{stem}.csv")
            if config.output.format in ("vtk", "both"):
                write_vtk(mesh, {"velocity": (u1, u2), "pressure": solution.pressure}, f"{prefix}.vtk")
                summary.files.append(f"{prefix}.vtk")
        return summary

    if config.kind in ("advdiff1d", "advdiff2d"):
        dirichlet, neumann, _ = _bc_tables(config, config.bc, pair_valued=False)
        if config.kind == "advdiff1d":
            beta = config.expression("beta_x")
        else:
            beta = (config.expression("beta_x"), config.expression("beta_y"))
        problem = _advdiff_problem(config, mesh, dirichlet, neumann, beta)
        sink, every = _snapshot_sink(config, summary, prefix)
        result = run_advdiff(problem, output_every=every, sink=sink)
        summary.note(
            f"advection-diffusion: {result.n_steps} steps to t = {result.final_time:g}, "
            f"final L2 norm = {result.norm_history[-1]:.6g}"
        )
        if prefix:
            _write_scalar(config, summary, result.field, prefix, "_final")
        return summary

    if config.kind == "coupled":
        stokes_problem = _stokes_problem(config, mesh, config.stokes_bc)
        dirichlet, neumann, inflow = _bc_tables(config, config.bc, pair_valued=False)
        transport = _advdiff_problem(config, mesh, dirichlet, neumann, beta=None)
        inflow_label, inflow_profile = inflow
        coupled = CoupledProblem(
            stokes=stokes_problem,
            transport=transport,
            inflow_label=inflow_label,
            inflow_profile=inflow_profile,
            t_gate=config.time.t_gate,
        )
        sink, every = _snapshot_sink(config, summary, prefix)
        result = run_coupled(coupled, output_every=every, sink=sink)
        summary.note(
            f"stokes solved: divergence L2 = {result.stokes.divergence:.3e}; "
            f"transport: {result.transport.n_steps} steps to t = {result.transport.final_time:g}, "
            f"final L2 norm = {result.transport.norm_history[-1]:.6g}"
        )
        if prefix and config.output.format != "none":
            u1, u2 = result.stokes.velocity
            if config.output.format in ("csv", "both"):
                for stem, fld in (("_u1", u1), ("_u2", u2), ("_p", result.stokes.pressure)):
                    write_field_csv(fld, f"{prefix}{stem}.csv")
                    summary.files.append(f"{prefix}{stem}.csv")
            if config.output.format in ("vtk", "both"):
                write_vtk(
                    mesh,
                    {"velocity": (u1, u2), "pressure": result.stokes.pressure, "u": result.transport.field},
                    f"{prefix}.vtk",
                )
                summary.files.append(f"{prefix}.vtk")
            _write_scalar(config, summary, result.transport.field, prefix, "_final")
        return summary

    raise ValueError(f"unhandled problem kind {config.kind!r}")
