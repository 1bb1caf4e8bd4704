"""One-way coupling: Stokes velocity drives advection-diffusion transport.

The Stokes problem is solved once; its P2 velocity components become the
advection field of the transport problem on the same mesh, evaluated at
quadrature points during convection assembly.  The inflow Dirichlet value
is time-gated: it follows the given profile while t <= t_gate and drops to
zero afterwards.
"""

from dataclasses import dataclass, replace

import numpy as np

from .advdiff import AdvDiffProblem, RunResult, run
from .stokes import StokesProblem, StokesSolution, solve_stokes

__all__ = ["CoupledProblem", "CoupledResult", "run_coupled"]


@dataclass
class CoupledProblem:
    """A Stokes problem plus a transport problem whose beta it supplies.

    ``transport`` must reference the same mesh and leave ``beta`` unset
    (None).  ``inflow_label`` names the gated Dirichlet boundary: its value
    is ``inflow_profile`` for t <= t_gate and 0 afterwards.
    """

    stokes: StokesProblem
    transport: AdvDiffProblem
    inflow_label: object
    inflow_profile: object
    t_gate: float

    def __post_init__(self):
        if self.transport.mesh is not self.stokes.mesh:
            raise ValueError("Stokes and transport problems must share one mesh")
        if self.transport.beta is not None:
            raise ValueError("transport beta must be left unbound; the Stokes velocity supplies it")
        labels = set(self.stokes.mesh.boundary_labels)
        if self.inflow_label not in labels:
            raise ValueError(f"gated inflow label {self.inflow_label!r} not on the mesh")


@dataclass
class CoupledResult:
    stokes: StokesSolution
    transport: RunResult


def _gated_value(profile, t_gate: float):
    def gated(x, y, t):
        if t > t_gate:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        if callable(profile):
            return profile(x, y, t)
        return float(profile)

    return gated


def run_coupled(problem: CoupledProblem, output_every: int = 0, sink=None) -> CoupledResult:
    """Solve Stokes, bind its velocity as beta, and run the transport loop."""
    stokes_solution = solve_stokes(problem.stokes)

    dirichlet = dict(problem.transport.dirichlet)
    if problem.inflow_label in dirichlet:
        raise ValueError(
            f"label {problem.inflow_label!r} already has transport Dirichlet data; "
            "the gated inflow must be the only condition on that label"
        )
    dirichlet[problem.inflow_label] = _gated_value(problem.inflow_profile, problem.t_gate)

    transport = replace(
        problem.transport,
        beta=stokes_solution.velocity,
        dirichlet=dirichlet,
    )
    result = run(transport, output_every=output_every, sink=sink)
    return CoupledResult(stokes=stokes_solution, transport=result)
