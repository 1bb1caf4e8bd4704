"""Measured convergence rates on uniformly refined structured meshes.

Each registered case has a manufactured or analytic solution: Poisson on
the unit interval/square with a sine solution, the steady 1D
advection-diffusion boundary layer, and the polynomial Stokes case (which
is exact in the Taylor-Hood space, so its errors sit at solver tolerance
and verify exactness rather than a rate).  Slopes are least-squares fits
of log(error) against log(h).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..advdiff import AdvDiffProblem, steady_solve
from ..elements import FemField, P1_2D, P2_2D, eval_field_at
from ..mesh import IntervalSpec, RectangleSpec, build_interval_mesh, build_structured_mesh, mesh_metrics
from ..quadrature import gauss3_interval, triangle_rule
from ..stokes import StokesProblem, solve_stokes
from .config import ProblemConfig

__all__ = ["RateRow", "RateTable", "convergence_study", "l2_error", "max_nodal_error"]

CASES = ("poisson1d", "poisson2d", "advdiff1d", "stokes")


@dataclass(frozen=True)
class RateRow:
    h: float
    errors: dict


@dataclass(frozen=True)
class RateTable:
    case: str
    rows: tuple
    slopes: dict

    def format(self) -> str:
        names = list(self.rows[0].errors)
        header = "h".ljust(12) + "".join(n.ljust(14) for n in names)
        lines = [f"case: {self.case}", header]
        for row in self.rows:
            lines.append(
                f"{row.h:<12.5g}" + "".join(f"{row.errors[n]:<14.4e}" for n in names)
            )
        lines.append("slopes: " + ", ".join(f"{n} = {s:.3f}" for n, s in self.slopes.items()))
        return "\n".join(lines)


def l2_error(field: FemField, exact) -> float:
    """Quadrature L2 norm of (field - exact); ``exact`` is spatial and vectorized."""
    mesh = field.mesh
    total = 0.0
    if field.space.dim == 1:
        rule = gauss3_interval()
        s = 0.5 * (rule.points + 1.0)
        w = 0.5 * rule.weights
        refs = s.reshape(-1, 1)
        for e in range(mesh.n_elements):
            a, b = mesh.element(e)
            h = b - a
            xs = a + h * s
            diff = eval_field_at(field, e, refs) - exact(xs)
            total += float((w * h) @ (diff * diff))
        return math.sqrt(total)

    rule = triangle_rule(5)
    for e in range(mesh.n_triangles):
        tri = mesh.triangles[e]
        v = mesh.vertices[tri]
        jac = np.column_stack((v[1] - v[0], v[2] - v[0]))
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        phys = v[0] + rule.points @ jac.T
        diff = eval_field_at(field, e, rule.points) - exact(phys[:, 0], phys[:, 1])
        total += float((rule.weights * det) @ (diff * diff))
    return math.sqrt(total)


def max_nodal_error(field: FemField, exact) -> float:
    coords = field.dofmap.dof_coords
    if field.space.dim == 1:
        target = exact(coords[:, 0])
    else:
        target = exact(coords[:, 0], coords[:, 1])
    return float(np.abs(field.coefficients - np.asarray(target)).max())


def _poisson1d_level(level: int):
    n = 8 * 2**level
    mesh = build_interval_mesh(0.0, 1.0, n)
    exact = lambda x: np.sin(np.pi * x)
    f = lambda x, t: np.pi**2 * np.sin(np.pi * x)
    from .runner import solve_poisson

    field = solve_poisson(mesh, "p1", 1.0, f, {"left": 0.0, "right": 0.0})
    h = 1.0 / n
    return h, {
        "l2": l2_error(field, exact),
        "max_nodal": max_nodal_error(field, exact),
    }


def _poisson2d_level(level: int, space: str):
    n = 4 * 2**level
    mesh = build_structured_mesh(RectangleSpec(0.0, 1.0, 0.0, 1.0, n, n))
    exact = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    f = lambda x, y, t: 2.0 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)
    from .runner import solve_poisson

    field = solve_poisson(mesh, space, 1.0, f, {1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0})
    h = mesh_metrics(mesh).h
    return h, {
        "l2": l2_error(field, exact),
        "max_nodal": max_nodal_error(field, exact),
    }


def _advdiff1d_level(level: int):
    mu, beta = 0.05, 0.5
    n = 25 * 2**level
    mesh = build_interval_mesh(0.0, 1.0, n)
    problem = AdvDiffProblem(
        mesh=mesh, mu=mu, beta=beta, f=0.0,
        dirichlet={"left": 1.0, "right": 0.0},
        dt=1.0, t_final=1.0,
    )
    field = steady_solve(problem)
    r = beta / mu
    exact = lambda x: (np.exp(r) - np.exp(r * x)) / (np.exp(r) - 1.0)
    return 1.0 / n, {
        "l2": l2_error(field, exact),
        "max_nodal": max_nodal_error(field, exact),
    }


def _stokes_level(level: int):
    # u = (y, x), p = x + y - 1 lie in the Taylor-Hood space, so errors
    # measure solver exactness, not a discretization rate.
    n = 2 * 2**level
    mesh = build_structured_mesh(RectangleSpec(0.0, 1.0, 0.0, 1.0, n, n))
    problem = StokesProblem(
        mesh=mesh, mu=1.0, body_force=(1.0, 1.0),
        dirichlet={l: (lambda x, y, t: y, lambda x, y, t: x) for l in (1, 2, 3, 4)},
    )
    solution = solve_stokes(problem)
    u1, u2 = solution.velocity
    coords = u1.dofmap.dof_coords
    vel_err = max(
        float(np.abs(u1.coefficients - coords[:, 1]).max()),
        float(np.abs(u2.coefficients - coords[:, 0]).max()),
    )
    p_err = max_nodal_error(solution.pressure, lambda x, y: x + y - 1.0)
    return mesh_metrics(mesh).h, {"max_velocity": vel_err, "max_pressure": p_err}


def convergence_study(config: ProblemConfig, levels: int | None = None) -> RateTable:
    """Solve a registered manufactured case on ``levels`` refinements.

    Raises for unregistered cases and for fewer than 3 levels (a slope fit
    needs at least 3 points).
    """
    if config.convergence is None:
        raise ValueError("config has no [convergence] section")
    case = config.convergence.case
    if case not in CASES:
        raise ValueError(
            f"no analytic solution registered for {case!r}; choose one of {CASES}"
        )
    if levels is None:
        levels = config.convergence.levels
    if levels < 3:
        raise ValueError(f"need >= 3 levels for a slope fit, got {levels}")

    rows = []
    for level in range(levels):
        if case == "poisson1d":
            h, errors = _poisson1d_level(level)
        elif case == "poisson2d":
            h, errors = _poisson2d_level(level, config.convergence.space)
        elif case == "advdiff1d":
            h, errors = _advdiff1d_level(level)
        else:
            h, errors = _stokes_level(level)
        rows.append(RateRow(h=h, errors=errors))

    hs = np.log([row.h for row in rows])
    slopes = {}
    for name in rows[0].errors:
        errs = np.log([max(row.errors[name], 1e-300) for row in rows])
        slopes[name] = float(np.polyfit(hs, errs, 1)[0])
    return RateTable(case=case, rows=tuple(rows), slopes=slopes)
