"""Implicit-Euler time integration of the advection-diffusion equation.

Each step solves (M/dt + A + V) u_m = b + (M/dt) u_{m-1} on the interior
dofs, where M is the mass matrix, A the diffusion stiffness, and V the
convection matrix; the system matrix is factorized once and reused while
the time step stays fixed.  Dirichlet data may depend on time and is
re-applied every step through a fresh lifting vector.  1D problems use P1
elements by default, 2D problems P2.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    Convection,
    DirichletBc,
    Mass,
    Stiffness,
    assemble_bilinear,
    assemble_load,
    reduce_system,
)
from .elements import DofMap, FemField, FeSpaceTag, P1_1D, P1_2D, P2_2D, build_dofmap
from .linalg import LuFactorization, SparseMatrix
from .mesh import Mesh1D, TriMesh

__all__ = [
    "AdvDiffProblem",
    "Stepper",
    "RunResult",
    "build_stepper",
    "step",
    "run",
    "steady_solve",
]


@dataclass
class AdvDiffProblem:
    """Advection-diffusion problem, optionally time dependent.

    ``beta`` is a scalar coefficient in 1D or a (beta_x, beta_y) pair in 2D
    (constants, callables, or P2 FemFields).  ``f``, ``u0`` and the
    Dirichlet values follow the package-wide callable convention
    ``(x, t)`` / ``(x, y, t)``.  ``neumann`` labels carry the natural
    zero-flux condition and need no data.
    """

    mesh: Mesh1D | TriMesh
    mu: float
    beta: object
    f: object = 0.0
    dirichlet: dict = field(default_factory=dict)
    neumann: tuple = ()
    u0: object = 0.0
    dt: float = 0.1
    t_final: float = 1.0
    space: FeSpaceTag | None = None

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("diffusion coefficient mu must be positive")
        if self.dt <= 0:
            raise ValueError("time step dt must be positive")
        if self.t_final < self.dt:
            raise ValueError("final time must be at least one step")
        if self.space is None:
            self.space = P1_1D if isinstance(self.mesh, Mesh1D) else P2_2D
        if self.space.dim != (1 if isinstance(self.mesh, Mesh1D) else 2):
            raise ValueError("space dimension does not match the mesh")


def _constrained_dof_labels(problem: AdvDiffProblem, dofmap: DofMap) -> list[tuple[int, object]]:
    """(dof, label) pairs for all Dirichlet dofs; first-listed label wins."""
    seen: dict[int, object] = {}
    for label in problem.dirichlet:
        if label not in dofmap.boundary_dofs:
            raise ValueError(f"boundary label {label!r} has no dofs on this mesh")
        for dof in dofmap.boundary_dofs[label]:
            seen.setdefault(int(dof), label)
    return sorted(seen.items())


class Stepper:
    """Owns the factorized implicit-Euler system and the current time state."""

    def __init__(self, problem: AdvDiffProblem):
        self.problem = problem
        self.dofmap = build_dofmap(problem.mesh, problem.space)

        self.mass = assemble_bilinear(problem.mesh, Mass(), self.dofmap)
        stiff = assemble_bilinear(problem.mesh, Stiffness(problem.mu), self.dofmap)
        conv = assemble_bilinear(problem.mesh, Convection(problem.beta), self.dofmap)
        self._steady_csr = (stiff.csr + conv.csr).tocsr()

        pairs = _constrained_dof_labels(problem, self.dofmap)
        self._dirichlet_dofs = np.array([d for d, _ in pairs], dtype=np.int64)
        self._dirichlet_spec = pairs
        mask = np.ones(self.dofmap.n_dofs, dtype=bool)
        mask[self._dirichlet_dofs] = False
        self.interior = np.nonzero(mask)[0]

        f = problem.f
        self._static_load = None
        if not callable(f) or getattr(f, "uses_t", True) is False:
            self._static_load = assemble_load(problem.mesh, f, self.dofmap, t=0.0)

        self.time = 0.0
        self.step_count = 0
        self.dt = problem.dt
        self._factorize()

    def _factorize(self):
        bmat = SparseMatrix.from_csr(self.mass.csr.multiply(1.0 / self.dt).tocsr() + self._steady_csr)
        self.system_matrix = bmat
        self._lu = LuFactorization(bmat.submatrix(self.interior, self.interior))

    def retime(self, dt: float):
        """Change the time step; rebuilds and refactorizes the system matrix."""
        if dt <= 0:
            raise ValueError("time step must be positive")
        if dt != self.dt:
            self.dt = dt
            self._factorize()

    def lifting(self, t: float) -> np.ndarray:
        """Boundary-value vector x_d at time t (zero at interior dofs)."""
        x_d = np.zeros(self.dofmap.n_dofs)
        bc = DirichletBc(self.problem.dirichlet)
        for dof, label in self._dirichlet_spec:
            x_d[dof] = bc.value_at(label, self.dofmap.dof_coords[dof], t)
        return x_d

    def load(self, t: float) -> np.ndarray:
        if self._static_load is not None:
            return self._static_load
        return assemble_load(self.problem.mesh, self.problem.f, self.dofmap, t=t)

    def initial_state(self) -> np.ndarray:
        u0 = self.problem.u0
        if not callable(u0):
            return np.full(self.dofmap.n_dofs, float(u0))
        coords = self.dofmap.dof_coords
        if self.dofmap.space.dim == 1:
            return np.array([u0(float(x), 0.0) for (x,) in coords])
        return np.array([u0(float(x), float(y), 0.0) for x, y in coords])

    def m_norm(self, u: np.ndarray) -> float:
        """Discrete L2 norm induced by the mass matrix."""
        return math.sqrt(max(float(u @ self.mass.matvec(u)), 0.0))

    def advance(self, u_prev: np.ndarray, t_next: float) -> np.ndarray:
        u_next = step(self, u_prev, t_next)
        self.time = t_next
        self.step_count += 1
        return u_next


def build_stepper(problem: AdvDiffProblem) -> Stepper:
    """Assemble M, A, V, form B = M/dt + A + V, and factorize its interior block."""
    return Stepper(problem)


def step(stepper: Stepper, u_prev: np.ndarray, t_next: float) -> np.ndarray:
    """One implicit-Euler step from u_prev to the solution at t_next.

    The right-hand side is the load at t_next plus (1/dt) M u_prev; the
    Dirichlet correction b - B x_d uses boundary data evaluated at t_next.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != (stepper.dofmap.n_dofs,):
        raise ValueError("state vector length does not match the dof map")
    rhs = stepper.load(t_next) + stepper.mass.matvec(u_prev) / stepper.dt
    x_d = stepper.lifting(t_next)
    corrected = rhs - stepper.system_matrix.matvec(x_d)
    interior_solution = stepper._lu.solve(corrected[stepper.interior])
    u_next = x_d
    u_next[stepper.interior] = interior_solution
    return u_next


@dataclass
class RunResult:
    """Final state of a time integration plus per-step trajectory metadata."""

    field: FemField
    times: np.ndarray
    norm_history: np.ndarray
    n_steps: int

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def _step_times(dt: float, t_final: float) -> list[float]:
    # last step is shortened so the run lands exactly on t_final
    n_full = int(math.floor(t_final / dt + 1e-9))
    times = [m * dt for m in range(1, n_full + 1)]
    if not times or t_final - times[-1] > 1e-9 * dt:
        times.append(t_final)
    else:
        times[-1] = t_final
    return times


def run(problem: AdvDiffProblem, output_every: int = 0, sink=None) -> RunResult:
    """Integrate from t = 0 to t_final, reporting snapshots through ``sink``.

    ``sink(t, field)`` is invoked every ``output_every`` steps and at the
    final time (0 means final time only).  The norm history records the
    discrete L2 norm at t = 0 and after every step.
    """
    stepper = build_stepper(problem)
    u = stepper.initial_state()
    times = _step_times(problem.dt, problem.t_final)

    norms = [stepper.m_norm(u)]
    t_prev = 0.0
    for k, t in enumerate(times, start=1):
        stepper.retime(t - t_prev)
        u = stepper.advance(u, t)
        norms.append(stepper.m_norm(u))
        t_prev = t
        if sink is not None and (k == len(times) or (output_every and k % output_every == 0)):
            sink(t, FemField(stepper.dofmap, u.copy()))

    return RunResult(
        field=FemField(stepper.dofmap, u),
        times=np.concatenate(([0.0], np.asarray(times))),
        norm_history=np.asarray(norms),
        n_steps=len(times),
    )


def steady_solve(problem: AdvDiffProblem) -> FemField:
    """Stationary limit: solve (A + V) u = b with data in its final state.

    Time-dependent sources and boundary values are evaluated at t_final.
    """
    dofmap = build_dofmap(problem.mesh, problem.space)
    stiff = assemble_bilinear(problem.mesh, Stiffness(problem.mu), dofmap)
    conv = assemble_bilinear(problem.mesh, Convection(problem.beta), dofmap)
    matrix = SparseMatrix.from_csr(stiff.csr + conv.csr)

    t_end = problem.t_final
    rhs = assemble_load(problem.mesh, problem.f, dofmap, t=t_end)

    bc = DirichletBc(problem.dirichlet)
    constrained: dict[int, float] = {}
    for dof, label in _constrained_dof_labels(problem, dofmap):
        constrained[dof] = bc.value_at(label, dofmap.dof_coords[dof], t_end)

    reduced = reduce_system(matrix, rhs, constrained)
    lu = LuFactorization(reduced.matrix)
    return FemField(dofmap, reduced.reconstruct(lu.solve(reduced.rhs)))
