"""End-to-end setup and preconditioned GMRES solve."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .decomposition import Hierarchy, LevelSpec, build_hierarchy
from .fem import AssembledProblem, Constant, LayeredY, RectMesh, WavenumberField, random_problem
from .interface import build_all_coarse, coarse_counts
from .linalg import GmresOptions, gmres
from .schwarz import SchwarzContext, precond_apply


@dataclass
class MethodParams:
    n_c: tuple[int, ...] = (0,)
    n_i: tuple[int, ...] | int = 1
    overlap_elems: int = 2
    tol: float = 1e-5
    max_iterations: int = 500
    seed: int = 1
    oversampling: int = 5

    def __post_init__(self):
        if isinstance(self.n_i, int):
            if self.n_i < 1:
                raise ValueError("n_i must be >= 1")
        elif any(v < 1 for v in self.n_i):
            raise ValueError("n_i must be >= 1")
        if any(v < 0 for v in np.atleast_1d(self.n_c)):
            raise ValueError("n_c must be >= 0")

    def inner_counts(self, depth: int) -> tuple[int, ...]:
        if isinstance(self.n_i, int):
            return (self.n_i,) * depth
        vals = list(self.n_i)
        if len(vals) == 1:
            return tuple(vals) * depth
        if len(vals) != depth:
            raise ValueError(f"need 1 or {depth} inner iteration counts, got {len(vals)}")
        return tuple(vals)


@dataclass
class Setup:
    tree: Hierarchy
    contexts: dict[int, SchwarzContext]
    counts: tuple[int, ...]
    seconds: float

    @property
    def preconditioner(self) -> SchwarzContext:
        return self.contexts[0]

    @property
    def coarse_dims(self) -> dict[int, int]:
        return {pid: (c.coarse.dim if c.coarse else 0) for pid, c in self.contexts.items()}


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    relres_history: list[float]
    converged: bool
    final_relres: float
    coarse_dims: dict[int, int] = field(default_factory=dict)
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0

    @property
    def coarse_dim_total(self) -> int:
        return sum(self.coarse_dims.values())


def make_field(problem: str, omega: float, c0: float = 5.0, nlayers: int = 8, first_fast: bool = True) -> WavenumberField:
    if problem == "free":
        return Constant(omega)
    if problem == "layered":
        return LayeredY(omega, c0, nlayers, first_fast)
    raise ValueError(f"unknown problem {problem!r}")


def setup(mesh: RectMesh, field: WavenumberField, spec: LevelSpec, params: MethodParams) -> Setup:
    t0 = time.perf_counter()
    tree = build_hierarchy(mesh, spec, field)
    counts = coarse_counts(params.n_c, spec.depth)
    contexts = build_all_coarse(
        tree, counts, params.inner_counts(spec.depth), params.seed, params.oversampling
    )
    return Setup(tree, contexts, counts, time.perf_counter() - t0)


def solve(problem: AssembledProblem, su: Setup, params: MethodParams) -> SolveReport:
    """Right-preconditioned GMRES, zero initial guess, relative residual stopping."""
    ctx = su.preconditioner
    A = problem.A
    t0 = time.perf_counter()
    res = gmres(
        lambda v: A @ v,
        lambda v: precond_apply(ctx, v),
        problem.f,
        GmresOptions(params.tol, params.max_iterations),
    )
    return SolveReport(
        res.x,
        res.iterations,
        res.residual_history,
        res.converged,
        float(res.final_relres),
        su.coarse_dims,
        su.seconds,
        time.perf_counter() - t0,
    )


def run_case(
    levels: str,
    n: int,
    n_c=(0,),
    problem: str = "free",
    omega: float | None = None,
    c0: float = 5.0,
    nlayers: int = 8,
    first_fast: bool = True,
    params: MethodParams | None = None,
    seed: int | None = None,
) -> SolveReport:
    """Build and solve one table cell; by default k_max h = 1."""
    params = params or MethodParams()
    if seed is not None:
        params = MethodParams(**{**params.__dict__, "seed": seed})
    params = MethodParams(**{**params.__dict__, "n_c": tuple(np.atleast_1d(n_c).tolist())})
    spec = LevelSpec.parse(levels, params.overlap_elems)
    mx, my = spec.total
    mesh = RectMesh(mx * n, my * n)
    if omega is None:
        omega = float(mesh.nx)
    field = make_field(problem, omega, c0, nlayers, first_fast)
    prob = random_problem(mesh, field, params.seed)
    su = setup(mesh, field, spec, params)
    return solve(prob, su, params)
