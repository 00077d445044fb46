"""Multi-start bounded quasi-Newton optimization of the preparation pipelines.

Free parameters per kind (the primary parameter, ``α`` or ``r``, is held fixed):

* ``linear``:  ``(χ,)``, objective = least covariance eigenvalue of ``K(χ)D(α)|0⟩``
* ``cubic``:   ``(χ, φ, β, g)``, objective = :func:`~kerrsqueeze.metrics.v3_objective`
  on ``K(χ)D(α)|0⟩``
* ``quartic``: ``(χ, φ1, ω, φ2)``, objective = :func:`~kerrsqueeze.metrics.v4_objective`
  on ``K(χ)S(r)|0⟩``

The Kerr strength is only defined modulo a convention-dependent period (a
shift by one period is a phase-space rotation, which the Gaussian stage
absorbs), so ``χ`` is searched over exactly one period; see :func:`chi_bounds`.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .fock import (
    FockState,
    apply,
    gate_displacement,
    gate_squeeze,
    kerr_spectrum,
    variance_matrix,
)
from .metrics import G_GUARD, gaussian_baseline, v3_objective, v4_objective
from .prep import (
    PrepParamsLinear,
    cubic_from_objective,
    quartic_from_objective,
)

log = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "PARAM_NAMES",
    "OptimizationFailed",
    "RejectedStart",
    "OptProblem",
    "OptimalPoint",
    "SweepResult",
    "Objective",
    "chi_bounds",
    "default_bounds",
    "local_minimize",
    "random_start",
    "optimize_point",
    "sweep",
    "max_workers",
]

KINDS = ("linear", "cubic", "quartic")
PARAM_NAMES = {
    "linear": ("chi",),
    "cubic": ("chi", "phi", "beta", "g"),
    "quartic": ("chi", "phi1", "omega", "phi2"),
}

CHI_FLOOR = 1e-6
TIE_TOL = 1e-12


class OptimizationFailed(RuntimeError):
    """Every start of a point was rejected."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RejectedStart(RuntimeError):
    """The objective was not finite at the start point."""


def chi_bounds(kind: str, convention: str = "nPlus1Sq") -> tuple[float, float]:
    """One period of the Kerr strength for the given pipeline and convention.

    For ``(n+1)²`` a shift ``χ -> χ + π`` multiplies ``|n⟩`` by ``(-1)^n``, a
    rotation; for ``(2n+1)²`` the same holds with ``π/4``.  Coherent inputs are
    also symmetric under ``χ -> -χ`` (mirror ``p -> -p``, which leaves both the
    covariance spectrum and ``var(x - p²)`` unchanged), so half a period suffices.

    Squeezed inputs populate even ``n`` only, which shrinks the period to ``π/4``
    resp. ``π/16``, but ``x - p³`` is not mirror symmetric.  The window is a
    full period centred on the period itself, so the large-``r`` optimum, whose
    effective Kerr strength goes to ``0+``, is reported as ``χ -> period+``
    rather than straddling the window edge.
    """
    if convention == "nPlus1Sq":
        scale = 1.0
    elif convention == "twoNplus1Sq":
        scale = 0.25
    else:
        raise ValueError(f"unknown Kerr convention {convention!r}")
    if kind in ("linear", "cubic"):
        return CHI_FLOOR, scale * math.pi / 2
    if kind == "quartic":
        period = scale * math.pi / 4
        return period / 2, 1.5 * period
    raise ValueError(f"unknown kind {kind!r}")


def default_bounds(kind: str, convention: str = "nPlus1Sq") -> tuple[tuple[float, float], ...]:
    chi = chi_bounds(kind, convention)
    angle = (-math.pi, math.pi)
    scale = (G_GUARD, 3.0)
    if kind == "linear":
        return (chi,)
    if kind == "cubic":
        return (chi, angle, (-5.0, 5.0), scale)
    if kind == "quartic":
        return (chi, angle, scale, angle)
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class OptProblem:
    kind: str
    primary_param: float
    bounds: tuple[tuple[float, float], ...] | None = None
    n_starts: int = 300
    seed: int = 0
    dim: int = 300
    convention: str = "nPlus1Sq"
    max_evals: int = 2000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.bounds is None:
            object.__setattr__(self, "bounds", default_bounds(self.kind, self.convention))
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != len(PARAM_NAMES[self.kind]):
            raise ValueError(f"{self.kind} takes {len(PARAM_NAMES[self.kind])} bounded parameters")
        if any(not lo <= hi for lo, hi in bounds):
            raise ValueError(f"empty bounds {bounds}")
        object.__setattr__(self, "bounds", bounds)


@dataclass
class OptimalPoint:
    kind: str
    primary_param: float
    best_params: tuple[float, ...]
    objective: float
    xi: float
    n_evals: int
    n_rejected: int = 0
    n_starts: int = 0

    @property
    def named_params(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES[self.kind], self.best_params))

    def prep_params(self):
        """Gate parameters of the corresponding preparation pipeline."""
        p = self.best_params
        if self.kind == "linear":
            return PrepParamsLinear(self.primary_param, p[0])
        if self.kind == "cubic":
            chi, phi, beta, g = p
            return cubic_from_objective(self.primary_param, chi, g, phi, beta)
        chi, phi1, omega, phi2 = p
        return quartic_from_objective(self.primary_param, chi, omega, phi1, phi2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["best_params"] = list(self.best_params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimalPoint":
        d = dict(d)
        d["best_params"] = tuple(d["best_params"])
        return cls(**d)


@dataclass
class SweepResult:
    kind: str
    dim: int
    convention: str
    seed: int
    points: list[OptimalPoint] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def __post_init__(self):
        grid = [pt.primary_param for pt in self.points]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep points must have strictly increasing primary_param")

    @property
    def grid(self) -> np.ndarray:
        return np.array([pt.primary_param for pt in self.points])

    @property
    def xi(self) -> np.ndarray:
        return np.array([pt.xi for pt in self.points])

    @property
    def objective(self) -> np.ndarray:
        return np.array([pt.objective for pt in self.points])

    def param(self, name: str) -> np.ndarray:
        i = PARAM_NAMES[self.kind].index(name)
        return np.array([pt.best_params[i] for pt in self.points])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "convention": self.convention,
            "seed": self.seed,
            "points": [pt.to_dict() for pt in self.points],
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        return cls(d["kind"], d["dim"], d["convention"], d["seed"],
                   [OptimalPoint.from_dict(p) for p in d["points"]], list(d.get("failures", [])))


# -- objectives ----------------------------------------------------------------


class Objective:
    """Picklable objective for one sweep point.

    The Gaussian input (``D(α)|0⟩`` or ``S(r)|0⟩``) is built once; each call
    only multiplies by the Kerr phases, which is O(dim).
    """

    def __init__(self, kind: str, primary_param: float, dim: int, convention: str = "nPlus1Sq"):
        self.kind = kind
        self.primary_param = float(primary_param)
        self.dim = dim
        self.convention = convention
        vac = FockState.vacuum(dim)
        if kind in ("linear", "cubic"):
            base = apply(gate_displacement(primary_param, dim), vac)
        elif kind == "quartic":
            base = apply(gate_squeeze(primary_param, dim), vac)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        self.input_state = base.check_faithful()
        self._spectrum = kerr_spectrum(dim, convention)

    def zeta(self, chi: float) -> FockState:
        return FockState(np.exp(-1j * chi * self._spectrum) * self.input_state.amplitudes)

    @property
    def baseline(self) -> float:
        return 0.5 if self.kind == "linear" else gaussian_baseline(3 if self.kind == "cubic" else 4).variance

    def __call__(self, params: Sequence[float]) -> float:
        z = self.zeta(params[0])
        if self.kind == "linear":
            return float(variance_matrix(z).eigenvalues()[0])
        if self.kind == "cubic":
            _, phi, beta, g = params
            return v3_objective(z, g, phi, beta)
        _, phi1, omega, phi2 = params
        return v4_objective(z, omega, phi1, phi2)


# -- local and multi-start minimization ------------------------------------------


class _Counted:
    def __init__(self, fn: Callable[[np.ndarray], float]):
        self.fn = fn
        self.n = 0

    def __call__(self, x) -> float:
        self.n += 1
        return float(self.fn(x))


def _fd_gradient(fn, x: np.ndarray, lo: np.ndarray, hi: np.ndarray, h: float) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(x.size):
        up, dn = x.copy(), x.copy()
        up[i] = min(x[i] + h, hi[i])
        dn[i] = max(x[i] - h, lo[i])
        span = up[i] - dn[i]
        grad[i] = 0.0 if span == 0 else (fn(up) - fn(dn)) / span
    return grad


def local_minimize(objective: Callable[[np.ndarray], float], start, bounds,
                   max_evals: int = 2000, gtol: float = 1e-7,
                   fd_step: float = 1e-6) -> tuple[np.ndarray, float, int]:
    """L-BFGS-B from ``start`` with central finite-difference gradients.

    Returns ``(x, f(x), n_evals)``; ``n_evals`` counts gradient evaluations too.
    The returned value never exceeds the value at ``start``.  Raises
    :class:`RejectedStart` when the objective is not finite at ``start``.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    x0 = np.clip(np.asarray(start, dtype=float), lo, hi)
    fn = _Counted(objective)
    f0 = fn(x0)
    if not np.isfinite(f0):
        raise RejectedStart(f"objective is {f0} at start {x0}")

    def fun_and_grad(x):
        f = fn(x)
        if not np.isfinite(f):
            # steer the line search away without aborting the run
            return 1e300, np.zeros_like(x)
        return f, _fd_gradient(fn, x, lo, hi, fd_step)

    per_call = 2 * x0.size + 1
    res = minimize(
        fun_and_grad, x0, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)),
        options={"maxfun": max(1, (max_evals - 1) // per_call), "maxiter": 10 * max_evals,
                 "ftol": 1e-15, "gtol": gtol},
    )
    x = np.clip(res.x, lo, hi)
    f = fn(x)
    if not (np.isfinite(f) and f <= f0):
        return x0, f0, fn.n
    return x, f, fn.n


def _start_rng(seed: int, grid_index: int, start_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, grid_index, start_index]))


def random_start(bounds, seed: int, grid_index: int, start_index: int) -> np.ndarray:
    """Uniform draw inside ``bounds``, a pure function of its integer keys."""
    rng = _start_rng(seed, grid_index, start_index)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + (hi - lo) * rng.random(lo.size)


def max_workers() -> int:
    env = os.environ.get("KERRSQUEEZE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer KERRSQUEEZE_THREADS=%r", env)
    return os.cpu_count() or 1


def _run_start(objective: Objective, start, bounds, max_evals: int):
    """Returns ``(params, value, n_evals)`` or ``None`` for a rejected start."""
    try:
        x, f, n = local_minimize(objective, start, bounds, max_evals=max_evals)
    except RejectedStart as exc:
        log.info("rejected start: %s", exc)
        return None
    return tuple(float(v) for v in x), f, n


def _run_starts(jobs, workers: int):
    """Evaluate ``(objective, start, bounds, max_evals)`` jobs, results in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_run_start(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_start, *zip(*jobs), chunksize=max(1, len(jobs) // (4 * workers))))


def _reduce(problem: OptProblem, results, objective: Objective) -> OptimalPoint:
    """Deterministic best-of reduction: lowest value, near-ties by smallest norm."""
    best = None
    n_evals = 0
    rejected = 0
    for res in results:
        if res is None:
            rejected += 1
            continue
        x, f, n = res
        n_evals += n
        if best is None or f < best[1] - TIE_TOL or (
            abs(f - best[1]) <= TIE_TOL and np.linalg.norm(x) < np.linalg.norm(best[0])
        ):
            best = (x, f)
    if best is None:
        raise OptimizationFailed(
            f"all {len(results)} starts rejected for {problem.kind} at {problem.primary_param}",
            {"kind": problem.kind, "primary_param": problem.primary_param, "n_rejected": rejected},
        )
    x, f = best
    return OptimalPoint(problem.kind, problem.primary_param, x, f, f / objective.baseline,
                        n_evals, rejected, len(results))


def _starts(problem: OptProblem, grid_index: int, n_random: int) -> list[np.ndarray]:
    # random streams are numbered from 1; slot 0 belongs to the warm start
    return [random_start(problem.bounds, problem.seed, grid_index, k) for k in range(1, n_random + 1)]


def optimize_point(problem: OptProblem, warm_start: Sequence[float] | None = None,
                   grid_index: int = 0, workers: int = 1) -> OptimalPoint:
    """Best of ``n_starts`` local minimizations.

    With ``warm_start`` one of the starts is that point and the other
    ``n_starts - 1`` are uniform random draws; without it all are random.
    Deterministic in ``(problem, warm_start, grid_index)``.
    """
    objective = Objective(problem.kind, problem.primary_param, problem.dim, problem.convention)
    n_random = problem.n_starts - (warm_start is not None)
    starts = _starts(problem, grid_index, n_random)
    if warm_start is not None:
        starts.insert(0, np.asarray(warm_start, dtype=float))
    jobs = [(objective, s, problem.bounds, problem.max_evals) for s in starts]
    return _reduce(problem, _run_starts(jobs, workers), objective)


def sweep(kind: str, grid: Sequence[float], *, n_starts: int = 300, seed: int = 0,
          dim: int = 300, convention: str = "nPlus1Sq", bounds=None,
          max_evals: int = 2000, workers: int | None = None,
          progress: Callable[[int, OptimalPoint], None] | None = None) -> SweepResult:
    """Optimize every grid point, chaining each point's optimum as a warm start
    for the next one.

    The random starts of all points are independent and run first (in
    parallel when ``workers > 1``); only the warm-started local runs form a
    sequential chain.  Failed points are recorded in ``failures`` and skipped.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    workers = max_workers() if workers is None else max(1, workers)

    problems = [OptProblem(kind, a, bounds, n_starts, seed, dim, convention, max_evals) for a in grid]
    objectives = [Objective(kind, a, dim, convention) for a in grid]

    # the first point has no predecessor, so all of its starts are random
    jobs, owners = [], []
    for i, (prob, obj) in enumerate(zip(problems, objectives)):
        n_random = prob.n_starts if i == 0 else prob.n_starts - 1
        for s in _starts(prob, i, n_random):
            jobs.append((obj, s, prob.bounds, prob.max_evals))
            owners.append(i)
    random_results: list[list] = [[] for _ in grid]
    for i, res in zip(owners, _run_starts(jobs, workers)):
        random_results[i].append(res)

    result = SweepResult(kind, dim, convention, seed)
    warm = None
    for i, (prob, obj) in enumerate(zip(problems, objectives)):
        results = list(random_results[i])
        if i > 0 and warm is not None:
            results.insert(0, _run_start(obj, np.asarray(warm), prob.bounds, prob.max_evals))
        elif i > 0:
            # no predecessor optimum to chain: fill the slot with one more random start
            extra = random_start(prob.bounds, prob.seed, i, prob.n_starts)
            results.insert(0, _run_start(obj, extra, prob.bounds, prob.max_evals))
        try:
            point = _reduce(prob, results, obj)
        except OptimizationFailed as exc:
            log.warning("%s", exc)
            result.failures.append(exc.diagnostics)
            continue
        result.points.append(point)
        warm = point.best_params
        if progress is not None:
            progress(i, point)
    return result
