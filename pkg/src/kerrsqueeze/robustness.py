"""Monte Carlo analysis of Gaussian parameter noise around optimal gate settings.

Every run draws each gate parameter from ``Normal(μ_j, (γ μ_j)²)``, prepares the
state and evaluates ``ξ``.

Two equivalent evaluations are offered.  ``picture="heisenberg"`` (default)
prepares the state up to the Kerr gate and pushes the trailing Gaussian gates
onto the measured operator, which is exact for any state resolved by the
truncation.  ``picture="schrodinger"`` runs every gate on the truncated state;
strong final squeezing then needs a much larger dimension, and at large
quartic ``r`` no practical dimension is enough.  The spread of the
resulting sample is summarized by one-sided standard deviations around the mean,

    σ+² = Σ max(ξ_k - ξ̄, 0)² / N+,    σ-² = Σ min(ξ_k - ξ̄, 0)² / N-,

with ``N±`` the number of runs strictly above/below the mean.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from .fock import FockError
from .metrics import gaussian_baseline, v3_objective, v4_objective, xi
from .optimize import max_workers
from .prep import (
    PrepParamsCubic,
    PrepParamsQuartic,
    cubic_to_objective,
    prep,
    prep_core,
    quartic_to_objective,
)

log = logging.getLogger(__name__)

__all__ = [
    "FluctuationSpec",
    "MCStats",
    "RunRecord",
    "MonteCarloError",
    "PARAM_GUARDS",
    "fixed_mask",
    "sample_params",
    "monte_carlo",
    "monte_carlo_fixed",
    "evaluate_xi",
    "summarize",
]

MAX_FAILURE_RATE = 0.01
PICTURES = ("heisenberg", "schrodinger")

# clamping ranges for sampled gate parameters; squeezings follow the fock-layer guard
PARAM_GUARDS = {
    "cubic": {"alpha": (0.0, math.inf), "r": (-1.5, 1.5)},
    "quartic": {"r": (-1.5, 1.5), "w": (-1.5, 1.5)},
}


class MonteCarloError(RuntimeError):
    """Too many runs failed for the statistics to be trusted."""


@dataclass(frozen=True)
class FluctuationSpec:
    gamma: float
    n_runs: int = 10000
    fixed_mask: tuple[bool, ...] = (False, False, False, False, False)
    seed: int = 0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be >= 0")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        object.__setattr__(self, "fixed_mask", tuple(bool(b) for b in self.fixed_mask))


@dataclass(frozen=True)
class RunRecord:
    params: tuple[float, ...]
    clamped: bool


@dataclass
class MCStats:
    mean_xi: float
    sigma_plus: float
    sigma_minus: float
    n_plus: int
    n_minus: int
    frac_below_mean: float
    n_runs: int
    n_failed: int = 0
    n_clamped: int = 0
    per_run_xi: np.ndarray | None = field(default=None, repr=False)

    @property
    def clamp_rate(self) -> float:
        return self.n_clamped / self.n_runs


def _param_type(kind: str):
    if kind == "cubic":
        return PrepParamsCubic
    if kind == "quartic":
        return PrepParamsQuartic
    raise ValueError(f"Monte Carlo supports kind 'cubic' or 'quartic', got {kind!r}")


def _as_params(kind: str, mu):
    cls = _param_type(kind)
    return cls(*(mu if isinstance(mu, (tuple, list)) else astuple(mu)))


def fixed_mask(kind: str, *names: str) -> tuple[bool, ...]:
    """Mask holding the named gate parameters at their mean, e.g. ``fixed_mask("quartic", "chi")``."""
    all_names = [f.name for f in fields(_param_type(kind))]
    unknown = set(names) - set(all_names)
    if unknown:
        raise ValueError(f"unknown {kind} parameters {sorted(unknown)}; expected {all_names}")
    return tuple(n in names for n in all_names)


def sample_params(kind: str, mu, spec: FluctuationSpec, run_index: int) -> RunRecord:
    """Draw one noisy parameter tuple.

    All entries are drawn every run, fixed or not, so a run's random stream
    depends only on ``(spec.seed, run_index)``.  ``σ_j = γ |μ_j|``.
    """
    mu = _as_params(kind, mu)
    names = [f.name for f in fields(mu)]
    means = np.array(astuple(mu), dtype=float)
    if len(spec.fixed_mask) != means.size:
        raise ValueError(f"fixed_mask needs {means.size} entries")
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, run_index]))
    draws = means + spec.gamma * np.abs(means) * rng.standard_normal(means.size)
    draws = np.where(spec.fixed_mask, means, draws)
    clamped = False
    for i, name in enumerate(names):
        lo, hi = PARAM_GUARDS[kind].get(name, (-math.inf, math.inf))
        if not lo <= draws[i] <= hi:
            draws[i] = min(max(draws[i], lo), hi)
            clamped = True
    return RunRecord(tuple(float(v) for v in draws), clamped)


def evaluate_xi(kind: str, params, dim: int, convention: str = "nPlus1Sq",
                picture: str = "heisenberg") -> float:
    """``ξ`` of the pipeline output for gate parameters ``params``."""
    params = _as_params(kind, params)
    if picture == "schrodinger":
        return xi(prep(kind, params, dim, convention), 3 if kind == "cubic" else 4).xi
    if picture != "heisenberg":
        raise ValueError(f"picture must be one of {PICTURES}, got {picture!r}")
    core = prep_core(kind, params, dim, convention)
    if kind == "cubic":
        return v3_objective(core, *cubic_to_objective(params)) / gaussian_baseline(3).variance
    return v4_objective(core, *quartic_to_objective(params)) / gaussian_baseline(4).variance


def _one_run(kind, mu, spec, run_index, dim, convention, picture):
    """``(ξ or nan, clamped)`` for a single simulated experiment."""
    rec = sample_params(kind, mu, spec, run_index)
    try:
        value = evaluate_xi(kind, rec.params, dim, convention, picture)
    except FockError as exc:
        log.debug("run %d failed: %s", run_index, exc)
        return math.nan, rec.clamped
    return value, rec.clamped


def _chunk(args):
    kind, mu, spec, indices, dim, convention, picture = args
    return [_one_run(kind, mu, spec, k, dim, convention, picture) for k in indices]


def summarize(values) -> tuple[float, float, float, int, int]:
    """``(mean, σ+, σ-, N+, N-)`` of a sample; sums are exactly rounded, so the
    result does not depend on the order of the values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot summarize an empty sample")
    # the division can round a constant sample off its own value
    mean = min(max(math.fsum(values) / values.size, values.min()), values.max())
    dev = values - mean
    above, below = dev[dev > 0], dev[dev < 0]
    sp = math.sqrt(math.fsum(above**2) / above.size) if above.size else 0.0
    sm = math.sqrt(math.fsum(below**2) / below.size) if below.size else 0.0
    return mean, sp, sm, int(above.size), int(below.size)


def monte_carlo(kind: str, mu, spec: FluctuationSpec, *, dim: int = 300,
                convention: str = "nPlus1Sq", keep_trace: bool = True,
                workers: int | None = None, picture: str = "heisenberg") -> MCStats:
    """Simulate ``spec.n_runs`` noisy preparations around ``mu``.

    ``mu`` is a :class:`~kerrsqueeze.prep.PrepParamsCubic` or
    :class:`~kerrsqueeze.prep.PrepParamsQuartic` (or a plain tuple in that field
    order).  Runs whose state breaks the truncation guard are dropped and
    counted; more than 1% of them raises :class:`MonteCarloError`.
    """
    mu = _as_params(kind, mu)
    if picture not in PICTURES:
        raise ValueError(f"picture must be one of {PICTURES}, got {picture!r}")
    workers = max_workers() if workers is None else max(1, workers)
    indices = list(range(spec.n_runs))
    if workers > 1 and spec.n_runs > 1:
        n_chunks = min(spec.n_runs, 4 * workers)
        chunks = [indices[i::n_chunks] for i in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, [(kind, mu, spec, c, dim, convention, picture) for c in chunks]))
        runs = [None] * spec.n_runs
        for c, part in zip(chunks, parts):
            for k, res in zip(c, part):
                runs[k] = res
    else:
        runs = _chunk((kind, mu, spec, indices, dim, convention, picture))

    values = np.array([v for v, _ in runs])
    n_clamped = sum(c for _, c in runs)
    ok = np.isfinite(values)
    n_failed = int((~ok).sum())
    if n_failed > MAX_FAILURE_RATE * spec.n_runs:
        raise MonteCarloError(
            f"{n_failed} of {spec.n_runs} runs broke the truncation guard at dim={dim}"
        )
    mean, sp, sm, n_plus, n_minus = summarize(values[ok])
    return MCStats(
        mean_xi=mean,
        sigma_plus=sp,
        sigma_minus=sm,
        n_plus=n_plus,
        n_minus=n_minus,
        frac_below_mean=n_minus / spec.n_runs,
        n_runs=spec.n_runs,
        n_failed=n_failed,
        n_clamped=int(n_clamped),
        per_run_xi=values if keep_trace else None,
    )


def monte_carlo_fixed(kind: str, mu, spec: FluctuationSpec, fixed: tuple[str, ...] = (),
                      **kwargs) -> MCStats:
    """:func:`monte_carlo` with the named parameters held at their mean.

    The names are merged into ``spec.fixed_mask``.
    """
    mask = fixed_mask(kind, *fixed)
    merged = tuple(a or b for a, b in zip(spec.fixed_mask, mask))
    spec = FluctuationSpec(spec.gamma, spec.n_runs, merged, spec.seed)
    return monte_carlo(kind, mu, spec, **kwargs)
