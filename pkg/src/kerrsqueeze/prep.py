"""Preparation pipelines: one Kerr gate plus Gaussian gates acting on the vacuum.

* linear:  ``K(χ) D(α) |0⟩``
* cubic:   ``S(r) D_p(β) R(φ) K(χ) D(α) |0⟩``
* quartic: ``R(φ2) S(w) R(φ1) K(χ) S(r) |0⟩``

In the cubic pipeline the displacement after the Kerr gate shifts ``p``
(``D_p(β) = exp(iβx)``).  A shift of ``x`` there would only move ``⟨O_3⟩`` and
leave the variance untouched.  With this choice the pipeline reproduces the
transformed-operator objective of :func:`kerrsqueeze.metrics.v3_objective` with
``g = e^r``.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .fock import (
    FockState,
    evolve,
    gate_displacement,
    gate_kerr,
    gate_momentum_displacement,
    gate_rotation,
    gate_squeeze,
    kerr_spectrum,
)

__all__ = [
    "PrepParamsLinear",
    "PrepParamsCubic",
    "PrepParamsQuartic",
    "linear_gates",
    "cubic_gates",
    "quartic_gates",
    "prep_linear",
    "prep_cubic",
    "prep_quartic",
    "prep",
    "prep_core",
    "cubic_from_objective",
    "cubic_to_objective",
    "quartic_from_objective",
    "quartic_to_objective",
]


class _Params:
    def astuple(self) -> tuple[float, ...]:
        return astuple(self)

    def __post_init__(self):
        for name, value in zip(self.__dataclass_fields__, astuple(self)):
            if not np.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PrepParamsLinear(_Params):
    alpha: float
    chi: float


@dataclass(frozen=True)
class PrepParamsCubic(_Params):
    alpha: float
    chi: float
    phi: float
    beta: float
    r: float


@dataclass(frozen=True)
class PrepParamsQuartic(_Params):
    r: float
    chi: float
    phi1: float
    w: float
    phi2: float


def _steps(kind: str, p, dim: int, convention: str):
    """Pipeline as ``(gate builder, fast action)`` pairs in application order."""
    n = np.arange(dim, dtype=float)

    def gen(builder, name, coeff, value):
        return (lambda: builder(value, dim)), (lambda v: evolve(name, coeff, v))

    def diag(builder, phases, *args):
        return (lambda: builder(*args)), (lambda v: phases * v)

    def kerr(chi):
        return diag(gate_kerr, np.exp(-1j * chi * kerr_spectrum(dim, convention)), chi, dim, convention)

    def rot(phi):
        return diag(gate_rotation, np.exp(-1j * phi * (n + 0.5)), phi, dim)

    def disp(alpha):
        return gen(gate_displacement, "p", -1j * alpha, alpha)

    def sq(r):
        return gen(gate_squeeze, "xp", -1j * r, r)

    if kind == "linear":
        return [disp(p.alpha), kerr(p.chi)]
    if kind == "cubic":
        return [disp(p.alpha), kerr(p.chi), rot(p.phi),
                gen(gate_momentum_displacement, "x", 1j * p.beta, p.beta), sq(p.r)]
    return [sq(p.r), kerr(p.chi), rot(p.phi1), sq(p.w), rot(p.phi2)]


def linear_gates(p: PrepParamsLinear, dim: int, convention: str = "nPlus1Sq"):
    """Gates in application order."""
    return [build() for build, _ in _steps("linear", p, dim, convention)]


def cubic_gates(p: PrepParamsCubic, dim: int, convention: str = "nPlus1Sq"):
    return [build() for build, _ in _steps("cubic", p, dim, convention)]


def quartic_gates(p: PrepParamsQuartic, dim: int, convention: str = "nPlus1Sq"):
    return [build() for build, _ in _steps("quartic", p, dim, convention)]


def _run(kind, p, dim: int, convention: str, check: bool) -> FockState:
    state = FockState.vacuum(dim)
    for _, act in _steps(kind, p, dim, convention):
        state = FockState(act(state.amplitudes))
        if check:
            state.check_faithful()
    return state


def prep_linear(p: PrepParamsLinear, dim: int, convention: str = "nPlus1Sq",
                check: bool = True) -> FockState:
    """``K(χ) D(α)|0⟩``.

    With ``check`` set every intermediate state is tested against the
    truncation tail-mass guard and :class:`~kerrsqueeze.fock.TruncationError`
    is raised when it fails.
    """
    return _run("linear", p, dim, convention, check)


def prep_cubic(p: PrepParamsCubic, dim: int, convention: str = "nPlus1Sq",
               check: bool = True) -> FockState:
    return _run("cubic", p, dim, convention, check)


def prep_quartic(p: PrepParamsQuartic, dim: int, convention: str = "nPlus1Sq",
                 check: bool = True) -> FockState:
    return _run("quartic", p, dim, convention, check)


def prep(kind: str, p, dim: int, convention: str = "nPlus1Sq", check: bool = True) -> FockState:
    """Dispatch on ``kind`` in ``{"linear", "cubic", "quartic"}``."""
    if kind not in ("linear", "cubic", "quartic"):
        raise ValueError(f"unknown kind {kind!r}")
    return _run(kind, p, dim, convention, check)


def prep_core(kind: str, p, dim: int, convention: str = "nPlus1Sq",
              check: bool = True) -> FockState:
    """State right after the Kerr gate, ``K(χ)D(α)|0⟩`` or ``K(χ)S(r)|0⟩``.

    The Gaussian gates that follow only transform quadratures linearly, so the
    full pipeline's statistics follow from this state and the transformed
    operators of :func:`~kerrsqueeze.metrics.v3_objective` and
    :func:`~kerrsqueeze.metrics.v4_objective`.
    """
    if kind not in ("linear", "cubic", "quartic"):
        raise ValueError(f"unknown kind {kind!r}")
    state = FockState.vacuum(dim)
    for _, act in _steps(kind, p, dim, convention)[:2]:
        state = FockState(act(state.amplitudes))
        if check:
            state.check_faithful()
    return state


# -- objective parameters <-> gate parameters ---------------------------------


def cubic_to_objective(p: PrepParamsCubic) -> tuple[float, float, float]:
    """``(g, φ, β)`` of :func:`~kerrsqueeze.metrics.v3_objective` for this pipeline."""
    return float(np.exp(p.r)), p.phi, p.beta


def cubic_from_objective(alpha: float, chi: float, g: float, phi: float,
                         beta: float) -> PrepParamsCubic:
    if g <= 0:
        # g -> -g is the same objective with φ -> φ + π, β -> -β
        g, phi, beta = -g, phi + np.pi, -beta
    phi = (phi + np.pi) % (2 * np.pi) - np.pi
    return PrepParamsCubic(alpha, chi, phi, beta, float(np.log(g)))


def quartic_to_objective(p: PrepParamsQuartic) -> tuple[float, float, float]:
    """``(ω, φ1, φ2)`` of :func:`~kerrsqueeze.metrics.v4_objective`."""
    return float(np.exp(p.w)), _wrap(np.pi / 2 - p.phi1), _wrap(np.pi / 2 - p.phi2)


def quartic_from_objective(r: float, chi: float, omega: float, phi1: float,
                           phi2: float) -> PrepParamsQuartic:
    if omega <= 0:
        # ω -> -ω flips the sign of both transformed quadratures: a rotation by π
        omega, phi2 = -omega, phi2 + np.pi
    return PrepParamsQuartic(r, chi, _wrap(np.pi / 2 - phi1), float(np.log(omega)),
                             _wrap(np.pi / 2 - phi2))


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2 * np.pi) - np.pi)
