"""Single-mode states and gates in a truncated Fock basis.

Conventions: ``[x, p] = i``, ``x = (a + a†)/√2``, ``p = (a - a†)/(i√2)``, so the
vacuum has ``var(x) = var(p) = 1/2`` and ``n = (x² + p² - 1)/2``.

Gate conventions (Heisenberg action on the quadratures):

* ``gate_displacement(α) = exp(-iαp)``:  ``x -> x + α``
* ``gate_squeeze(r)``:  ``x -> e^r x``, ``p -> e^-r p``
* ``gate_rotation(φ) = exp(-iφ(x² + p²)/2)``:  ``x -> cos φ x + sin φ p``,
  ``p -> cos φ p - sin φ x``.  Applied to a state this turns a mean
  ``(⟨x⟩, ⟨p⟩) = (1, 0)`` into ``(cos φ, -sin φ)``.
* ``gate_kerr(χ) = exp(-iχ H)`` with ``H = (n + 1)²`` (``"nPlus1Sq"``) or
  ``H = (2n + 1)² = (x² + p²)²`` (``"twoNplus1Sq"``).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DEFAULT_DIM",
    "KERR_CONVENTIONS",
    "TAIL_FRACTION",
    "TAIL_THRESHOLD",
    "FockError",
    "DimensionError",
    "TruncationError",
    "FockState",
    "OperatorMatrix",
    "VarianceMatrix",
    "build_ladder",
    "build_quadratures",
    "number_operator",
    "quadrature_power",
    "evolve",
    "gate_displacement",
    "gate_momentum_displacement",
    "gate_squeeze",
    "gate_rotation",
    "gate_kerr",
    "kerr_spectrum",
    "apply",
    "expectation",
    "variance_matrix",
    "fock_probabilities",
    "wigner_grid",
]

DEFAULT_DIM = 300
KERR_CONVENTIONS = ("nPlus1Sq", "twoNplus1Sq")

# fraction of the basis counted as "tail" and the largest weight tolerated there
TAIL_FRACTION = 0.1
TAIL_THRESHOLD = 1e-8

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class FockError(ValueError):
    """Base class for errors raised by the Fock-space layer."""


class DimensionError(FockError):
    """Invalid truncation dimension, or operands of mismatched dimension."""


class TruncationError(FockError):
    """A state carries too much weight near the truncation edge."""


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 2:
        raise DimensionError(f"truncation dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


@dataclass(frozen=True)
class FockState:
    """Normalized pure state ``Σ c_n |n⟩`` with ``n < dim``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise DimensionError("amplitudes must be a 1-D vector")
        _check_dim(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise FockError(f"state is not normalized (norm² = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def vacuum(cls, dim: int) -> "FockState":
        amps = np.zeros(_check_dim(dim), dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def number(cls, n: int, dim: int) -> "FockState":
        dim = _check_dim(dim)
        if not 0 <= n < dim:
            raise DimensionError(f"|{n}⟩ does not fit in dimension {dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "FockState":
        amps = np.asarray(amplitudes, dtype=complex)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise FockError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tail_mass(self, fraction: float = TAIL_FRACTION) -> float:
        """Probability weight in the top ``fraction`` of the basis."""
        start = int(np.ceil((1.0 - fraction) * self.dim))
        tail = self.amplitudes[start:]
        return float(np.vdot(tail, tail).real)

    def is_faithful(self, threshold: float = TAIL_THRESHOLD) -> bool:
        return self.tail_mass() < threshold

    def check_faithful(self, threshold: float = TAIL_THRESHOLD) -> "FockState":
        """Return ``self`` or raise :class:`TruncationError`."""
        mass = self.tail_mass()
        if not mass < threshold:
            raise TruncationError(
                f"tail mass {mass:.3e} in the top {TAIL_FRACTION:.0%} of dim={self.dim} "
                f"exceeds {threshold:.1e}; increase the dimension"
            )
        return self


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on the truncated space.

    ``kind`` is one of ``"hermitian"``, ``"unitary"`` or ``"general"``.  Gates that
    are diagonal in the Fock basis also carry ``diagonal`` so they can be applied
    element-wise.
    """

    entries: np.ndarray
    kind: str = "general"
    diagonal: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("hermitian", "unitary", "general"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("operator entries must be a square matrix")
        scale = max(1.0, float(np.abs(entries).max(initial=0.0)))
        if self.kind == "hermitian" and not np.allclose(entries, entries.conj().T, rtol=0,
                                                        atol=HERMITIAN_TOL * scale):
            raise FockError("operator marked hermitian is not self-adjoint")
        if self.kind == "unitary" and self.diagonal is None:
            defect = np.abs(entries.conj().T @ entries - np.eye(entries.shape[0])).max()
            if defect > UNITARY_TOL:
                raise FockError(f"operator marked unitary has |U†U - I| = {defect:.2e}")
        if self.kind == "unitary" and self.diagonal is not None:
            if np.abs(np.abs(np.asarray(self.diagonal)) - 1).max() > UNITARY_TOL:
                raise FockError("diagonal gate entries must have unit modulus")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.diagonal is not None:
            diag = np.array(self.diagonal, dtype=complex)
            diag.setflags(write=False)
            object.__setattr__(self, "diagonal", diag)

    @classmethod
    def from_diagonal(cls, diag, kind: str = "unitary") -> "OperatorMatrix":
        diag = np.asarray(diag, dtype=complex)
        return cls(np.diag(diag), kind, diag)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def dag(self) -> "OperatorMatrix":
        kind = "general" if self.kind == "general" else self.kind
        diag = None if self.diagonal is None else self.diagonal.conj()
        return OperatorMatrix(self.entries.conj().T, kind, diag)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"cannot compose dim {self.dim} with dim {other.dim}")
        kind = "unitary" if self.kind == other.kind == "unitary" else "general"
        diag = None
        if self.diagonal is not None and other.diagonal is not None:
            diag = self.diagonal * other.diagonal
        return OperatorMatrix(self.entries @ other.entries, kind, diag)


@dataclass(frozen=True)
class VarianceMatrix:
    """Symmetrized second central moments of ``(x, p)``."""

    vxx: float
    vpp: float
    vxp: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.vxx, self.vxp], [self.vxp, self.vpp]])

    @property
    def det(self) -> float:
        return self.vxx * self.vpp - self.vxp**2

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in ascending order."""
        return np.linalg.eigvalsh(self.as_array())


# -- operators ---------------------------------------------------------------


def build_ladder(dim: int) -> OperatorMatrix:
    """Annihilation operator ``a`` with ``a[n-1, n] = √n``."""
    dim = _check_dim(dim)
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, dim)), k=1), "general")


def build_quadratures(dim: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Return ``(x, p)`` on the truncated space."""
    a = build_ladder(dim).entries
    ad = a.conj().T
    x = (a + ad) / np.sqrt(2)
    p = (a - ad) / (1j * np.sqrt(2))
    return OperatorMatrix(x, "hermitian"), OperatorMatrix(p, "hermitian")


def number_operator(dim: int) -> OperatorMatrix:
    dim = _check_dim(dim)
    n = np.arange(dim, dtype=float)
    return OperatorMatrix(np.diag(n), "hermitian", n)


@functools.lru_cache(maxsize=64)
def _quadrature_power(which: str, k: int, dim: int) -> np.ndarray:
    # power taken in a padded space so every entry of the dim×dim block is exact
    x, p = build_quadratures(dim + k)
    base = x.entries if which == "x" else p.entries
    out = np.linalg.matrix_power(base, k)[:dim, :dim]
    out = (out + out.conj().T) / 2
    out.setflags(write=False)
    return out


def quadrature_power(which: str, k: int, dim: int) -> OperatorMatrix:
    """``x^k`` or ``p^k`` restricted to the truncated space.

    Unlike the power of the truncated matrix, every entry here is the exact
    matrix element of the untruncated operator.
    """
    if which not in ("x", "p"):
        raise ValueError("which must be 'x' or 'p'")
    if k < 0:
        raise ValueError("power must be non-negative")
    return OperatorMatrix(_quadrature_power(which, int(k), _check_dim(dim)), "hermitian")


@functools.lru_cache(maxsize=16)
def _eigh_generator(name: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    x, p = build_quadratures(dim)
    if name == "p":
        gen = p.entries
    elif name == "x":
        gen = x.entries
    elif name == "xp":
        a = build_ladder(dim).entries
        # (xp + px)/2 = i(a†² - a²)/2; the ladder form is exact on the block.
        # It only couples equal parities, so each parity block is diagonalized
        # on its own and the eigenvectors carry exact zeros on the other one.
        gen = 0.5j * (a.T @ a.T - a @ a)
        w = np.empty(dim)
        v = np.zeros((dim, dim), dtype=complex)
        for parity in (0, 1):
            idx = np.arange(parity, dim, 2)
            wb, vb = np.linalg.eigh(gen[np.ix_(idx, idx)])
            w[idx] = wb
            v[np.ix_(idx, idx)] = vb
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v
    else:
        raise KeyError(name)
    w, v = np.linalg.eigh(gen)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def _exp_generator(name: str, coeff: complex, dim: int) -> np.ndarray:
    """``exp(coeff · G)`` for an imaginary ``coeff`` and Hermitian generator ``G``."""
    w, v = _eigh_generator(name, _check_dim(dim))
    return (v * np.exp(coeff * w)) @ v.conj().T


def evolve(name: str, coeff: complex, amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``exp(coeff · G)`` to a coefficient vector without forming the gate.

    ``name`` selects the generator: ``"p"``, ``"x"`` or ``"xp"`` for
    ``(xp + px)/2``.  Equal to the corresponding gate's matrix-vector product.
    """
    w, v = _eigh_generator(name, _check_dim(amplitudes.size))
    return v @ (np.exp(coeff * w) * (v.conj().T @ amplitudes))


def gate_displacement(alpha: float, dim: int = DEFAULT_DIM) -> OperatorMatrix:
    """``exp(-iαp)``: shifts ``x`` by ``alpha``."""
    return OperatorMatrix(_exp_generator("p", -1j * float(alpha), dim), "unitary")


def gate_momentum_displacement(beta: float, dim: int = DEFAULT_DIM) -> OperatorMatrix:
    """``exp(iβx)``: shifts ``p`` by ``beta``."""
    return OperatorMatrix(_exp_generator("x", 1j * float(beta), dim), "unitary")


def gate_squeeze(r: float, dim: int = DEFAULT_DIM) -> OperatorMatrix:
    """Squeezer with Heisenberg action ``x -> e^r x``, ``p -> e^-r p``.

    ``var(x)`` of the squeezed vacuum is ``e^{2r}/2``.  As a generator this is
    ``exp(-ir(xp + px)/2)``; the opposite sign in front of ``r`` would squeeze ``x``.
    """
    return OperatorMatrix(_exp_generator("xp", -1j * float(r), dim), "unitary")


def gate_rotation(phi: float, dim: int = DEFAULT_DIM) -> OperatorMatrix:
    """Phase shift ``exp(-iφ(n + 1/2))``, diagonal in the Fock basis."""
    n = np.arange(_check_dim(dim), dtype=float)
    return OperatorMatrix.from_diagonal(np.exp(-1j * float(phi) * (n + 0.5)))


def kerr_spectrum(dim: int, convention: str = "nPlus1Sq") -> np.ndarray:
    """Diagonal of the Kerr Hamiltonian for the given convention."""
    n = np.arange(_check_dim(dim), dtype=float)
    if convention == "nPlus1Sq":
        return (n + 1.0) ** 2
    if convention == "twoNplus1Sq":
        return (2.0 * n + 1.0) ** 2
    raise ValueError(f"unknown Kerr convention {convention!r}; expected one of {KERR_CONVENTIONS}")


def gate_kerr(chi: float, dim: int = DEFAULT_DIM, convention: str = "nPlus1Sq") -> OperatorMatrix:
    """Kerr gate ``exp(-iχH)``, diagonal in the Fock basis."""
    return OperatorMatrix.from_diagonal(np.exp(-1j * float(chi) * kerr_spectrum(dim, convention)))


# -- states ------------------------------------------------------------------


def apply(gate: OperatorMatrix, state: FockState) -> FockState:
    """Apply a unitary gate to a state."""
    if gate.dim != state.dim:
        raise DimensionError(f"gate dim {gate.dim} does not match state dim {state.dim}")
    if gate.kind != "unitary":
        raise FockError(f"only unitary gates can be applied, got kind={gate.kind!r}")
    if gate.diagonal is not None:
        out = gate.diagonal * state.amplitudes
    else:
        out = gate.entries @ state.amplitudes
    return FockState(out)


def expectation(state: FockState, op: OperatorMatrix) -> complex:
    """``⟨ψ|O|ψ⟩``."""
    if op.dim != state.dim:
        raise DimensionError(f"operator dim {op.dim} does not match state dim {state.dim}")
    psi = state.amplitudes
    if op.diagonal is not None:
        return complex(np.vdot(psi, op.diagonal * psi))
    return complex(np.vdot(psi, op.entries @ psi))


def _lower(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    out[:-1] = np.sqrt(np.arange(1, v.size)) * v[1:]
    return out


def _raise(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    out[1:] = np.sqrt(np.arange(1, v.size)) * v[:-1]
    return out


def apply_x(v: np.ndarray) -> np.ndarray:
    """``x`` acting on a coefficient vector (tridiagonal, O(dim))."""
    return (_lower(v) + _raise(v)) / np.sqrt(2)


def apply_p(v: np.ndarray) -> np.ndarray:
    """``p`` acting on a coefficient vector (tridiagonal, O(dim))."""
    return (_lower(v) - _raise(v)) / (1j * np.sqrt(2))


def variance_matrix(state: FockState) -> VarianceMatrix:
    """Symmetrically ordered covariance of ``(x, p)``."""
    # pad so x·ψ and p·ψ are exact, then second moments are plain inner products
    psi = np.concatenate([state.amplitudes, np.zeros(1, dtype=complex)])
    xpsi = apply_x(psi)
    ppsi = apply_p(psi)
    mx = np.vdot(psi, xpsi).real
    mp = np.vdot(psi, ppsi).real
    xx = np.vdot(xpsi, xpsi).real
    pp = np.vdot(ppsi, ppsi).real
    # ⟨(xp + px)/2⟩ = Re⟨xψ|pψ⟩
    xp = np.vdot(xpsi, ppsi).real
    return VarianceMatrix(float(xx - mx**2), float(pp - mp**2), float(xp - mx * mp))


def fock_probabilities(state: FockState) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def wigner_grid(state: FockState, xvec, pvec) -> np.ndarray:
    """Wigner function ``W[i, j] = W(x_j, p_i)`` on the given grid.

    Uses the Laguerre recurrence for the Fock-basis Wigner kernels, normalized so
    that ``∫∫ W dx dp = 1`` in the ``[x, p] = i`` convention.
    """
    xvec = np.asarray(xvec, dtype=float)
    pvec = np.asarray(pvec, dtype=float)
    if not (np.all(np.isfinite(xvec)) and np.all(np.isfinite(pvec))):
        raise ValueError("grid bounds must be finite")
    psi = state.amplitudes
    rho = np.outer(psi, psi.conj())
    cutoff = rho.shape[0]
    X, P = np.meshgrid(xvec, pvec)
    A = (X + 1j * P) * np.sqrt(2)

    w_prev = np.zeros((cutoff,) + A.shape, dtype=complex)
    w_prev[0] = np.exp(-0.5 * np.abs(A) ** 2) / np.pi
    W = rho[0, 0].real * w_prev[0].real
    for n in range(1, cutoff):
        w_prev[n] = A * w_prev[n - 1] / np.sqrt(n)
        W += 2 * np.real(rho[0, n] * w_prev[n])
    w_cur = np.zeros_like(w_prev)
    for m in range(1, cutoff):
        w_cur[m] = (np.conj(A) * w_prev[m] - np.sqrt(m) * w_prev[m - 1]) / np.sqrt(m)
        W += np.real(rho[m, m] * w_cur[m])
        for n in range(m + 1, cutoff):
            w_cur[n] = (A * w_cur[n - 1] - np.sqrt(m) * w_prev[n - 1]) / np.sqrt(n)
            W += 2 * np.real(rho[m, n] * w_cur[n])
        w_prev, w_cur = w_cur, w_prev
    return W
