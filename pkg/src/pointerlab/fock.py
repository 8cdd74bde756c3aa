"""Truncated Fock-space state algebra for one and two bosonic modes.

States are small immutable value objects wrapping numpy arrays. Index ``n``
of a :class:`FockVector` is the occupation number, so a truncation
``n_trunc`` gives ``n_trunc + 1`` amplitudes. Units: hbar = 1, entropies in
bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-8
DEFAULT_TAIL_TOL = 1e-12
# eigenvalues below this are treated as exact zeros in entropies
ENTROPY_FLOOR = 1e-12
# relative eigenvalue cutoff when taking matrix square roots for fidelities
FIDELITY_FLOOR = 1e-14


class TruncationError(ValueError):
    """Raised when a truncation drops more probability than allowed."""


class InvalidStateError(ValueError):
    """Raised when an object violates its physical invariants."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FockVector:
    """Pure state of one truncated bosonic mode."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise InvalidStateError("amplitudes must be a non-empty 1-d array")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_trunc(self) -> int:
        return self.amplitudes.size - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return FockVector(self.amplitudes / nrm)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def mean_occupation(self) -> float:
        p = np.abs(self.amplitudes) ** 2
        return float(np.dot(np.arange(self.dim), p) / p.sum())

    def inner(self, other: "FockVector") -> complex:
        """<self|other>, zero-padding the shorter vector."""
        a, b = _pad_pair(self.amplitudes, other.amplitudes)
        return complex(np.vdot(a, b))

    def fidelity(self, other: "FockVector") -> float:
        return abs(self.inner(other)) ** 2

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def padded(self, n_trunc: int) -> "FockVector":
        if n_trunc < self.n_trunc:
            raise ValueError("padding cannot shrink a state")
        out = np.zeros(n_trunc + 1, dtype=complex)
        out[: self.dim] = self.amplitudes
        return FockVector(out)

    def __add__(self, other: "FockVector") -> "FockVector":
        a, b = _pad_pair(self.amplitudes, other.amplitudes)
        return FockVector(a + b)

    def __mul__(self, scalar: complex) -> "FockVector":
        return FockVector(self.amplitudes * scalar)

    __rmul__ = __mul__


def _pad_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size))


@dataclass(frozen=True)
class TwoModeState:
    """Pure joint state; ``amplitudes[n, m]`` is the weight of |n_S> (x) |m_E>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 2:
            raise InvalidStateError("two-mode amplitudes must be a matrix")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_trunc_s(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def n_trunc_e(self) -> int:
        return self.amplitudes.shape[1] - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def product(cls, system: FockVector, environment: FockVector) -> "TwoModeState":
        return cls(np.outer(system.amplitudes, environment.amplitudes))

    def mean_occupations(self) -> tuple[float, float]:
        """(<n_S>, <n_E>) for the normalized state."""
        p = np.abs(self.amplitudes) ** 2
        p = p / p.sum()
        ns = np.arange(p.shape[0])
        ms = np.arange(p.shape[1])
        return float(ns @ p.sum(axis=1)), float(ms @ p.sum(axis=0))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on a truncated Fock space.

    Construction validates Hermiticity, unit trace and positivity at the
    module tolerances. Pass ``validate=False`` for intermediate operators
    (e.g. the right-hand side of a master equation).
    """

    entries: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError("density matrix must be square")
        object.__setattr__(self, "entries", rho)
        if self.validate:
            self.check()

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def check(self) -> None:
        rho = self.entries
        herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian (deviation {herm:.3e})")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr!r} is not 1")
        low = np.linalg.eigvalsh(_hermitize(rho)).min()
        if low < -PSD_TOL:
            raise InvalidStateError(f"negative eigenvalue {low:.3e}")

    def eigenvalues(self) -> np.ndarray:
        """Spectrum in descending order, tiny negatives clipped to zero."""
        w = np.linalg.eigvalsh(_hermitize(self.entries))[::-1]
        if w.min() < -PSD_TOL:
            raise InvalidStateError(f"negative eigenvalue {w.min():.3e}")
        return np.clip(w, 0.0, None)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.entries @ op))

    def mean_occupation(self) -> float:
        return float(np.real(np.diag(self.entries)) @ np.arange(self.dimension))

    def padded(self, dim: int) -> "DensityMatrix":
        out = np.zeros((dim, dim), dtype=complex)
        d = self.dimension
        out[:d, :d] = self.entries
        return DensityMatrix(out, validate=self.validate)


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left_vectors: np.ndarray  # columns
    right_vectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.coefficients) @ self.right_vectors.T

    @property
    def leading(self) -> float:
        return float(self.coefficients[0])

    def entropy(self) -> float:
        return entropy_bits(self.coefficients**2)


# --- constructors -----------------------------------------------------------


def fock_state(n: int, n_trunc: int) -> FockVector:
    if not 0 <= n <= n_trunc:
        raise ValueError(f"occupation {n} outside 0..{n_trunc}")
    amps = np.zeros(n_trunc + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def poisson_tail(lam: complex, n_trunc: int) -> float:
    """Probability mass of a coherent state above ``n_trunc``."""
    from scipy.stats import poisson

    return float(poisson.sf(n_trunc, abs(lam) ** 2))


def auto_truncation(lam: complex, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest N with Poisson tail sum_{n>N} below ``tail_tol``."""
    mu = abs(lam) ** 2
    if mu == 0.0:
        return 0
    n = int(mu)
    while poisson_tail(lam, n) >= tail_tol:
        n += 1
    return n


def coherent_amplitudes(lam: complex, n_trunc: int) -> np.ndarray:
    """Raw truncated amplitudes e^{-|lam|^2/2} lam^n / sqrt(n!), not renormalized."""
    n = np.arange(n_trunc + 1)
    if lam == 0:
        amps = np.zeros(n_trunc + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    # log-space magnitudes keep large n_trunc finite
    logmag = -0.5 * abs(lam) ** 2 + n * np.log(abs(lam)) - 0.5 * gammaln(n + 1)
    phase = np.exp(1j * n * np.angle(lam))
    return np.exp(logmag) * phase


def _check_tail(lam: complex, n_trunc: int, tail_tol: float, allow_truncation: bool):
    if n_trunc < 0:
        raise ValueError("n_trunc must be non-negative")
    if not allow_truncation:
        tail = poisson_tail(lam, n_trunc)
        if tail >= tail_tol:
            raise TruncationError(
                f"n_trunc={n_trunc} drops tail mass {tail:.3e} for |lambda|={abs(lam):.4g}; "
                f"need n_trunc >= {auto_truncation(lam, tail_tol)}"
            )


def coherent_state(
    lam: complex,
    n_trunc: int | None = None,
    *,
    tail_tol: float = DEFAULT_TAIL_TOL,
    allow_truncation: bool = False,
) -> FockVector:
    """Coherent state |lam>, renormalized after truncation."""
    lam = complex(lam)
    if n_trunc is None:
        n_trunc = auto_truncation(lam, tail_tol)
    _check_tail(lam, n_trunc, tail_tol, allow_truncation)
    return FockVector(coherent_amplitudes(lam, n_trunc)).normalized()


def kitten_state(
    lam: complex,
    n_trunc: int | None = None,
    *,
    tail_tol: float = DEFAULT_TAIL_TOL,
    allow_truncation: bool = False,
) -> FockVector:
    """Even cat (|lam> + |-lam>)/sqrt(2(1+exp(-2|lam|^2)))."""
    lam = complex(lam)
    if n_trunc is None:
        n_trunc = auto_truncation(lam, tail_tol)
    _check_tail(lam, n_trunc, tail_tol, allow_truncation)
    amps = coherent_amplitudes(lam, n_trunc)
    amps[1::2] = 0.0
    return FockVector(amps).normalized()


# --- operators --------------------------------------------------------------


def annihilation_operator(n_trunc: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_trunc + 1)), k=1).astype(complex)


def number_operator(n_trunc: int) -> np.ndarray:
    return np.diag(np.arange(n_trunc + 1)).astype(complex)


def annihilate(state: FockVector) -> FockVector:
    """a|psi>, unnormalized; the top entry becomes zero."""
    c = state.amplitudes
    out = np.zeros_like(c)
    out[:-1] = np.sqrt(np.arange(1, c.size)) * c[1:]
    return FockVector(out)


# --- bipartite analysis -----------------------------------------------------


def partial_trace(state: TwoModeState, keep: str = "system") -> DensityMatrix:
    """Reduced state of one mode of a pure two-mode state.

    ``keep`` is ``"system"`` (trace out the environment) or ``"environment"``.
    """
    psi = state.amplitudes
    if keep in ("system", "s", 0):
        rho = psi @ psi.conj().T
    elif keep in ("environment", "e", 1):
        rho = psi.T @ psi.conj()
    else:
        raise ValueError(f"unknown axis selector {keep!r}")
    return DensityMatrix(_hermitize(rho))


def schmidt(state: TwoModeState) -> SchmidtDecomposition:
    """Schmidt form via SVD; coefficients come out non-increasing."""
    u, s, vh = np.linalg.svd(state.amplitudes, full_matrices=False)
    return SchmidtDecomposition(s, u, vh.T)


def entropy_bits(probabilities: np.ndarray) -> float:
    p = np.asarray(probabilities, dtype=float)
    p = p[p > ENTROPY_FLOOR]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return entropy_bits(rho.eigenvalues())


def purity(rho: DensityMatrix) -> float:
    m = rho.entries
    return float(np.real(np.vdot(m.conj().T, m)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    d = max(rho.dimension, sigma.dimension)
    a = rho.padded(d).entries if rho.dimension < d else rho.entries
    b = sigma.padded(d).entries if sigma.dimension < d else sigma.entries
    w = np.linalg.eigvalsh(_hermitize(a - b))
    return float(0.5 * np.sum(np.abs(w)))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix | FockVector) -> float:
    """Uhlmann fidelity (squared convention); pure ``sigma`` takes the fast path."""
    if isinstance(sigma, FockVector):
        d = max(rho.dimension, sigma.dim)
        r = rho.padded(d).entries if rho.dimension < d else rho.entries
        v = sigma.padded(d - 1).amplitudes if sigma.dim < d else sigma.amplitudes
        return float(np.real(np.vdot(v, r @ v)))
    d = max(rho.dimension, sigma.dimension)
    a = rho.padded(d).entries if rho.dimension < d else rho.entries
    b = sigma.padded(d).entries if sigma.dimension < d else sigma.entries
    # singular values of sqrt(a) sqrt(b) avoid square roots of round-off
    # eigenvalues of sqrt(a) b sqrt(a), which would add ~1e-8 per null direction
    s = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)
    return float(np.sum(s) ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_hermitize(m))
    w = np.where(w > FIDELITY_FLOOR * max(w.max(), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T
