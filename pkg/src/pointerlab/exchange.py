"""One-quantum-at-a-time exchange between a system mode and an environment mode.

A single excitation evolves as alpha|1,0> + beta|0,1>. Bosonic symmetry fixes
the evolution of every Fock state from that single pair of amplitudes:

    |n,0>  ->  sum_m sqrt(C(n, m)) alpha^m beta^(n-m) |m, n-m>

and linearity extends it to arbitrary system states with the environment
starting in its vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import FockVector, TwoModeState, partial_trace, purity

AMPLITUDE_TOL = 1e-10


@dataclass(frozen=True)
class AmplitudePair:
    """Survival (alpha) and transfer (beta) amplitudes of one excitation."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        total = abs(a) ** 2 + abs(b) ** 2
        if abs(total - 1.0) > AMPLITUDE_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {total!r}, expected 1")

    @classmethod
    def from_transfer(cls, beta2: float, phase: float = 0.0) -> "AmplitudePair":
        """Real amplitudes with transfer probability ``beta2`` and a common phase."""
        beta2 = min(max(float(beta2), 0.0), 1.0)
        carrier = np.exp(1j * phase)
        return cls(carrier * np.sqrt(1.0 - beta2), carrier * np.sqrt(beta2))

    @property
    def survival(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def transfer(self) -> float:
        return abs(self.beta) ** 2


def _log_binomial(n: int) -> np.ndarray:
    m = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)


def _powers(z: complex, k: np.ndarray) -> np.ndarray:
    # 0**0 == 1 keeps the vacuum row/column correct
    return np.where(k == 0, 1.0 + 0j, complex(z) ** k.astype(float))


def exchange_matrix(n: int, amps: AmplitudePair) -> np.ndarray:
    """Coefficients sqrt(C(n,m)) alpha^m beta^(n-m) for m = 0..n."""
    m = np.arange(n + 1)
    half_binom = np.exp(0.5 * _log_binomial(n))
    return half_binom * _powers(amps.alpha, m) * _powers(amps.beta, n - m)


def evolve_fock(n: int, amps: AmplitudePair, n_trunc: int | None = None) -> TwoModeState:
    """Evolve |n_S> (x) |0_E> under the exchange rule."""
    if n < 0:
        raise ValueError("occupation must be non-negative")
    n_trunc = n if n_trunc is None else n_trunc
    if n > n_trunc:
        raise ValueError(f"occupation {n} exceeds truncation {n_trunc}")
    out = np.zeros((n_trunc + 1, n_trunc + 1), dtype=complex)
    m = np.arange(n + 1)
    out[m, n - m] = exchange_matrix(n, amps)
    return TwoModeState(out)


def evolve_system(psi: FockVector, amps: AmplitudePair) -> TwoModeState:
    """Linear extension of :func:`evolve_fock` over the Fock expansion of ``psi``.

    Both output axes keep the input truncation: excitation number is
    conserved, so nothing is lost.
    """
    c = psi.amplitudes
    N = c.size - 1
    out = np.zeros((N + 1, N + 1), dtype=complex)
    for n in np.flatnonzero(c):
        m = np.arange(n + 1)
        out[m, n - m] += c[n] * exchange_matrix(int(n), amps)
    return TwoModeState(out)


def factorization_check(psi: FockVector, amps: AmplitudePair) -> float:
    """Purity of the system after the exchange; 1 means no entanglement was created."""
    return purity(partial_trace(evolve_system(psi, amps), keep="system"))
