"""Time-dependent exchange amplitudes for the coherent and Markovian regimes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .exchange import AmplitudePair


@dataclass(frozen=True)
class RabiModel:
    """Two resonant oscillators with coupling ``kappa`` (coherent swap)."""

    omega: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def rate(self) -> float:
        return self.kappa

    def amplitudes(self, t: float) -> AmplitudePair:
        return rabi_amplitudes(self, t)


@dataclass(frozen=True)
class MarkovModel:
    """Exponential loss at rate ``gamma`` into a zero-temperature bath."""

    gamma: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def rate(self) -> float:
        return self.gamma

    def amplitudes(self, t: float) -> AmplitudePair:
        return markov_amplitudes(self, t)


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0:
        raise ValueError("time must be non-negative")
    return t


def rabi_amplitudes(model: RabiModel, t: float) -> AmplitudePair:
    """alpha = e^{i w t} cos(k t), beta = e^{i w t} sin(k t)."""
    t = _check_time(t)
    carrier = np.exp(1j * model.omega * t)
    return AmplitudePair(carrier * np.cos(model.kappa * t), carrier * np.sin(model.kappa * t))


def markov_amplitudes(model: MarkovModel, t: float) -> AmplitudePair:
    """alpha = e^{i w t - G t/2}; beta is real-positive relative to the same carrier."""
    t = _check_time(t)
    carrier = np.exp(1j * model.omega * t)
    survival = np.exp(-model.gamma * t)
    # -expm1 keeps |beta|^2 accurate when gamma*t is tiny
    return AmplitudePair(carrier * np.exp(-0.5 * model.gamma * t), carrier * np.sqrt(-np.expm1(-model.gamma * t)))


def one_excitation_hamiltonian(model: RabiModel) -> np.ndarray:
    """H restricted to span{|1_S,0_E>, |0_S,1_E>} for H_ES = i k (a_E^+ a_S - a_E a_S^+)."""
    w, k = model.omega, model.kappa
    return np.array([[w, -1j * k], [1j * k, w]])


@dataclass
class EigencheckResult:
    passed: bool
    eigenvalues: np.ndarray
    eigen_residuals: dict
    propagation_errors: dict

    def __bool__(self):
        return self.passed


def rabi_eigencheck(model: RabiModel, tol: float = 1e-10, kappa_times=(0.1, 0.7, 2.0)) -> EigencheckResult:
    """Check the quoted eigenpairs and the swap amplitudes against exact propagation.

    The propagated state exp(-iHt)|1,0> carries the carrier e^{-i w t}, the
    closed-form amplitudes carry e^{+i w t}; the two differ by a global
    phase, which is divided out before comparing amplitudes.
    """
    H = one_excitation_hamiltonian(model)
    evals = np.linalg.eigvalsh(H)
    residuals = {}
    for sign in (+1, -1):
        v = np.array([1.0, sign * 1j]) / np.sqrt(2)
        energy = model.omega + sign * model.kappa
        residuals[energy] = float(np.max(np.abs(H @ v - energy * v)))
    errors = {}
    for kt in kappa_times:
        t = kt / model.kappa
        propagated = expm(-1j * H * t) @ np.array([1.0, 0.0])
        amps = rabi_amplitudes(model, t)
        expected = np.array([amps.alpha, amps.beta])
        overlap = np.vdot(propagated, expected)
        phase = overlap / abs(overlap)
        errors[kt] = float(np.max(np.abs(expected - phase * propagated)))
    expected_evals = np.array([model.omega - model.kappa, model.omega + model.kappa])
    passed = (
        np.max(np.abs(evals - expected_evals)) <= tol
        and max(residuals.values()) <= tol
        and max(errors.values()) <= tol
    )
    return EigencheckResult(bool(passed), evals, residuals, errors)
