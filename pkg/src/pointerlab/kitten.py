"""Decoherence of an even Schroedinger kitten exchanging quanta with its environment.

Two routes to the reduced system state are kept side by side: the four-term
closed form (two coherent projectors plus two interference terms damped by
exp(-2|lam beta|^2)) and brute force, i.e. exchange evolution of the kitten
followed by a numerical partial trace.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Union

import numpy as np

from .amplitudes import MarkovModel, RabiModel
from .exchange import AmplitudePair, evolve_system
from .fock import (
    DEFAULT_TAIL_TOL,
    DensityMatrix,
    coherent_amplitudes,
    auto_truncation,
    coherent_state,
    kitten_state,
    partial_trace,
    purity,
    von_neumann_entropy,
)

# |<lam beta|-lam beta>| at |lam beta|^2 = 5
RECORD_THRESHOLD = float(np.exp(-10.0))


@dataclass(frozen=True)
class KittenReport:
    t: float
    coherence_closed_form: float
    coherence_numeric: float
    purity: float
    entropy_bits: float
    record_overlap: float

    def as_row(self) -> dict:
        return asdict(self)


def _normalization(lam: complex) -> float:
    """Squared prefactor 1/(2(1+e^{-2|lam|^2})) of the kitten."""
    return 1.0 / (2.0 * (1.0 + np.exp(-2.0 * abs(lam) ** 2)))


def damping_factor(lam: complex, amps: AmplitudePair) -> float:
    return float(np.exp(-2.0 * abs(lam * amps.beta) ** 2))


def _resolve_trunc(lam: complex, n_trunc: int | None) -> int:
    return auto_truncation(lam, DEFAULT_TAIL_TOL) if n_trunc is None else n_trunc


def kitten_reduced_closed_form(lam: complex, amps: AmplitudePair, n_trunc: int | None = None) -> DensityMatrix:
    """Reduced kitten state assembled term by term, then trace-normalized."""
    lam = complex(lam)
    n_trunc = _resolve_trunc(lam, n_trunc)
    plus = coherent_amplitudes(lam * amps.alpha, n_trunc)
    minus = coherent_amplitudes(-lam * amps.alpha, n_trunc)
    weight = _normalization(lam)
    cross = damping_factor(lam, amps)
    rho = weight * (
        np.outer(plus, plus.conj())
        + np.outer(minus, minus.conj())
        + cross * np.outer(plus, minus.conj())
        + cross * np.outer(minus, plus.conj())
    )
    tr = np.trace(rho).real
    # the four terms sum to one up to the truncated tail
    if abs(tr - 1.0) > np.exp(-2.0 * abs(lam) ** 2) + 10 * DEFAULT_TAIL_TOL:
        raise ValueError(f"closed-form trace {tr!r} deviates beyond the kitten-overlap bound")
    return DensityMatrix(rho / tr)


def kitten_reduced_numeric(lam: complex, amps: AmplitudePair, n_trunc: int | None = None) -> DensityMatrix:
    """Exchange-evolve the kitten and trace out the environment."""
    lam = complex(lam)
    n_trunc = _resolve_trunc(lam, n_trunc)
    joint = evolve_system(kitten_state(lam, n_trunc), amps)
    return partial_trace(joint, keep="system")


def environment_reduced_numeric(lam: complex, amps: AmplitudePair, n_trunc: int | None = None) -> DensityMatrix:
    lam = complex(lam)
    n_trunc = _resolve_trunc(lam, n_trunc)
    return partial_trace(evolve_system(kitten_state(lam, n_trunc), amps), keep="environment")


def coherence_metric(rho: DensityMatrix, lam: complex, amps: AmplitudePair) -> float:
    """Recover the interference damping factor from a reduced kitten state.

    The direct terms carry the fixed weight of the initial kitten, so they
    are subtracted and the remainder is projected (Hilbert-Schmidt) onto
    |lam alpha><-lam alpha| + h.c. This stays well posed when alpha -> 0,
    where all four terms collapse onto the vacuum.
    """
    lam = complex(lam)
    n_trunc = rho.dimension - 1
    plus = coherent_amplitudes(lam * amps.alpha, n_trunc)
    minus = coherent_amplitudes(-lam * amps.alpha, n_trunc)
    weight = _normalization(lam)
    direct = weight * (np.outer(plus, plus.conj()) + np.outer(minus, minus.conj()))
    interference = weight * (np.outer(plus, minus.conj()) + np.outer(minus, plus.conj()))
    residual = rho.entries - direct
    num = np.vdot(interference, residual).real
    den = np.vdot(interference, interference).real
    return float(num / den)


def record_state_overlap(lam: complex, amps: AmplitudePair) -> float:
    """|<lam beta|-lam beta>| between the two environment record states."""
    mu = complex(lam) * amps.beta
    n_trunc = auto_truncation(mu)
    return abs(coherent_state(mu, n_trunc).inner(coherent_state(-mu, n_trunc)))


def is_recorded(overlap: float) -> bool:
    return overlap <= RECORD_THRESHOLD


def kitten_report(t: float, lam: complex, amps: AmplitudePair, n_trunc: int | None = None) -> KittenReport:
    rho = kitten_reduced_numeric(lam, amps, n_trunc)
    return KittenReport(
        t=float(t),
        coherence_closed_form=damping_factor(lam, amps),
        coherence_numeric=coherence_metric(rho, lam, amps),
        purity=purity(rho),
        entropy_bits=von_neumann_entropy(rho),
        record_overlap=record_state_overlap(lam, amps),
    )


def kitten_timeline(
    lam: complex,
    model: Union[RabiModel, MarkovModel],
    times: Iterable[float],
    n_trunc: int | None = None,
) -> list[KittenReport]:
    lam = complex(lam)
    n_trunc = _resolve_trunc(lam, n_trunc)
    return [kitten_report(t, lam, model.amplitudes(t), n_trunc) for t in times]
