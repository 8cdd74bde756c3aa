"""Damped cavity mode: analytic solution, master-equation integration, quantum jumps.

The master equation is the zero-temperature Lindblad form

    d rho/dt = -i [H, rho] + G/2 (2 a rho a^+ - a^+ a rho - rho a^+ a),  H = w a^+ a

and the three routes here are meant to be checked against each other.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    DensityMatrix,
    FockVector,
    _hermitize,
    annihilation_operator,
    auto_truncation,
    coherent_amplitudes,
    coherent_state,
    number_operator,
)

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
# trajectories per reduction block; fixed so results do not depend on worker count
BLOCK_SIZE = 1024
STEP_TRACE_TOL = 1e-10
# explicit upper bound on rate * n_trunc * dt; RK4 loses stability near 2.8
MAX_STEP_PRODUCT = 1.0


class StepSizeError(RuntimeError):
    """Raised when the time step breaks trace preservation or jump probabilities."""


@dataclass(frozen=True)
class MasterSolution:
    times: np.ndarray
    states: tuple
    info: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class TrajectoryConfig:
    gamma: float
    dt: float
    t_max: float
    n_traj: int = 10_000
    master_seed: int = 0
    omega: float = 0.0

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if self.dt <= 0 or self.gamma < 0:
            raise ValueError("dt must be positive and gamma non-negative")

    def check(self, n_trunc: int) -> None:
        if self.dt * self.gamma * n_trunc >= 0.1:
            raise StepSizeError(
                f"dt*gamma*n_trunc = {self.dt * self.gamma * n_trunc:.3g} >= 0.1; reduce dt"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


def trajectory_seed(master_seed: int, index: int) -> int:
    """Per-trajectory Philox key: the master seed XOR-folded with the trajectory index.

    The index is spread by the 64-bit golden-ratio multiplier first, so that
    nearby master seeds do not yield permutations of the same key set.
    """
    return (int(master_seed) ^ (int(index) * GOLDEN64)) & MASK64


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, a: np.ndarray, gamma: float) -> np.ndarray:
    ad = a.conj().T
    n_op = ad @ a
    out = -1j * (H @ rho - rho @ H)
    if gamma:
        out += 0.5 * gamma * (2.0 * a @ rho @ ad - n_op @ rho - rho @ n_op)
    return out


def _rk4_step(rho, dt, H, a, gamma):
    k1 = lindblad_rhs(rho, H, a, gamma)
    k2 = lindblad_rhs(rho + 0.5 * dt * k1, H, a, gamma)
    k3 = lindblad_rhs(rho + 0.5 * dt * k2, H, a, gamma)
    k4 = lindblad_rhs(rho + dt * k3, H, a, gamma)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def default_master_dt(n_trunc: int, gamma: float, omega: float) -> float:
    """Step with max(G, |w|) * n_trunc * dt <= 0.01."""
    rate = max(abs(gamma), abs(omega)) * max(n_trunc, 1)
    return 0.01 / rate if rate > 0 else np.inf


def integrate_master(
    rho0: DensityMatrix,
    H_omega: float,
    gamma: float,
    times,
    dt: float | None = None,
) -> MasterSolution:
    """Fixed-step RK4 integration, sampled at ``times`` (first entry is the initial time)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-decreasing 1-d grid")
    n_trunc = rho0.dimension - 1
    a = annihilation_operator(n_trunc)
    H = H_omega * number_operator(n_trunc)
    if dt is None:
        dt = default_master_dt(n_trunc, gamma, H_omega)
    product = max(abs(gamma), abs(H_omega)) * max(n_trunc, 1) * dt
    if product > MAX_STEP_PRODUCT:
        raise StepSizeError(f"rate * n_trunc * dt = {product:.3g} exceeds {MAX_STEP_PRODUCT}; reduce dt")
    rho = np.array(rho0.entries)
    states = [rho0]
    n_steps_total = 0
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        n_sub = max(1, math.ceil(span / dt - 1e-9)) if span > 0 else 0
        h = span / n_sub if n_sub else 0.0
        for _ in range(n_sub):
            tr_before = np.trace(rho).real
            rho = _rk4_step(rho, h, H, a, gamma)
            drift = abs(np.trace(rho).real - tr_before)
            if drift > STEP_TRACE_TOL:
                raise StepSizeError(f"trace drift {drift:.3e} in one step; reduce dt")
        n_steps_total += n_sub
        states.append(DensityMatrix(_hermitize(rho)))
    return MasterSolution(times, tuple(states), {"dt": dt, "steps": n_steps_total})


def damped_amplitude(lam: complex, gamma: float, omega: float, t: float) -> complex:
    """Coherent amplitude lam * exp(-i w t - G t / 2) carried by the master equation."""
    return complex(lam) * np.exp((-1j * omega - 0.5 * gamma) * t)


def damped_coherent_analytic(
    lam: complex, gamma: float, omega: float, t: float, n_trunc: int | None = None
) -> FockVector:
    if n_trunc is None:
        n_trunc = auto_truncation(lam)
    # damping only shrinks |lam|, so the initial truncation stays adequate
    return coherent_state(damped_amplitude(lam, gamma, omega, t), n_trunc, allow_truncation=True)


def analytic_residual(lam: complex, gamma: float, omega: float, t: float, n_trunc: int | None = None) -> float:
    """Max-entry residual of d/dt |mu(t)><mu(t)| minus the master-equation right side.

    The projector is built on one extra level so that a rho a^+ sees the
    amplitude just above the truncation; the residual is read off the
    retained block.
    """
    if n_trunc is None:
        n_trunc = auto_truncation(lam)
    mu = damped_amplitude(lam, gamma, omega, t)
    big = n_trunc + 1
    n = np.arange(big + 1)
    c = coherent_amplitudes(mu, big)
    dc = (0.5 * gamma * abs(mu) ** 2 + n * (-1j * omega - 0.5 * gamma)) * c
    rho = np.outer(c, c.conj())
    drho = np.outer(dc, c.conj()) + np.outer(c, dc.conj())
    rhs = lindblad_rhs(rho, omega * number_operator(big), annihilation_operator(big), gamma)
    keep = slice(0, n_trunc + 1)
    return float(np.max(np.abs((drho - rhs)[keep, keep])))


def mean_occupation(solution: MasterSolution) -> np.ndarray:
    return np.array([rho.mean_occupation() for rho in solution.states])


def mean_annihilation(solution: MasterSolution) -> np.ndarray:
    """<a>(t) along a solution."""
    out = []
    for rho in solution.states:
        a = annihilation_operator(rho.dimension - 1)
        out.append(rho.expectation(a))
    return np.array(out)


# --- quantum jumps ----------------------------------------------------------


def trajectory_step(psi: np.ndarray, u: np.ndarray, drift: np.ndarray, gamma: float, dt: float) -> np.ndarray:
    """Advance a batch of normalized trajectories (rows of ``psi``) by one step.

    A trajectory jumps when ``u < gamma <n> dt`` and is replaced by the
    normalized a|psi>; otherwise it takes the no-jump step
    exp(-i H dt - G/2 a^+a dt)|psi> (``drift`` holds that diagonal) and is
    renormalized.
    """
    n = np.arange(psi.shape[1])
    prob = np.abs(psi) ** 2
    nbar = prob @ n
    jump = u < gamma * nbar * dt
    out = psi * drift
    if np.any(jump):
        lowered = np.zeros_like(out[jump])
        lowered[:, :-1] = out[jump][:, 1:] * np.sqrt(n[1:])
        out[jump] = lowered
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _run_block(args):
    psi0, cfg, start, stop, record_steps = args
    d = psi0.size
    n_steps = cfg.n_steps
    u = np.empty((stop - start, n_steps))
    for row, idx in enumerate(range(start, stop)):
        gen = np.random.Generator(np.random.Philox(key=trajectory_seed(cfg.master_seed, idx)))
        u[row] = gen.random(n_steps)
    drift = np.exp((-1j * cfg.omega - 0.5 * cfg.gamma) * np.arange(d) * cfg.dt)
    psi = np.tile(psi0, (stop - start, 1))
    sums = np.zeros((len(record_steps), d, d), dtype=complex)
    slot = {s: k for k, s in enumerate(record_steps)}
    if 0 in slot:
        sums[slot[0]] = psi.T @ psi.conj()
    for step in range(1, n_steps + 1):
        psi = trajectory_step(psi, u[:, step - 1], drift, cfg.gamma, cfg.dt)
        k = slot.get(step)
        if k is not None:
            sums[k] = psi.T @ psi.conj()
    return sums


def run_trajectories(psi0: FockVector, config: TrajectoryConfig, times, workers: int = 1) -> MasterSolution:
    """Ensemble-averaged quantum-jump unravelling sampled at ``times``.

    Trajectory ``i`` draws its uniforms from Philox keyed by
    ``master_seed ^ i``. Trajectories are reduced in fixed blocks of
    ``BLOCK_SIZE`` and the block sums are added in index order, so the
    result is bit-identical for any ``workers``.
    """
    if not psi0.is_normalized():
        raise ValueError("initial state must be normalized")
    config.check(psi0.n_trunc)
    times = np.asarray(times, dtype=float)
    steps = np.rint(times / config.dt).astype(int)
    if np.any(np.abs(steps * config.dt - times) > 1e-9 * max(1.0, times.max())):
        raise ValueError("sample times must lie on the dt grid")
    if steps.max() > config.n_steps:
        raise ValueError("sample times exceed t_max")
    record = sorted(set(int(s) for s in steps))
    cfg = TrajectoryConfig(config.gamma, config.dt, record[-1] * config.dt, config.n_traj, config.master_seed, config.omega)
    psi = np.asarray(psi0.amplitudes, dtype=complex)
    blocks = [
        (psi, cfg, start, min(start + BLOCK_SIZE, cfg.n_traj), record)
        for start in range(0, cfg.n_traj, BLOCK_SIZE)
    ]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, blocks))
    else:
        results = [_run_block(b) for b in blocks]
    total = np.zeros_like(results[0])
    for r in results:
        total += r
    by_step = {s: total[k] for k, s in enumerate(record)}
    states = []
    for s in steps:
        rho = _hermitize(by_step[int(s)] / cfg.n_traj)
        states.append(DensityMatrix(rho / np.trace(rho).real))
    return MasterSolution(times, tuple(states), {"n_traj": cfg.n_traj, "dt": cfg.dt, "seed": cfg.master_seed})
