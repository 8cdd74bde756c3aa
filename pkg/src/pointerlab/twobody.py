"""Two particles on a line, one coordinate each, interacting through V(x_A - x_B).

The joint wavefunction lives on a periodic (x_A, x_B) grid and is propagated
with Strang-split spectral steps (hbar = 1). Bipartite entanglement is read
from the singular values of the grid wavefunction.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .fock import entropy_bits

EDGE_CELLS = 5
EDGE_DENSITY_TOL = 1e-8


class EdgeProximityError(RuntimeError):
    """A packet came too close to the periodic box edge."""


# --- potentials -------------------------------------------------------------


def gaussian_bump(r, v0, width):
    return v0 * np.exp(-(r**2) / (2.0 * width**2))


def soft_coulomb(r, v0, soft):
    return v0 / np.sqrt(r**2 + soft**2)


def no_potential(r):
    return np.zeros_like(r)


POTENTIALS = {
    "none": (no_potential, ()),
    "gaussian": (gaussian_bump, ("v0", "width")),
    "softcoulomb": (soft_coulomb, ("v0", "soft")),
}


@dataclass(frozen=True)
class Potential:
    name: str = "none"
    params: tuple = ()

    def __post_init__(self):
        if self.name not in POTENTIALS:
            raise ValueError(f"unknown potential {self.name!r}; choose from {sorted(POTENTIALS)}")
        expected = POTENTIALS[self.name][1]
        if len(self.params) != len(expected):
            raise ValueError(f"potential {self.name!r} takes parameters {expected}")

    def __call__(self, r):
        fn = POTENTIALS[self.name][0]
        return fn(np.asarray(r, dtype=float), *self.params)

    def mirrored(self) -> "Potential":
        # every shipped form is even in r
        return self


@dataclass(frozen=True)
class Packet:
    center: float
    width: float
    momentum: float = 0.0


@dataclass(frozen=True)
class Grid:
    n: int
    length: float

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def refined(self) -> "Grid":
        return Grid(2 * self.n, self.length)


@dataclass(frozen=True)
class ScatteringScenario:
    mass_a: float
    mass_b: float
    grid_a: Grid
    grid_b: Grid
    packet_a: Packet
    packet_b: Packet
    potential: Potential = field(default_factory=Potential)
    dt: float = 0.01
    t_max: float = 1.0
    sample_stride: int = 10
    name: str = ""

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def refined(self) -> "ScatteringScenario":
        """Half the grid spacing and half the time step."""
        return replace(
            self,
            grid_a=self.grid_a.refined(),
            grid_b=self.grid_b.refined(),
            dt=self.dt / 2,
            sample_stride=2 * self.sample_stride,
        )

    def swapped(self) -> "ScatteringScenario":
        """Relabel A <-> B; V(x) -> V(-x) keeps the same physics."""
        return replace(
            self,
            mass_a=self.mass_b,
            mass_b=self.mass_a,
            grid_a=self.grid_b,
            grid_b=self.grid_a,
            packet_a=self.packet_b,
            packet_b=self.packet_a,
            potential=self.potential.mirrored(),
        )


@dataclass(frozen=True)
class GridWavefunction2D:
    psi: np.ndarray
    grid_a: Grid
    grid_b: Grid
    mass_a: float
    mass_b: float

    @property
    def n_a(self) -> int:
        return self.grid_a.n

    @property
    def n_b(self) -> int:
        return self.grid_b.n

    @property
    def dx_a(self) -> float:
        return self.grid_a.dx

    @property
    def dx_b(self) -> float:
        return self.grid_b.dx

    @property
    def cell(self) -> float:
        return self.dx_a * self.dx_b

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.cell)

    def marginal_a(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=1) * self.dx_b

    def marginal_b(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=0) * self.dx_a

    def mean_positions(self) -> tuple[float, float]:
        pa = self.marginal_a()
        pb = self.marginal_b()
        return (
            float(self.grid_a.x @ pa * self.dx_a / (pa.sum() * self.dx_a)),
            float(self.grid_b.x @ pb * self.dx_b / (pb.sum() * self.dx_b)),
        )

    def transposed(self) -> "GridWavefunction2D":
        return GridWavefunction2D(self.psi.T, self.grid_b, self.grid_a, self.mass_b, self.mass_a)


# --- construction -----------------------------------------------------------


def gaussian_packet(grid: Grid, packet: Packet) -> np.ndarray:
    x = grid.x
    g = np.exp(-((x - packet.center) ** 2) / (4.0 * packet.width**2) + 1j * packet.momentum * x)
    return g / np.sqrt(np.sum(np.abs(g) ** 2) * grid.dx)


def initial_state(scenario: ScatteringScenario) -> GridWavefunction2D:
    """Product of the two Gaussian packets (``width`` is the position standard deviation)."""
    a = gaussian_packet(scenario.grid_a, scenario.packet_a)
    b = gaussian_packet(scenario.grid_b, scenario.packet_b)
    return GridWavefunction2D(np.outer(a, b), scenario.grid_a, scenario.grid_b, scenario.mass_a, scenario.mass_b)


def potential_matrix(scenario: ScatteringScenario) -> np.ndarray:
    xa = scenario.grid_a.x[:, None]
    xb = scenario.grid_b.x[None, :]
    return scenario.potential(xa - xb)


def kinetic_matrix(scenario: ScatteringScenario) -> np.ndarray:
    ka = scenario.grid_a.k[:, None]
    kb = scenario.grid_b.k[None, :]
    return ka**2 / (2.0 * scenario.mass_a) + kb**2 / (2.0 * scenario.mass_b)


# --- analysis ---------------------------------------------------------------


def entanglement_entropy(state: GridWavefunction2D) -> float:
    """Entropy (bits) of the squared singular values of sqrt(dxA dxB) * psi."""
    s = np.linalg.svd(state.psi * np.sqrt(state.cell), compute_uv=False)
    return entropy_bits(s**2)


def entropy_from_reduced(state: GridWavefunction2D) -> float:
    """Same quantity through the reduced density matrix of A."""
    m = state.psi * np.sqrt(state.cell)
    if m.shape[0] > m.shape[1]:
        m = m.T
    rho = m @ m.conj().T
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return entropy_bits(np.clip(w, 0.0, None))


def energy(state: GridWavefunction2D, scenario: ScatteringScenario) -> float:
    psi = state.psi
    phi = np.fft.fft2(psi)
    kin = np.sum(kinetic_matrix(scenario) * np.abs(phi) ** 2) / np.sum(np.abs(phi) ** 2)
    pot = np.sum(potential_matrix(scenario) * np.abs(psi) ** 2) / np.sum(np.abs(psi) ** 2)
    return float(kin + pot)


def check_edges(state: GridWavefunction2D) -> None:
    for label, marg in (("A", state.marginal_a()), ("B", state.marginal_b())):
        edge = np.concatenate([marg[:EDGE_CELLS], marg[-EDGE_CELLS:]])
        if edge.max() > EDGE_DENSITY_TOL:
            raise EdgeProximityError(
                f"particle {label} marginal density {edge.max():.2e} within {EDGE_CELLS} cells of the box edge"
            )


# --- propagation ------------------------------------------------------------


@dataclass
class Sample:
    t: float
    entropy_bits: float
    norm: float
    energy: float
    x_a_mean: float
    x_b_mean: float

    def as_row(self) -> dict:
        return dict(self.__dict__)


class SplitStepPropagator:
    """Strang splitting exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) on the joint grid."""

    def __init__(self, scenario: ScatteringScenario, monitor_edges: bool = True):
        self.scenario = scenario
        self.monitor_edges = monitor_edges
        dt = scenario.dt
        self._half_v = np.exp(-0.5j * dt * potential_matrix(scenario))
        self._kin = np.exp(-1j * dt * kinetic_matrix(scenario))

    def step(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        if n_steps <= 0:
            return psi
        half_v, kin = self._half_v, self._kin
        full_v = half_v * half_v
        psi = psi * half_v
        for i in range(n_steps):
            psi = np.fft.ifft2(kin * np.fft.fft2(psi))
            psi = psi * (half_v if i == n_steps - 1 else full_v)
        return psi

    def evolve(self, state: GridWavefunction2D, n_steps: int) -> GridWavefunction2D:
        psi = self.step(state.psi, n_steps)
        out = GridWavefunction2D(psi, state.grid_a, state.grid_b, state.mass_a, state.mass_b)
        if self.monitor_edges:
            check_edges(out)
        return out


def split_step_evolve(state: GridWavefunction2D, scenario: ScatteringScenario, n_steps: int) -> GridWavefunction2D:
    """Advance ``state`` by ``n_steps`` steps of ``scenario.dt``; aborts near the box edge."""
    prop = SplitStepPropagator(scenario)
    stride = max(1, scenario.sample_stride)
    done = 0
    while done < n_steps:
        k = min(stride, n_steps - done)
        state = prop.evolve(state, k)
        done += k
    return state


def sample(state: GridWavefunction2D, scenario: ScatteringScenario, t: float) -> Sample:
    xa, xb = state.mean_positions()
    return Sample(t, entanglement_entropy(state), state.norm(), energy(state, scenario), xa, xb)


def run_scenario(scenario: ScatteringScenario, keep_states: bool = False):
    """Entropy timeline sampled every ``sample_stride`` steps, plus the final state.

    Returns ``(samples, final_state)`` or ``(samples, states)`` with
    ``keep_states``.
    """
    prop = SplitStepPropagator(scenario)
    state = initial_state(scenario)
    check_edges(state)
    samples = [sample(state, scenario, 0.0)]
    states = [state]
    stride = max(1, scenario.sample_stride)
    done = 0
    while done < scenario.n_steps:
        k = min(stride, scenario.n_steps - done)
        state = prop.evolve(state, k)
        done += k
        samples.append(sample(state, scenario, done * scenario.dt))
        if keep_states:
            states.append(state)
    return samples, (states if keep_states else state)


def test_particle_run(scenario: ScatteringScenario) -> list[Sample]:
    """Entropy timeline for a light particle A scattering off a heavy, resting B."""
    if scenario.mass_b / scenario.mass_a < 100:
        raise ValueError("test-particle regime needs mass_b / mass_a >= 100")
    if scenario.packet_b.momentum != 0.0:
        raise ValueError("particle B must start at rest")
    # "well localised": B no wider than one cell of the grid A moves on
    if scenario.packet_b.width > scenario.grid_a.dx:
        raise ValueError("particle B packet must be no wider than one grid cell of A")
    samples, _ = run_scenario(scenario)
    return samples


test_particle_run.__test__ = False  # keep pytest from collecting it


# --- mean-field (Hartree) comparison ---------------------------------------


@dataclass
class MeanFieldReport:
    times: np.ndarray
    fidelity: np.ndarray
    entropy_bits: np.ndarray

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelity.min())


def mean_field_comparison(scenario: ScatteringScenario) -> MeanFieldReport:
    """Compare the full solution with a product of self-consistent one-body solutions.

    Each one-body wavefunction moves in V averaged over the partner's current
    density; fidelity is |<psi_A psi_B|Psi>|^2 at every sample.
    """
    ga, gb = scenario.grid_a, scenario.grid_b
    dt = scenario.dt
    vmat = potential_matrix(scenario)
    kin_a = np.exp(-1j * dt * ga.k**2 / (2.0 * scenario.mass_a))
    kin_b = np.exp(-1j * dt * gb.k**2 / (2.0 * scenario.mass_b))
    a = gaussian_packet(ga, scenario.packet_a)
    b = gaussian_packet(gb, scenario.packet_b)

    def fields(a, b):
        va = vmat @ (np.abs(b) ** 2) * gb.dx
        vb = (np.abs(a) ** 2) @ vmat * ga.dx
        return va, vb

    prop = SplitStepPropagator(scenario)
    full = initial_state(scenario)
    times, fid, ent = [0.0], [1.0], [entanglement_entropy(full)]
    stride = max(1, scenario.sample_stride)
    done = 0
    while done < scenario.n_steps:
        k = min(stride, scenario.n_steps - done)
        for _ in range(k):
            va, vb = fields(a, b)
            a = a * np.exp(-0.5j * dt * va)
            b = b * np.exp(-0.5j * dt * vb)
            a = np.fft.ifft(kin_a * np.fft.fft(a))
            b = np.fft.ifft(kin_b * np.fft.fft(b))
            va, vb = fields(a, b)
            a = a * np.exp(-0.5j * dt * va)
            b = b * np.exp(-0.5j * dt * vb)
        full = prop.evolve(full, k)
        done += k
        overlap = np.vdot(np.outer(a, b), full.psi) * full.cell
        times.append(done * dt)
        fid.append(abs(overlap) ** 2)
        ent.append(entanglement_entropy(full))
    return MeanFieldReport(np.array(times), np.array(fid), np.array(ent))


# --- scenario files ---------------------------------------------------------

SCENARIO_KEYS = ("masses", "grid_a", "grid_b", "packet_a", "packet_b", "potential", "dt", "t_max", "sample_stride")


def parse_scenario(text: str, name: str = "") -> ScatteringScenario:
    """Parse the flat ``key = value`` scenario format (``#`` starts a comment).

    Keys::

        masses        = m_a m_b
        grid_a        = n_points box_length
        grid_b        = n_points box_length
        packet_a      = center width momentum
        packet_b      = center width momentum
        potential     = none | gaussian v0 width | softcoulomb v0 soft
        dt            = time step
        t_max         = duration
        sample_stride = steps between samples
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCENARIO_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = shlex.split(val)
    missing = [k for k in SCENARIO_KEYS if k not in values]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")

    def floats(key, count):
        items = values[key]
        if len(items) != count:
            raise ValueError(f"{key} takes {count} values")
        return [float(v) for v in items]

    m_a, m_b = floats("masses", 2)
    na, la = floats("grid_a", 2)
    nb, lb = floats("grid_b", 2)
    pot_name, *pot_params = values["potential"]
    return ScatteringScenario(
        mass_a=m_a,
        mass_b=m_b,
        grid_a=Grid(int(na), la),
        grid_b=Grid(int(nb), lb),
        packet_a=Packet(*floats("packet_a", 3)),
        packet_b=Packet(*floats("packet_b", 3)),
        potential=Potential(pot_name, tuple(float(p) for p in pot_params)),
        dt=floats("dt", 1)[0],
        t_max=floats("t_max", 1)[0],
        sample_stride=int(floats("sample_stride", 1)[0]),
        name=name,
    )


def format_scenario(s: ScatteringScenario) -> str:
    pot = " ".join([s.potential.name, *(repr(float(p)) for p in s.potential.params)])
    lines = [
        f"masses = {s.mass_a!r} {s.mass_b!r}",
        f"grid_a = {s.grid_a.n} {s.grid_a.length!r}",
        f"grid_b = {s.grid_b.n} {s.grid_b.length!r}",
        f"packet_a = {s.packet_a.center!r} {s.packet_a.width!r} {s.packet_a.momentum!r}",
        f"packet_b = {s.packet_b.center!r} {s.packet_b.width!r} {s.packet_b.momentum!r}",
        f"potential = {pot}",
        f"dt = {s.dt!r}",
        f"t_max = {s.t_max!r}",
        f"sample_stride = {s.sample_stride}",
    ]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> ScatteringScenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def shipped_scenario(name: str) -> ScatteringScenario:
    return load_scenario(SCENARIO_DIR / f"{name}.cfg")

