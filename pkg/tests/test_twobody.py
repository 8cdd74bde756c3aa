import numpy as np
import pytest

from pointerlab.twobody import (
    EdgeProximityError,
    Grid,
    GridWavefunction2D,
    Packet,
    Potential,
    ScatteringScenario,
    SCENARIO_DIR,
    entanglement_entropy,
    entropy_from_reduced,
    format_scenario,
    gaussian_packet,
    initial_state,
    mean_field_comparison,
    parse_scenario,
    run_scenario,
    shipped_scenario,
    test_particle_run as particle_run,
)


def small(potential=Potential(), **kw):
    base = dict(
        mass_a=1.0, mass_b=1.0, grid_a=Grid(64, 32.0), grid_b=Grid(64, 32.0),
        packet_a=Packet(-4.0, 1.0, 1.5), packet_b=Packet(4.0, 1.0, -1.5),
        potential=potential, dt=0.01, t_max=2.0, sample_stride=50,
    )
    base.update(kw)
    return ScatteringScenario(**base)


def test_gaussian_packet_normalization_and_width():
    grid = Grid(256, 40.0)
    psi = gaussian_packet(grid, Packet(1.0, 1.3, 2.0))
    p = np.abs(psi) ** 2 * grid.dx
    assert p.sum() == pytest.approx(1.0)
    mean = grid.x @ p
    assert mean == pytest.approx(1.0, abs=1e-10)
    assert np.sqrt(((grid.x - mean) ** 2) @ p) == pytest.approx(1.3, rel=1e-8)


def test_product_state_has_zero_entropy():
    assert entanglement_entropy(initial_state(small())) < 1e-10


def test_svd_and_reduced_density_entropies_agree():
    rng = np.random.default_rng(4)
    ga, gb = Grid(12, 6.0), Grid(9, 3.0)
    psi = rng.normal(size=(12, 9)) + 1j * rng.normal(size=(12, 9))
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * ga.dx * gb.dx)
    state = GridWavefunction2D(psi, ga, gb, 1.0, 1.0)
    assert entanglement_entropy(state) == pytest.approx(entropy_from_reduced(state), abs=1e-10)
    assert entanglement_entropy(state) == pytest.approx(entanglement_entropy(state.transposed()), abs=1e-12)


def test_maximally_entangled_grid_state():
    g = Grid(4, 4.0)
    psi = np.eye(4) / np.sqrt(4 * g.dx * g.dx)
    assert entanglement_entropy(GridWavefunction2D(psi, g, g, 1.0, 1.0)) == pytest.approx(2.0)


def test_free_motion_keeps_product_and_moves_centres():
    sc = small()
    samples, _ = run_scenario(sc)
    assert max(s.entropy_bits for s in samples) < 1e-8
    last = samples[-1]
    assert last.x_a_mean == pytest.approx(-4.0 + 1.5 * sc.t_max, abs=1e-6)
    assert last.x_b_mean == pytest.approx(4.0 - 1.5 * sc.t_max, abs=1e-6)


def test_interacting_run_conserves_norm_and_energy():
    sc = small(Potential("gaussian", (1.0, 1.0)), grid_a=Grid(96, 40.0), grid_b=Grid(96, 40.0), t_max=4.0, dt=0.005, sample_stride=100)
    samples, _ = run_scenario(sc)
    e0, n0 = samples[0].energy, samples[0].norm
    for s in samples:
        assert abs(s.energy - e0) / abs(e0) < 1e-6
        assert s.norm == pytest.approx(n0, abs=1e-10)
    assert samples[-1].entropy_bits > 1e-3


def test_relabelling_particles_leaves_entropy_unchanged():
    sc = small(Potential("gaussian", (1.0, 1.0)), mass_b=2.0, t_max=3.0)
    fwd, _ = run_scenario(sc)
    rev, _ = run_scenario(sc.swapped())
    for a, b in zip(fwd, rev):
        assert a.entropy_bits == pytest.approx(b.entropy_bits, abs=1e-10)
        assert a.x_a_mean == pytest.approx(b.x_b_mean, abs=1e-10)


def test_mean_field_is_exact_without_interaction():
    report = mean_field_comparison(small())
    assert np.all(np.abs(report.fidelity - 1.0) < 1e-8)


def test_packet_reaching_the_edge_aborts():
    sc = small(packet_a=Packet(10.0, 1.0, 6.0), t_max=3.0)
    with pytest.raises(EdgeProximityError):
        run_scenario(sc)


def test_refinement_halves_steps():
    sc = small()
    fine = sc.refined()
    assert fine.grid_a.dx == pytest.approx(sc.grid_a.dx / 2)
    assert fine.dt == pytest.approx(sc.dt / 2)
    assert fine.n_steps == 2 * sc.n_steps
    assert fine.sample_stride * fine.dt == pytest.approx(sc.sample_stride * sc.dt)


def test_test_particle_preconditions():
    heavy = dict(mass_b=200.0, grid_b=Grid(32, 4.0), packet_b=Packet(0.0, 0.2, 0.0))
    with pytest.raises(ValueError):
        particle_run(small(**{**heavy, "mass_b": 50.0}))
    with pytest.raises(ValueError):
        particle_run(small(**{**heavy, "packet_b": Packet(0.0, 0.2, 0.5)}))
    with pytest.raises(ValueError):
        particle_run(small(**{**heavy, "packet_b": Packet(0.0, 0.9, 0.0)}))
    samples = particle_run(small(**heavy, t_max=0.5))
    assert samples[0].entropy_bits < 1e-10


def test_potentials():
    r = np.array([0.0, 1.0])
    assert np.allclose(Potential("gaussian", (2.0, 1.0))(r), [2.0, 2.0 * np.exp(-0.5)])
    assert np.allclose(Potential("softcoulomb", (1.0, 1.0))(r), [1.0, 1 / np.sqrt(2)])
    assert np.all(Potential()(r) == 0)
    with pytest.raises(ValueError):
        Potential("square", (1.0,))
    with pytest.raises(ValueError):
        Potential("gaussian", (1.0,))


def test_scenario_text_round_trip():
    sc = small(Potential("softcoulomb", (0.5, 0.3)))
    again = parse_scenario(format_scenario(sc))
    assert again == sc


def test_scenario_parser_reports_problems():
    text = format_scenario(small())
    with pytest.raises(ValueError, match="unknown key"):
        parse_scenario(text + "colour = blue\n")
    with pytest.raises(ValueError, match="missing"):
        parse_scenario("\n".join(text.splitlines()[1:]))
    with pytest.raises(ValueError, match="expected"):
        parse_scenario(text + "dangling\n")
    assert parse_scenario("# header\n" + text.replace("\n", "  # note\n")) == small()


@pytest.mark.parametrize("name", ["free", "material_points", "test_particle", "strong_scatter"])
def test_shipped_scenarios_load(name):
    sc = shipped_scenario(name)
    assert (SCENARIO_DIR / f"{name}.cfg").is_file()
    assert sc.name == name and sc.n_steps > 0


def test_shipped_material_points_geometry():
    sc = shipped_scenario("material_points")
    assert sc.packet_a.width / sc.potential.params[1] == pytest.approx(0.1)
    assert sc.potential.name == "gaussian"


def test_shipped_test_particle_satisfies_regime():
    sc = shipped_scenario("test_particle")
    assert sc.mass_b / sc.mass_a == 1000
    assert sc.packet_b.momentum == 0 and sc.packet_b.width <= sc.grid_a.dx


def test_strong_scatter_defeats_mean_field():
    report = mean_field_comparison(shipped_scenario("strong_scatter"))
    assert report.min_fidelity <= 0.9
    assert report.entropy_bits[-1] >= 0.1
