import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointerlab.amplitudes import (
    MarkovModel,
    RabiModel,
    markov_amplitudes,
    one_excitation_hamiltonian,
    rabi_amplitudes,
    rabi_eigencheck,
)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0, 50))
def test_rabi_amplitudes_are_normalized(omega, kappa, t):
    amps = rabi_amplitudes(RabiModel(omega, kappa), t)
    assert amps.survival + amps.transfer == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(0, 50))
def test_markov_amplitudes_are_normalized(gamma, omega, t):
    amps = markov_amplitudes(MarkovModel(gamma, omega), t)
    assert amps.survival + amps.transfer == pytest.approx(1.0, abs=1e-12)
    assert amps.survival == pytest.approx(math.exp(-gamma * t), rel=1e-12, abs=1e-300)


def test_markov_transfer_accurate_at_tiny_times():
    amps = MarkovModel(gamma=1.0).amplitudes(1e-12)
    assert amps.transfer == pytest.approx(1e-12, rel=1e-9)


def test_rabi_swap_and_return():
    m = RabiModel(omega=0.0, kappa=2.0)
    assert m.amplitudes(math.pi / 4).transfer == pytest.approx(1.0)
    assert m.amplitudes(math.pi / 2).survival == pytest.approx(1.0)


def test_eigencheck_passes_for_several_models():
    for model in (RabiModel(0.0, 1.0), RabiModel(1.3, 0.4), RabiModel(-2.0, 3.0)):
        result = rabi_eigencheck(model)
        assert result
        assert np.allclose(result.eigenvalues, [model.omega - model.kappa, model.omega + model.kappa])


def test_eigencheck_catches_wrong_hamiltonian(monkeypatch):
    import pointerlab.amplitudes as mod

    monkeypatch.setattr(mod, "one_excitation_hamiltonian", lambda m: np.array([[m.omega, -2j * m.kappa], [2j * m.kappa, m.omega]]))
    assert not mod.rabi_eigencheck(RabiModel(0.0, 1.0))


def test_hamiltonian_is_hermitian():
    h = one_excitation_hamiltonian(RabiModel(0.7, 1.1))
    assert np.allclose(h, h.conj().T)


def test_model_validation():
    with pytest.raises(ValueError):
        RabiModel(kappa=0.0)
    with pytest.raises(ValueError):
        MarkovModel(gamma=-1.0)
    with pytest.raises(ValueError):
        rabi_amplitudes(RabiModel(), -1.0)
    assert RabiModel(kappa=2.5).rate == 2.5 and MarkovModel(gamma=0.5).rate == 0.5


def test_markov_transfer_grows_linearly_at_short_times():
    gamma = 2.0
    t = 1e-4 / gamma
    assert MarkovModel(gamma).amplitudes(t).transfer == pytest.approx(gamma * t, rel=1e-3)


def test_markov_half_transfer_at_log_two():
    amps = MarkovModel(1.0).amplitudes(math.log(2))
    assert amps.survival == pytest.approx(0.5) and amps.transfer == pytest.approx(0.5)
