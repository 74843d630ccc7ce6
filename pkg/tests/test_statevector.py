"""Tests for dense simulation, sampling, scrambling stats, and trajectories."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcsw import graphs, statevector
from rcsw.circuits import build_mirror, build_rg_circuit, build_transport_rb
from rcsw.errors import CapacityError
from rcsw.statevector import (
    NoiseModel, StateVector, bipartite_purity, porter_thomas_stats, run,
    run_trajectories, sample,
)
from helpers import dense_unitary, rg_circuit


class TestRun:
    def test_matches_dense_unitary(self):
        for seed in range(4):
            c = rg_circuit(6, 3, seed)
            state = run(c).amplitudes
            expect = dense_unitary(c)[:, 0]
            assert np.max(np.abs(state - expect)) < 1e-12

    def test_initial_bits(self):
        c = rg_circuit(4, 3, 0)
        from dataclasses import replace
        c_bits = replace(c, initial_bits="0110")
        state = run(c_bits).amplitudes
        expect = dense_unitary(c)[:, int("0110", 2)]
        assert np.max(np.abs(state - expect)) < 1e-12

    def test_norm_preserved(self):
        c = rg_circuit(8, 4, 3)
        assert np.sum(run(c).probabilities()) == pytest.approx(1.0, abs=1e-12)

    def test_cap(self):
        c = rg_circuit(8, 3, 1)
        with pytest.raises(CapacityError):
            run(c, cap=6)

    def test_mirror_returns_bits(self):
        half = rg_circuit(8, 3, 5)
        m = build_mirror(half, seed=9)
        sv = run(m)
        assert sv.probabilities()[int(m.initial_bits, 2)] == pytest.approx(1.0, abs=1e-10)

    def test_transport_returns_bits(self):
        src = rg_circuit(6, 3, 2)
        t = build_transport_rb(src, seed=3)
        sv = run(t)
        assert sv.probabilities()[int(t.initial_bits, 2)] == pytest.approx(1.0, abs=1e-10)


class TestSample:
    def test_deterministic(self):
        sv = run(rg_circuit(6, 3, 7))
        assert sample(sv, 32, seed=1) == sample(sv, 32, seed=1)

    def test_matches_distribution(self):
        sv = run(rg_circuit(6, 4, 8))
        shots = 200000
        draws = sample(sv, shots, seed=2)
        counts = np.zeros(64)
        for b in draws:
            counts[int(b, 2)] += 1
        freq = counts / shots
        p = sv.probabilities()
        # three-sigma binomial envelope per bitstring
        sigma = np.sqrt(p * (1 - p) / shots)
        assert np.all(np.abs(freq - p) < 4 * sigma + 1e-4)

    def test_bitstring_format(self):
        sv = StateVector(3, np.array([0, 0, 0, 0, 0, 1, 0, 0], dtype=complex))
        assert sample(sv, 5, seed=0) == ["101"] * 5


class TestPorterThomas:
    def test_uniform_state(self):
        n = 6
        sv = StateVector(n, np.full(2 ** n, 2 ** (-n / 2), dtype=complex))
        assert porter_thomas_stats(sv).second_moment_statistic == pytest.approx(0.0, abs=1e-12)

    def test_basis_state(self):
        n = 5
        amps = np.zeros(2 ** n, dtype=complex)
        amps[3] = 1.0
        assert porter_thomas_stats(StateVector(n, amps)).second_moment_statistic == \
            pytest.approx(2 ** n - 1, abs=1e-9)

    def test_deep_circuit_near_one(self):
        stats = [porter_thomas_stats(run(rg_circuit(10, 8, s))).second_moment_statistic
                 for s in range(5)]
        assert abs(np.median(stats) - 1.0) < 0.05

    def test_convergence_improves_with_depth(self):
        n = 10
        med = {}
        for d in (2, 4, 8):
            vals = [abs(porter_thomas_stats(run(rg_circuit(n, d, 10 * d + s)))
                        .second_moment_statistic - 1.0) for s in range(8)]
            med[d] = np.median(vals)
        assert med[2] > med[4] > med[8] or med[4] < 0.05


class TestPurity:
    def test_product_state(self):
        c = rg_circuit(6, 3, 1)
        amps = np.zeros(2 ** 6, dtype=complex)
        amps[0] = 1.0
        sv = StateVector(6, amps)
        assert bipartite_purity(sv, [0, 1, 2]) == pytest.approx(1.0, abs=1e-12)

    def test_bell_pair(self):
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / math.sqrt(2)
        assert bipartite_purity(StateVector(2, amps), [0]) == pytest.approx(0.5, abs=1e-12)

    def test_haar_value(self):
        # deep random circuits approach the Haar purity (2^a + 2^b)/(2^n + 1)
        n = 10
        vals = [bipartite_purity(run(rg_circuit(n, 8, s + 40)), list(range(5)))
                for s in range(6)]
        expect = (2 ** 5 + 2 ** 5) / (2 ** n + 1)
        assert np.median(vals) == pytest.approx(expect, rel=0.2)

    def test_complement_symmetry(self):
        sv = run(rg_circuit(8, 4, 3))
        a = bipartite_purity(sv, [0, 1, 6])
        b = bipartite_purity(sv, [2, 3, 4, 5, 7])
        assert a == pytest.approx(b, abs=1e-12)


class TestTrajectories:
    def test_noiseless_unit_fidelity(self):
        c = rg_circuit(6, 3, 2)
        res = run_trajectories(c, NoiseModel(), n_traj=4, seed=0)
        assert res.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_depolarizing_decay(self):
        c = rg_circuit(8, 6, 4)
        eps = 0.02
        res = run_trajectories(c, NoiseModel(eps_2q=eps), n_traj=300, seed=1)
        target = (1 - eps) ** c.n_2q
        # scrambled Pauli errors rarely cancel, so survival tracks the
        # no-error probability
        assert res.fidelity == pytest.approx(target, abs=0.04)

    def test_fixed_pauli_channel(self):
        c = rg_circuit(6, 4, 5)
        probs = [0.0] * 15
        probs[_pair_index("X", "X")] = 1.0
        nm = NoiseModel(eps_2q=1.0, pauli_probs=tuple(probs))
        res = run_trajectories(c, nm, n_traj=10, seed=2)
        assert res.fidelity < 0.2

    def test_scale_with_n(self):
        nm = NoiseModel(eps_2q=0.1, scale_with_n=True, ref_n=56)
        assert nm.scale(14) == pytest.approx(4.0)
        assert NoiseModel(eps_2q=0.1).scale(14) == 1.0

    def test_dephasing_angle_matches_infidelity(self):
        # average infidelity of Rz(phi) is (2/3) sin^2(phi/2)
        nm = NoiseModel(eps_mem=3e-3)
        phi = nm.dephasing_angle(56)
        assert (2.0 / 3.0) * math.sin(phi / 2) ** 2 == pytest.approx(3e-3, rel=1e-9)

    def test_memory_noise_reduces_fidelity(self):
        c = rg_circuit(8, 6, 6)
        res = run_trajectories(c, NoiseModel(eps_mem=2e-3), n_traj=3, seed=3)
        assert 0.7 < res.fidelity < 1.0

    def test_samples_pooled(self):
        c = rg_circuit(6, 3, 7)
        res = run_trajectories(c, NoiseModel(eps_2q=0.01), n_traj=8, seed=4,
                               shots_per_traj=3)
        assert len(res.samples) == 24
        assert all(len(s) == 6 for s in res.samples)

    def test_bad_channel_weights(self):
        with pytest.raises(ValueError):
            NoiseModel(eps_2q=0.1, pauli_probs=(1.0,) * 15)
        with pytest.raises(ValueError):
            NoiseModel(eps_2q=1.5)


def _pair_index(a: str, b: str) -> int:
    pairs = [(x, y) for x in "IXYZ" for y in "IXYZ" if (x, y) != ("I", "I")]
    return pairs.index((a, b))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**16))
def test_apply_circuit_linearity(seed):
    c = rg_circuit(6, 3, seed % 100)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=64) + 1j * rng.normal(size=64)
    b = rng.normal(size=64) + 1j * rng.normal(size=64)
    out_sum = run(c, initial=a + b).amplitudes
    out_a = run(c, initial=a).amplitudes
    out_b = run(c, initial=b).amplitudes
    assert np.max(np.abs(out_sum - out_a - out_b)) < 1e-10
