"""Tests for gate algebra, circuit builders, and serialization."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcsw import circuits, graphs
from rcsw.circuits import (
    Circuit, Layer, OneQubitGate, TwoQubitGate,
    build_2d_circuit, build_mirror, build_rg_circuit, build_transport_rb,
    circuit_from_qasm, deserialize, export_qasm, haar_su2, rz_matrix,
    serialize, su2_decompose, su2_matrix, u1q_matrix, uzz_matrix,
)
from rcsw.errors import ParseError
from helpers import dense_unitary, phase_aligned


class TestSu2:
    def test_decompose_reconstructs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            u = (q[0] * np.eye(2) - 1j * (q[1] * circuits.PAULIS["X"]
                 + q[2] * circuits.PAULIS["Y"] + q[3] * circuits.PAULIS["Z"]))
            psi, theta, phi = su2_decompose(u)
            v = su2_matrix(psi, theta, phi)
            assert np.allclose(phase_aligned(u, v), u, atol=1e-12)

    def test_decompose_edge_cases(self):
        for u in (np.eye(2, dtype=complex), rz_matrix(1.3), u1q_matrix(math.pi, 0.7),
                  1j * np.eye(2)):
            psi, theta, phi = su2_decompose(u)
            v = su2_matrix(psi, theta, phi)
            assert np.allclose(phase_aligned(u, v), u, atol=1e-12)

    def test_haar_first_moment(self):
        # Haar average of |tr U|^2 over SU(2) equals 1
        rng = np.random.default_rng(7)
        vals = []
        for _ in range(4000):
            psi, theta, phi = haar_su2(rng)
            vals.append(abs(np.trace(su2_matrix(psi, theta, phi))) ** 2)
        assert abs(np.mean(vals) - 1.0) < 0.06

    def test_uzz_schmidt_rank_two(self):
        g = uzz_matrix(math.pi / 2.0)
        # operator Schmidt rank across the two qubits
        m = g.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
        s = np.linalg.svd(m, compute_uv=False)
        assert np.sum(s > 1e-12) == 2

    def test_uzz_inverse_via_zz(self):
        lhs = uzz_matrix(-math.pi / 2.0)
        zz = np.kron(circuits.PAULIS["Z"], circuits.PAULIS["Z"])
        rhs = zz @ uzz_matrix(math.pi / 2.0)
        ratio = lhs[0, 0] / rhs[0, 0]
        assert abs(abs(ratio) - 1.0) < 1e-12
        assert np.allclose(lhs, ratio * rhs, atol=1e-12)


class TestBuilders:
    def test_rg_structure(self):
        cg = graphs.sample_colored_graph(12, 4, seed=3)
        c = build_rg_circuit(cg, seed=5)
        assert c.n == 12
        assert c.depth == 4
        kinds = [lay.kind for lay in c.layers]
        assert kinds == ["1q", "2q"] * 4 + ["1q"]
        for lay in c.two_qubit_layers():
            assert len(lay.gates) == 6
            assert all(g.theta == math.pi / 2.0 for g in lay.gates)
        assert c.d_eff == pytest.approx(4.0)

    def test_rg_deterministic(self):
        cg = graphs.sample_colored_graph(8, 3, seed=1)
        assert build_rg_circuit(cg, 9) == build_rg_circuit(cg, 9)
        assert build_rg_circuit(cg, 9) != build_rg_circuit(cg, 10)

    def test_2d_plaquette_gate_count(self):
        gs = graphs.make_grid(4, offset=(0.0, 0.0), rotation=0.0)
        c = build_2d_circuit(gs, d=4, seed=0)
        assert c.depth == 4
        assert c.n_2q == 4  # two classes present, two gates each

    def test_2d_effective_depth_below_nominal(self):
        gs = graphs.sample_grid(56, seed=2)
        c = build_2d_circuit(gs, d=12, seed=0)
        assert c.d_eff < 12.0
        assert c.d_eff > 6.0

    def test_mirror_structure_and_identity(self):
        cg = graphs.sample_colored_graph(6, 3, seed=2)
        half = build_rg_circuit(cg, seed=4)
        m = build_mirror(half, seed=8)
        assert m.depth == 6
        assert len(m.layers) == 13
        assert m.initial_bits is not None and len(m.initial_bits) == 6
        u = dense_unitary(m)
        u = u / u[0, 0]
        assert np.allclose(u, np.eye(2 ** 6), atol=1e-9)

    def test_mirror_seeds_same_unitary(self):
        cg = graphs.sample_colored_graph(4, 3, seed=0)
        half = build_rg_circuit(cg, seed=1)
        ua = dense_unitary(build_mirror(half, seed=10))
        ub = dense_unitary(build_mirror(half, seed=11))
        assert not np.allclose(ua, ub)  # different compilations
        assert np.allclose(phase_aligned(ua, ub), ua, atol=1e-9)

    def test_mirror_angles_differ_between_seeds(self):
        cg = graphs.sample_colored_graph(4, 3, seed=0)
        half = build_rg_circuit(cg, seed=1)
        ga = build_mirror(half, seed=10).layers[-1].gates
        gb = build_mirror(half, seed=11).layers[-1].gates
        assert any(a != b for a, b in zip(ga, gb))

    def test_transport_rb(self):
        cg = graphs.sample_colored_graph(8, 3, seed=3)
        src = build_rg_circuit(cg, seed=6)
        t = build_transport_rb(src, seed=7)
        assert t.n_2q == src.n_2q
        assert all(g.theta == 0.0 for lay in t.two_qubit_layers() for g in lay.gates)
        n1_src = sum(len(l.gates) for l in src.layers if l.kind == "1q")
        n1_t = sum(len(l.gates) for l in t.layers if l.kind == "1q")
        assert n1_t == n1_src
        u = dense_unitary(t)
        idx = int(t.initial_bits, 2)
        out = u[:, idx]
        assert abs(out[idx]) == pytest.approx(1.0, abs=1e-10)


class TestSerialization:
    def test_json_round_trip(self):
        cg = graphs.sample_colored_graph(8, 3, seed=1)
        c = build_rg_circuit(cg, seed=2)
        c2 = deserialize(serialize(c))
        assert c2 == c

    def test_mirror_round_trip_keeps_bits(self):
        cg = graphs.sample_colored_graph(6, 3, seed=1)
        m = build_mirror(build_rg_circuit(cg, seed=2), seed=3)
        m2 = deserialize(serialize(m))
        assert m2.initial_bits == m.initial_bits
        assert m2.layers == m.layers

    def test_minimal_document(self):
        c = deserialize('{"n": 2, "layers": []}')
        assert c.n == 2 and c.layers == ()

    def test_malformed_raises(self):
        with pytest.raises(ParseError):
            deserialize("{not json")
        with pytest.raises(ParseError):
            deserialize('{"n": 2}')
        with pytest.raises(ParseError):
            deserialize('{"n": 2, "layers": [{"type": "3q", "gates": []}]}')

    def test_qasm_header_u1q_matches_u3(self):
        # u3(theta, phi - pi/2, pi/2 - phi) must equal u1q up to global phase
        def u3(theta, phi, lam):
            return np.array([
                [math.cos(theta / 2), -np.exp(1j * lam) * math.sin(theta / 2)],
                [np.exp(1j * phi) * math.sin(theta / 2),
                 np.exp(1j * (phi + lam)) * math.cos(theta / 2)],
            ])
        rng = np.random.default_rng(3)
        for _ in range(50):
            theta, phi = rng.uniform(-math.pi, math.pi, size=2)
            a = u1q_matrix(theta, phi)
            b = u3(theta, phi - math.pi / 2, math.pi / 2 - phi)
            k = np.argmax(np.abs(a))
            assert np.allclose(a, b * (a.flat[k] / b.flat[k]), atol=1e-12)

    def test_qasm_header_zzp_matches_cx_rz_cx(self):
        cx = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                      dtype=complex)
        theta = 0.77
        rz1 = np.kron(np.eye(2), rz_matrix(theta))
        assert np.allclose(cx @ rz1 @ cx, uzz_matrix(theta), atol=1e-12)

    def test_qasm_round_trip_amplitudes(self):
        from rcsw import statevector
        cg = graphs.sample_colored_graph(6, 3, seed=4)
        for c in (build_rg_circuit(cg, seed=5),
                  build_mirror(build_rg_circuit(cg, seed=5), seed=6)):
            c2 = circuit_from_qasm(export_qasm(c))
            a = statevector.run(c).amplitudes
            b = statevector.run(c2).amplitudes
            assert np.max(np.abs(a - b)) < 1e-10

    def test_qasm_parse_error(self):
        with pytest.raises(ParseError):
            circuit_from_qasm("OPENQASM 2.0;\nqreg q[2];\nh q[0];\n")


class TestCircuitValidation:
    def test_rejects_bad_alternation(self):
        with pytest.raises(ValueError):
            Circuit(2, (Layer("2q", (TwoQubitGate(0, 1, 0.1),)),))

    def test_rejects_overlapping_2q(self):
        with pytest.raises(ValueError):
            Layer("2q", (TwoQubitGate(0, 1, 0.1), TwoQubitGate(1, 2, 0.1)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Circuit(2, (Layer("1q", (OneQubitGate(5, 0, 0, 0),)),))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**16))
    def test_rg_layer_counts(self, seed):
        cg = graphs.sample_colored_graph(8, 3, seed=seed)
        c = build_rg_circuit(cg, seed=seed + 1)
        assert len(c.layers) == 2 * c.depth + 1
        assert c.n_2q == 8 * 3 // 2
