"""Shared oracles and factories for the test suite."""
import numpy as np

from rcsw import graphs
from rcsw.circuits import Circuit, build_rg_circuit


def dense_unitary(c: Circuit) -> np.ndarray:
    """Independent full-matrix construction via Kronecker products."""
    dim = 2 ** c.n
    total = np.eye(dim, dtype=complex)
    for lay in c.layers:
        if lay.kind == "1q":
            for g in lay.gates:
                ops = [np.eye(2, dtype=complex)] * c.n
                ops[g.q] = g.matrix()
                m = ops[0]
                for op in ops[1:]:
                    m = np.kron(m, op)
                total = m @ total
        else:
            for g in lay.gates:
                m = np.eye(dim, dtype=complex)
                for idx in range(dim):
                    b0 = (idx >> (c.n - 1 - g.q0)) & 1
                    b1 = (idx >> (c.n - 1 - g.q1)) & 1
                    sign = 1.0 if b0 == b1 else -1.0
                    m[idx, idx] = np.exp(-0.5j * g.theta * sign)
                total = m @ total
    return total


def phase_aligned(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rescale b by a unit phase so its largest entry matches a's."""
    k = np.argmax(np.abs(a))
    return b * (a.flat[k] / b.flat[k])


def rg_circuit(n: int, d: int, seed: int) -> Circuit:
    cg = graphs.sample_colored_graph(n, d, seed=seed)
    return build_rg_circuit(cg, seed=seed + 1)
