"""Dense statevector simulation with optional stochastic noise trajectories.

Qubit 0 is the most significant bit of the amplitude index, so the
amplitude of bitstring "b0 b1 ... b_{n-1}" sits at index int(bits, 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, PAULIS
from .errors import CapacityError

DEFAULT_CAP = 26  # qubits; 2^26 complex128 amplitudes is 1 GiB


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray  # (2**n,) complex128

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic two-qubit Pauli errors plus coherent memory dephasing.

    eps_2q is the probability of inserting a non-identity Pauli pair after
    each two-qubit gate; pauli_probs (length 15, ordered IX..ZZ) reweights
    the channel and defaults to uniform, i.e. two-qubit depolarizing.
    eps_mem is an average per-qubit infidelity per two-qubit layer, applied
    as a fixed-sign Rz rotation on every qubit.  With scale_with_n the rates
    are multiplied by ref_n / n at simulation time, holding the total error
    per circuit roughly constant across sizes.  eps_1q adds a depolarizing
    channel after every single-qubit layer.
    """

    eps_2q: float = 0.0
    pauli_probs: tuple[float, ...] | None = None
    eps_mem: float = 0.0
    mem_sign: float = 1.0
    eps_1q: float = 0.0
    scale_with_n: bool = False
    ref_n: int = 56

    def __post_init__(self):
        for name in ("eps_2q", "eps_mem", "eps_1q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.pauli_probs is not None:
            p = np.asarray(self.pauli_probs, dtype=float)
            if p.shape != (15,) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("pauli_probs must be 15 nonnegative weights summing to 1")

    def scale(self, n: int) -> float:
        return self.ref_n / n if self.scale_with_n else 1.0

    def dephasing_angle(self, n: int) -> float:
        """Rz angle whose average infidelity equals the scaled eps_mem."""
        eps = min(self.eps_mem * self.scale(n), 2.0 / 3.0)
        return 2.0 * math.asin(math.sqrt(1.5 * eps))


_PAULI_PAIRS = [(a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")]


def _check_cap(n: int, cap: int):
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the dense cap of {cap}")


def _initial_state(c: Circuit, initial) -> np.ndarray:
    if initial is not None:
        if isinstance(initial, StateVector):
            initial = initial.amplitudes
        state = np.array(initial, dtype=complex).reshape(-1).copy()
        if state.shape != (2 ** c.n,):
            raise ValueError("initial state has wrong dimension")
        return state
    state = np.zeros(2 ** c.n, dtype=complex)
    idx = int(c.initial_bits, 2) if c.initial_bits else 0
    state[idx] = 1.0
    return state


def apply_1q(state: np.ndarray, u: np.ndarray, q: int, n: int):
    """In-place single-qubit gate on qubit q."""
    m = state.reshape(2 ** q, 2, -1)
    a0 = m[:, 0, :].copy()
    a1 = m[:, 1, :]
    m[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    m[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def apply_diag_1q(state: np.ndarray, d0: complex, d1: complex, q: int, n: int):
    m = state.reshape(2 ** q, 2, -1)
    m[:, 0, :] *= d0
    m[:, 1, :] *= d1


def apply_uzz(state: np.ndarray, theta: float, qa: int, qb: int, n: int):
    """In-place exp(-i theta/2 Z@Z) on qubits qa < qb."""
    if qa > qb:
        qa, qb = qb, qa
    eq = np.exp(-0.5j * theta)
    ne = np.exp(0.5j * theta)
    m = state.reshape(2 ** qa, 2, 2 ** (qb - qa - 1), 2, -1)
    m[:, 0, :, 0, :] *= eq
    m[:, 1, :, 1, :] *= eq
    m[:, 0, :, 1, :] *= ne
    m[:, 1, :, 0, :] *= ne


def apply_circuit(state: np.ndarray, c: Circuit) -> np.ndarray:
    for lay in c.layers:
        if lay.kind == "1q":
            for g in lay.gates:
                apply_1q(state, g.matrix(), g.q, c.n)
        else:
            for g in lay.gates:
                apply_uzz(state, g.theta, g.q0, g.q1, c.n)
    return state


def run(c: Circuit, initial=None, cap: int = DEFAULT_CAP) -> StateVector:
    """Noiseless simulation from c.initial_bits (default all zeros)."""
    _check_cap(c.n, cap)
    state = _initial_state(c, initial)
    apply_circuit(state, c)
    return StateVector(c.n, state)


def sample(sv: StateVector, shots: int, seed) -> list[str]:
    """Draw bitstrings from the measurement distribution."""
    rng = np.random.default_rng(seed)
    p = sv.probabilities()
    cum = np.cumsum(p)
    cum /= cum[-1]
    idx = np.searchsorted(cum, rng.random(shots), side="right")
    return [format(int(i), f"0{sv.n}b") for i in idx]


@dataclass
class PorterThomasStats:
    second_moment_statistic: float
    hist_density: np.ndarray
    hist_edges: np.ndarray


def porter_thomas_stats(sv: StateVector, bins: int = 40) -> PorterThomasStats:
    """Second-moment statistic 2^n sum_x P(x)^2 - 1 and the rescaled histogram.

    The statistic is the exact-distribution analog of a linear cross-entropy
    score: 1 for an exponential (fully scrambled) distribution, 0 for the
    uniform one, and large for shallow unconverged circuits.
    """
    p = sv.probabilities()
    stat = float(2 ** sv.n * np.sum(p * p) - 1.0)
    q = 2 ** sv.n * p
    density, edges = np.histogram(q, bins=bins, density=True)
    return PorterThomasStats(stat, density, edges)


def bipartite_purity(sv: StateVector, subset) -> float:
    """Tr(rho_A^2) for the reduced state on the given qubit subset."""
    sub = sorted(set(int(q) for q in subset))
    if not sub or len(sub) >= sv.n:
        raise ValueError("subset must be a proper nonempty qubit subset")
    rest = [q for q in range(sv.n) if q not in sub]
    psi = sv.amplitudes.reshape([2] * sv.n).transpose(sub + rest)
    m = psi.reshape(2 ** len(sub), -1)
    if m.shape[0] <= m.shape[1]:
        gram = m @ m.conj().T
    else:
        gram = m.conj().T @ m
    return float(np.sum(np.abs(gram) ** 2).real)


@dataclass
class TrajectoryResult:
    fidelity: float
    stderr: float
    overlaps: np.ndarray
    samples: list[str] = field(default_factory=list)


def _noisy_trajectory(c: Circuit, nm: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    scale = nm.scale(c.n)
    p2 = min(nm.eps_2q * scale, 1.0)
    p1 = min(nm.eps_1q * scale, 1.0)
    phi = nm.dephasing_angle(c.n) * nm.mem_sign
    dz = (np.exp(-0.5j * phi), np.exp(0.5j * phi))
    weights = nm.pauli_probs
    state = _initial_state(c, None)
    for lay in c.layers:
        if lay.kind == "1q":
            for g in lay.gates:
                apply_1q(state, g.matrix(), g.q, c.n)
            if p1 > 0.0:
                for q in range(c.n):
                    if rng.random() < p1:
                        label = "XYZ"[rng.integers(0, 3)]
                        apply_1q(state, PAULIS[label], q, c.n)
        else:
            for g in lay.gates:
                apply_uzz(state, g.theta, g.q0, g.q1, c.n)
                if p2 > 0.0 and rng.random() < p2:
                    k = rng.choice(15, p=weights) if weights is not None else rng.integers(0, 15)
                    la, lb = _PAULI_PAIRS[k]
                    if la != "I":
                        apply_1q(state, PAULIS[la], g.q0, c.n)
                    if lb != "I":
                        apply_1q(state, PAULIS[lb], g.q1, c.n)
            if nm.eps_mem > 0.0:
                for q in range(c.n):
                    apply_diag_1q(state, dz[0], dz[1], q, c.n)
    return state


def run_trajectories(c: Circuit, nm: NoiseModel, n_traj: int, seed,
                     shots_per_traj: int = 0, cap: int = DEFAULT_CAP) -> TrajectoryResult:
    """Quantum-trajectory noise simulation.

    Each trajectory applies the ideal circuit with randomly inserted Pauli
    errors; the fidelity estimate is the mean squared overlap with the ideal
    state.  With shots_per_traj > 0, bitstrings sampled from each noisy
    trajectory are pooled, giving draws from the noisy output distribution.
    """
    _check_cap(c.n, cap)
    ideal = run(c, cap=cap).amplitudes
    seeds = np.random.SeedSequence(seed).spawn(n_traj)
    overlaps = np.empty(n_traj)
    samples: list[str] = []
    for t in range(n_traj):
        rng = np.random.default_rng(seeds[t])
        state = _noisy_trajectory(c, nm, rng)
        overlaps[t] = abs(np.vdot(ideal, state)) ** 2
        if shots_per_traj > 0:
            samples.extend(sample(StateVector(c.n, state), shots_per_traj, rng))
    stderr = float(np.std(overlaps, ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
    return TrajectoryResult(float(np.mean(overlaps)), stderr, overlaps, samples)
