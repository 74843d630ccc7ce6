"""Circuit construction and serialization.

Circuits alternate single-qubit layers S_k with two-qubit layers E_k,

    C = S_d E_d ... S_1 E_1 S_0,

so a depth-d circuit has d two-qubit layers and d+1 single-qubit layers.
Two-qubit gates are ZZ phase gates UZZ(theta) = exp(-i(theta/2) Z x Z);
single-qubit gates are stored as Rz(psi) * U1q(theta, phi) with
U1q(theta, phi) = exp(-i(theta/2)(X cos phi + Y sin phi)).
"""
from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import graphs
from .errors import ParseError

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def rz_matrix(psi: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * psi), 0], [0, cmath.exp(0.5j * psi)]])


def u1q_matrix(theta: float, phi: float) -> np.ndarray:
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array([
        [c, -1j * cmath.exp(-1j * phi) * s],
        [-1j * cmath.exp(1j * phi) * s, c],
    ])


def su2_matrix(psi: float, theta: float, phi: float) -> np.ndarray:
    return rz_matrix(psi) @ u1q_matrix(theta, phi)


def uzz_matrix(theta: float) -> np.ndarray:
    a = cmath.exp(-0.5j * theta)
    b = cmath.exp(0.5j * theta)
    return np.diag([a, b, b, a])


def su2_decompose(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (psi, theta, phi) with Rz(psi) U1q(theta, phi) = u up to phase."""
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    v = u / cmath.sqrt(det)
    a, b = v[0, 0], v[1, 0]
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(b) < 1e-14:
        psi = -2.0 * cmath.phase(a)
        phi = 0.0
    elif abs(a) < 1e-14:
        psi = 0.0
        phi = cmath.phase(b) + math.pi / 2.0
    else:
        psi = -2.0 * cmath.phase(a)
        phi = cmath.phase(b) + math.pi / 2.0 + cmath.phase(a)
    return psi, theta, phi


def haar_su2(seed) -> tuple[float, float, float]:
    """Haar-random SU(2) angles via a normalized Gaussian quaternion."""
    rng = np.random.default_rng(seed)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    u = q[0] * _I2 - 1j * (q[1] * _X + q[2] * _Y + q[3] * _Z)
    return su2_decompose(u)


@dataclass(frozen=True)
class OneQubitGate:
    q: int
    psi: float
    theta: float
    phi: float

    def matrix(self) -> np.ndarray:
        return su2_matrix(self.psi, self.theta, self.phi)


@dataclass(frozen=True)
class TwoQubitGate:
    q0: int
    q1: int
    theta: float

    def matrix(self) -> np.ndarray:
        return uzz_matrix(self.theta)


@dataclass(frozen=True)
class Layer:
    kind: str  # "1q" or "2q"
    gates: tuple

    def __post_init__(self):
        if self.kind not in ("1q", "2q"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "2q":
            touched = [q for g in self.gates for q in (g.q0, g.q1)]
            if len(touched) != len(set(touched)):
                raise ValueError("two-qubit layer gates must be disjoint")


@dataclass(frozen=True)
class PauliFrame:
    """Random Pauli labels inserted around each reverse-half two-qubit gate."""

    entries: tuple  # ((layer, (q0, q1), label0, label1), ...)


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[Layer, ...]
    ensemble: str = "custom"
    seed: int | None = None
    graph: dict | None = None
    initial_bits: str | None = None
    frame: PauliFrame | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.layers:
            kinds = [lay.kind for lay in self.layers]
            expect = ["1q" if i % 2 == 0 else "2q" for i in range(len(kinds))]
            if kinds != expect or kinds[-1] != "1q":
                raise ValueError("layers must alternate 1q/2q and end on 1q")
        for lay in self.layers:
            for g in lay.gates:
                qubits = (g.q,) if lay.kind == "1q" else (g.q0, g.q1)
                if any(not 0 <= q < self.n for q in qubits):
                    raise ValueError("gate acts outside qubit range")
        if self.initial_bits is not None:
            if len(self.initial_bits) != self.n or set(self.initial_bits) - {"0", "1"}:
                raise ValueError("initial_bits must be an n-character bitstring")

    @property
    def depth(self) -> int:
        return sum(1 for lay in self.layers if lay.kind == "2q")

    @property
    def n_2q(self) -> int:
        return sum(len(lay.gates) for lay in self.layers if lay.kind == "2q")

    @property
    def d_eff(self) -> float:
        """Gate count normalized by a full layer of n/2 parallel gates."""
        return self.n_2q / (self.n / 2.0)

    def two_qubit_layers(self) -> list[Layer]:
        return [lay for lay in self.layers if lay.kind == "2q"]


def _one_q_layer_from_matrices(mats: list[np.ndarray]) -> Layer:
    gates = []
    for q, m in enumerate(mats):
        psi, theta, phi = su2_decompose(m)
        gates.append(OneQubitGate(q, psi, theta, phi))
    return Layer("1q", tuple(gates))


def _haar_layer(n: int, rng: np.random.Generator) -> Layer:
    return Layer("1q", tuple(
        OneQubitGate(q, *haar_su2(rng)) for q in range(n)
    ))


def build_rg_circuit(cg: graphs.ColoredGraph, seed) -> Circuit:
    """Random-geometry circuit: one two-qubit layer per color class.

    Every two-qubit gate is UZZ(pi/2); the d+1 single-qubit layers are
    independent Haar-random SU(2) gates on every qubit.
    """
    rng = np.random.default_rng(seed)
    n = cg.graph.n
    layers: list[Layer] = [_haar_layer(n, rng)]
    for color_edges in cg.layers():
        gates = tuple(TwoQubitGate(u, v, math.pi / 2.0) for u, v in color_edges)
        layers.append(Layer("2q", gates))
        layers.append(_haar_layer(n, rng))
    return Circuit(
        n=n,
        layers=tuple(layers),
        ensemble="rg",
        seed=_seed_int(seed),
        graph=graphs.graph_to_json(cg),
    )


def build_brickwork_circuit(n: int, d: int, seed) -> Circuit:
    """Nearest-neighbor chain circuit alternating even and odd bond layers."""
    if n < 2:
        raise ValueError("brickwork needs at least two qubits")
    if d < 1:
        raise ValueError("depth must be positive")
    rng = np.random.default_rng(seed)
    even = [(q, q + 1) for q in range(0, n - 1, 2)]
    odd = [(q, q + 1) for q in range(1, n - 1, 2)]
    layers: list[Layer] = [_haar_layer(n, rng)]
    for j in range(d):
        edges = even if j % 2 == 0 else odd
        gates = tuple(TwoQubitGate(u, v, math.pi / 2.0) for u, v in edges)
        layers.append(Layer("2q", gates))
        layers.append(_haar_layer(n, rng))
    return Circuit(n=n, layers=tuple(layers), ensemble="1d", seed=_seed_int(seed))


def build_2d_circuit(gs: graphs.GridSample, d: int, seed) -> Circuit:
    """Planar circuit on a grid patch, cycling the four direction classes.

    Boundary qubits sit out the layers whose direction class gives them no
    partner, so the effective depth d_eff is below d for finite patches.
    """
    if d < 1:
        raise ValueError("depth must be positive")
    rng = np.random.default_rng(seed)
    class_layers = gs.layers()
    layers: list[Layer] = [_haar_layer(gs.n, rng)]
    for j in range(d):
        edges = class_layers[j % 4]
        gates = tuple(TwoQubitGate(u, v, math.pi / 2.0) for u, v in edges)
        layers.append(Layer("2q", gates))
        layers.append(_haar_layer(gs.n, rng))
    return Circuit(
        n=gs.n,
        layers=tuple(layers),
        ensemble="2d",
        seed=_seed_int(seed),
        graph={
            "n": gs.n,
            "d": d,
            "edges": [[u, v] for u, v in gs.edges],
            "colors": list(gs.edge_colors),
        },
    )


def _seed_int(seed) -> int | None:
    return seed if isinstance(seed, int) else None


_PAULI_NAMES = ("I", "X", "Y", "Z")


def _pauli_pair_conjugate(theta: float, p0: str, p1: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-qubit factors of UZZ(theta) (P0 x P1) UZZ(theta)^dag, up to phase.

    UZZ conjugation maps Pauli pairs to Pauli pairs; the phase is global and
    dropped.  Found by scanning all 16 candidate pairs.
    """
    g = uzz_matrix(theta)
    m = g @ np.kron(PAULIS[p0], PAULIS[p1]) @ g.conj().T
    for a in _PAULI_NAMES:
        for b in _PAULI_NAMES:
            cand = np.kron(PAULIS[a], PAULIS[b])
            overlap = np.trace(cand.conj().T @ m) / 4.0
            if abs(abs(overlap) - 1.0) < 1e-10:
                return PAULIS[a] * overlap, PAULIS[b]
    raise RuntimeError("conjugated operator is not a Pauli pair")


def build_mirror(c: Circuit, seed) -> Circuit:
    """Mirror circuit: run c, then its inverse, from a random basis state.

    The reverse half is Pauli randomized compiled: uniform random Pauli pairs
    are folded in before each reverse gate and their frame corrections after
    it, leaving the ideal unitary unchanged.  Reverse gates UZZ(-pi/2) are
    realized as UZZ(+pi/2) with Z rotations folded into the neighboring
    single-qubit layers, so the hardware-facing gate set never changes.  The
    ideal circuit maps the initial bitstring to itself.
    """
    rng = np.random.default_rng(seed)
    h = c.depth
    if h < 1:
        raise ValueError("mirror needs a circuit with at least one 2q layer")
    fwd_1q: list[list[np.ndarray]] = []
    fwd_2q: list[Layer] = []
    for lay in c.layers:
        if lay.kind == "1q":
            mats = [_I2] * c.n
            for g in lay.gates:
                mats[g.q] = g.matrix()
            fwd_1q.append(mats)
        else:
            fwd_2q.append(lay)

    # single-qubit matrices for the 2h+1 layers of the mirrored circuit
    mats: list[list[np.ndarray]] = []
    for k in range(h):
        mats.append([m.copy() for m in fwd_1q[k]])
    mats.append([_I2.copy() for _ in range(c.n)])  # merged S_h^dag S_h
    for k in range(h - 1, -1, -1):
        mats.append([m.conj().T.copy() for m in fwd_1q[k]])

    two_q: list[tuple[TwoQubitGate, ...]] = []
    for j in range(h):
        two_q.append(fwd_2q[j].gates)
    frame_entries = []
    for j in range(h, 2 * h):
        src = fwd_2q[2 * h - j - 1]
        gates = []
        for g in src.gates:
            p0, p1 = (_PAULI_NAMES[i] for i in rng.integers(0, 4, size=2))
            frame_entries.append((j + 1, (g.q0, g.q1), p0, p1))
            c0, c1 = _pauli_pair_conjugate(-g.theta, p0, p1)
            # twirl inserts P before the ideal reverse gate, its frame
            # correction after it
            mats[j][g.q0] = PAULIS[p0] @ mats[j][g.q0]
            mats[j][g.q1] = PAULIS[p1] @ mats[j][g.q1]
            mats[j + 1][g.q0] = mats[j + 1][g.q0] @ c0
            mats[j + 1][g.q1] = mats[j + 1][g.q1] @ c1
            if abs(abs(g.theta) - math.pi / 2.0) < 1e-12:
                # UZZ(-theta) = phase * (Z x Z) UZZ(theta) holds only at
                # theta = +-pi/2; fold the Z's so the native angle survives
                mats[j + 1][g.q0] = mats[j + 1][g.q0] @ _Z
                mats[j + 1][g.q1] = mats[j + 1][g.q1] @ _Z
                gates.append(TwoQubitGate(g.q0, g.q1, g.theta))
            else:
                gates.append(TwoQubitGate(g.q0, g.q1, -g.theta))
        two_q.append(tuple(gates))

    bits = "".join(str(b) for b in rng.integers(0, 2, size=c.n))
    layers: list[Layer] = [_one_q_layer_from_matrices(mats[0])]
    for j in range(2 * h):
        layers.append(Layer("2q", two_q[j]))
        layers.append(_one_q_layer_from_matrices(mats[j + 1]))
    return Circuit(
        n=c.n,
        layers=tuple(layers),
        ensemble="mirror",
        seed=_seed_int(seed),
        graph=c.graph,
        initial_bits=bits,
        frame=PauliFrame(tuple(frame_entries)),
    )


def build_transport_rb(c: Circuit, initial_bits: str | None = None, seed=0) -> Circuit:
    """Transport-only analog: zero out every ZZ angle, restore the 1Q frame.

    All two-qubit gates become UZZ(0) so the transport and idling structure
    of c is kept while the entangling action is removed.  The final
    single-qubit layer is replaced by the per-qubit inverse of the cumulative
    product of all earlier single-qubit gates, so the ideal circuit returns
    the initial bitstring.  Gate counts match the source circuit.
    """
    rng = np.random.default_rng(seed)
    if initial_bits is None:
        initial_bits = "".join(str(b) for b in rng.integers(0, 2, size=c.n))
    one_q: list[list[np.ndarray]] = []
    two_q: list[Layer] = []
    for lay in c.layers:
        if lay.kind == "1q":
            mats = [_I2] * c.n
            for g in lay.gates:
                mats[g.q] = g.matrix()
            one_q.append(mats)
        else:
            two_q.append(lay)
    cumulative = [_I2.copy() for _ in range(c.n)]
    for mats in one_q[:-1]:
        for q in range(c.n):
            cumulative[q] = mats[q] @ cumulative[q]
    final = [m.conj().T for m in cumulative]

    layers: list[Layer] = []
    for k, mats in enumerate(one_q[:-1]):
        layers.append(_one_q_layer_from_matrices(mats))
        gates = tuple(TwoQubitGate(g.q0, g.q1, 0.0) for g in two_q[k].gates)
        layers.append(Layer("2q", gates))
    layers.append(_one_q_layer_from_matrices(final))
    return Circuit(
        n=c.n,
        layers=tuple(layers),
        ensemble="transport_rb",
        seed=_seed_int(seed),
        graph=c.graph,
        initial_bits=initial_bits,
    )


def circuit_to_json(c: Circuit) -> dict:
    doc: dict = {
        "n": c.n,
        "d": c.depth,
        "ensemble": c.ensemble,
        "seed": c.seed,
        "layers": [],
    }
    if c.graph is not None:
        doc["graph"] = c.graph
    if c.initial_bits is not None:
        doc["initial_bits"] = c.initial_bits
    for lay in c.layers:
        if lay.kind == "1q":
            doc["layers"].append({
                "type": "1q",
                "gates": [{"q": g.q, "psi": g.psi, "theta": g.theta, "phi": g.phi}
                          for g in lay.gates],
            })
        else:
            doc["layers"].append({
                "type": "2q",
                "gates": [{"q0": g.q0, "q1": g.q1, "theta": g.theta}
                          for g in lay.gates],
            })
    return doc


def serialize(c: Circuit) -> str:
    return json.dumps(circuit_to_json(c), sort_keys=True)


def circuit_from_json(doc: dict) -> Circuit:
    try:
        layers = []
        for i, lay in enumerate(doc["layers"]):
            kind = lay["type"]
            if kind == "1q":
                gates = tuple(OneQubitGate(int(g["q"]), float(g["psi"]),
                                           float(g["theta"]), float(g["phi"]))
                              for g in lay["gates"])
            elif kind == "2q":
                gates = tuple(TwoQubitGate(int(g["q0"]), int(g["q1"]),
                                           float(g["theta"]))
                              for g in lay["gates"])
            else:
                raise ParseError(f"layers[{i}]: unknown type {kind!r}")
            layers.append(Layer(kind, gates))
        return Circuit(
            n=int(doc["n"]),
            layers=tuple(layers),
            ensemble=str(doc.get("ensemble", "custom")),
            seed=doc.get("seed"),
            graph=doc.get("graph"),
            initial_bits=doc.get("initial_bits"),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad circuit document: {exc}") from exc


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} col {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    return circuit_from_json(doc)


_QASM_HEADER = """OPENQASM 2.0;
include "qelib1.inc";
// u1q(theta, phi) = exp(-i theta/2 (X cos phi + Y sin phi)), up to global phase
gate u1q(theta, phi) q {{ u3(theta, phi - pi/2, pi/2 - phi) q; }}
// zzp(theta) = exp(-i theta/2 Z@Z), up to global phase
gate zzp(theta) a, b {{ cx a, b; rz(theta) b; cx a, b; }}
qreg q[{n}];
creg m[{n}];
"""


def export_qasm(c: Circuit) -> str:
    """One-way QASM 2.0 text with the native gates defined in the header.

    Initial bits are prepared with leading X gates.  Angles are printed with
    full precision so the text round-trips through circuit_from_qasm.
    """
    lines = [_QASM_HEADER.format(n=c.n)]
    if c.initial_bits is not None:
        for q, bit in enumerate(c.initial_bits):
            if bit == "1":
                lines.append(f"x q[{q}];")
    for lay in c.layers:
        if lay.kind == "1q":
            for g in lay.gates:
                lines.append(f"u1q({g.theta!r},{g.phi!r}) q[{g.q}];")
                lines.append(f"rz({g.psi!r}) q[{g.q}];")
        else:
            for g in lay.gates:
                lines.append(f"zzp({g.theta!r}) q[{g.q0}],q[{g.q1}];")
    lines.append("measure q -> m;")
    return "\n".join(lines) + "\n"


_QASM_STMT = re.compile(
    r"^(x|u1q|rz|zzp)\s*(?:\(([^)]*)\))?\s*q\[(\d+)\]\s*(?:,\s*q\[(\d+)\])?$"
)


def circuit_from_qasm(text: str) -> Circuit:
    """Read back the restricted dialect written by export_qasm.

    Native gates (u1q, rz, zzp, x) are mapped exactly, including global
    phase conventions, so re-simulation reproduces the original amplitudes.
    """
    n = None
    bits: list[str] | None = None
    pending_u1q: dict[int, tuple[float, float]] = {}
    one_q_gates: list[OneQubitGate] = []
    layers: list[Layer] = []
    two_buffer: list[TwoQubitGate] = []

    def flush_1q():
        nonlocal one_q_gates
        layers.append(Layer("1q", tuple(one_q_gates)))
        one_q_gates = []

    def flush_2q():
        nonlocal two_buffer
        layers.append(Layer("2q", tuple(two_buffer)))
        two_buffer = []

    mode = "1q"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//")[0].strip()
        if not line or line.startswith(("OPENQASM", "include", "gate", "creg")):
            continue
        if line.startswith("qreg"):
            m = re.match(r"qreg\s+q\[(\d+)\];", line)
            if not m:
                raise ParseError(f"line {lineno}: bad qreg")
            n = int(m.group(1))
            bits = ["0"] * n
            continue
        if line.startswith("measure"):
            continue
        m = _QASM_STMT.match(line.rstrip(";").strip())
        if not m or n is None:
            raise ParseError(f"line {lineno}: unsupported statement {line!r}")
        name, args, qa, qb = m.group(1), m.group(2), int(m.group(3)), m.group(4)
        vals = [float(a) for a in args.split(",")] if args else []
        if name == "x":
            if layers or one_q_gates or pending_u1q:
                raise ParseError(f"line {lineno}: x allowed only as state prep")
            bits[qa] = "1"
        elif name == "u1q":
            if mode == "2q":
                flush_2q()
                mode = "1q"
            pending_u1q[qa] = (vals[0], vals[1])
        elif name == "rz":
            theta, phi = pending_u1q.pop(qa, (0.0, 0.0))
            one_q_gates.append(OneQubitGate(qa, vals[0], theta, phi))
        elif name == "zzp":
            if mode == "1q":
                flush_1q()
                mode = "2q"
            two_buffer.append(TwoQubitGate(qa, int(qb), vals[0]))
    if mode == "2q":
        flush_2q()
        layers.append(Layer("1q", ()))
    else:
        flush_1q()
    if n is None:
        raise ParseError("missing qreg declaration")
    bitstr = "".join(bits)
    return Circuit(
        n=n,
        layers=tuple(layers),
        ensemble="custom",
        initial_bits=bitstr if "1" in bitstr else None,
    )
