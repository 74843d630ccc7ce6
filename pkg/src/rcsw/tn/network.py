"""Circuit to tensor-network mapping.

A layered circuit with fixed input and output bitstrings becomes a closed
network: each two-qubit gate is either kept as one rank-4 tensor or
Schmidt-split across the two wires into a pair of rank-3 tensors, and all
single-qubit gates and boundary states are absorbed into the neighboring
gate tensors.  The diagonal-plus-rotation structure of the entangler gives
the split exactly two nonzero Schmidt values, so index dimensions stay at 2
for nonzero coupling angles.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..circuits import Circuit, uzz_matrix

_SVD_TOL = 1e-12


@dataclass
class TensorNetwork:
    """Closed network: every index appears in exactly two tensors.

    arrays[t] has one axis per entry of indices[t]; dims maps index id to
    dimension.  scalar carries factors from wires that never meet a
    two-qubit gate and from fully absorbed tensors.  provenance[t] is
    (two_qubit_layer_position, (q0, q1), half) with half one of "a", "b",
    "ab", recording where the tensor came from.
    """

    n: int
    arrays: list[np.ndarray] = field(default_factory=list)
    indices: list[tuple[int, ...]] = field(default_factory=list)
    dims: dict[int, int] = field(default_factory=dict)
    scalar: complex = 1.0 + 0.0j
    provenance: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_tensors(self) -> int:
        return len(self.arrays)

    def index_count(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for ids in self.indices:
            for i in ids:
                counts[i] = counts.get(i, 0) + 1
        return counts

    def validate(self) -> None:
        for t, (arr, ids) in enumerate(zip(self.arrays, self.indices)):
            if arr.ndim != len(ids):
                raise ValueError(f"tensor {t} axes do not match its index list")
            for ax, i in enumerate(ids):
                if arr.shape[ax] != self.dims[i]:
                    raise ValueError(f"tensor {t} axis {ax} disagrees with dims")
        bad = [i for i, c in self.index_count().items() if c != 2]
        if bad:
            raise ValueError(f"indices {bad} do not appear in exactly 2 tensors")


def _basis_vector(bit: str) -> np.ndarray:
    v = np.zeros(2, dtype=complex)
    v[int(bit)] = 1.0
    return v


def _schmidt_split(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Split the entangler across its two wires.

    Returns (A[out_a, in_a, k], B[k, out_b, in_b]) with k the bond index;
    the bond dimension is the Schmidt rank (2 away from theta = 0 mod 2pi).
    """
    g = uzz_matrix(theta).reshape(2, 2, 2, 2)  # [oa, ob, ia, ib]
    m = g.transpose(0, 2, 1, 3).reshape(4, 4)  # [(oa ia), (ob ib)]
    u, s, vh = np.linalg.svd(m)
    r = max(1, int((s > _SVD_TOL * s[0]).sum()))
    a = (u[:, :r] * np.sqrt(s[:r])).reshape(2, 2, r)
    b = (np.sqrt(s[:r])[:, None] * vh[:r]).reshape(r, 2, 2)
    return a, b


def circuit_to_tn(c: Circuit, bitstring_out: str | None = None,
                  split_rank: int = 2) -> TensorNetwork:
    """Closed network for the amplitude <x|C|0...0> (or <x|C|initial_bits>).

    split_rank=2 Schmidt-splits every two-qubit gate into two wire-local
    tensors; split_rank=4 keeps one rank-4 tensor per gate.  Either way the
    single-qubit layers and both boundary states are absorbed, so the
    network has exactly one (split: two) tensor per two-qubit gate.
    """
    if split_rank not in (2, 4):
        raise ValueError("split_rank must be 2 or 4")
    if bitstring_out is None:
        bitstring_out = "0" * c.n
    if len(bitstring_out) != c.n or set(bitstring_out) - {"0", "1"}:
        raise ValueError("bitstring_out must be an n-character bitstring")
    in_bits = c.initial_bits if c.initial_bits is not None else "0" * c.n

    tn = TensorNetwork(n=c.n)
    tn.meta = {"split_rank": split_rank, "depth": c.depth,
               "ensemble": c.ensemble, "out": bitstring_out}
    next_id = 0

    def fresh(dim: int) -> int:
        nonlocal next_id
        i = next_id
        next_id += 1
        tn.dims[i] = dim
        return i

    # per-wire running state: open index into the last tensor on the wire
    # (None before any gate) and the pending single-qubit matrix or vector
    open_idx: list[int | None] = [None] * c.n
    pend: list[np.ndarray] = [_basis_vector(b) for b in in_bits]

    pos_2q = 0
    for lay in c.layers:
        if lay.kind == "1q":
            for g in lay.gates:
                pend[g.q] = g.matrix() @ pend[g.q]
            continue
        for g in lay.gates:
            qa, qb = g.q0, g.q1
            if split_rank == 2:
                a3, b3 = _schmidt_split(g.theta)
                bond = fresh(a3.shape[2])
                for q, raw, role in ((qa, a3, "a"), (qb, b3, "b")):
                    mat = raw if role == "a" else np.moveaxis(raw, 0, 2)
                    # mat is [out, in, bond] either way
                    if open_idx[q] is None:
                        arr = np.einsum("oik,i->ok", mat, pend[q])
                        out = fresh(2)
                        ids = (out, bond)
                    else:
                        arr = np.einsum("oik,ij->ojk", mat, pend[q])
                        out = fresh(2)
                        ids = (out, open_idx[q], bond)
                    tn.arrays.append(np.ascontiguousarray(arr))
                    tn.indices.append(ids)
                    tn.provenance.append((pos_2q, (qa, qb), role))
                    open_idx[q] = out
                    pend[q] = np.eye(2, dtype=complex)
            else:
                arr = uzz_matrix(g.theta).reshape(2, 2, 2, 2)  # [oa, ob, ia, ib]
                ids_tail: list[int] = []
                if open_idx[qa] is None:
                    arr = np.einsum("abij,i->abj", arr, pend[qa])
                else:
                    arr = np.einsum("abij,ik->abkj", arr, pend[qa])
                    ids_tail.append(open_idx[qa])
                if open_idx[qb] is None:
                    arr = np.einsum("ab...j,j->ab...", arr, pend[qb])
                else:
                    arr = np.einsum("ab...j,jk->ab...k", arr, pend[qb])
                    ids_tail.append(open_idx[qb])
                oa, ob = fresh(2), fresh(2)
                tn.arrays.append(np.ascontiguousarray(arr))
                tn.indices.append(tuple([oa, ob] + ids_tail))
                tn.provenance.append((pos_2q, (qa, qb), "ab"))
                open_idx[qa], open_idx[qb] = oa, ob
                pend[qa] = np.eye(2, dtype=complex)
                pend[qb] = np.eye(2, dtype=complex)
        pos_2q += 1

    # close the top: project every wire on its output bit
    for q in range(c.n):
        cap = _basis_vector(bitstring_out[q]) @ pend[q]
        if open_idx[q] is None:
            tn.scalar *= complex(cap if np.ndim(cap) == 0 else cap.item())
            continue
        target = next(t for t, ids in enumerate(tn.indices)
                      if open_idx[q] in ids)
        ax = tn.indices[target].index(open_idx[q])
        tn.arrays[target] = np.tensordot(np.asarray(cap), tn.arrays[target],
                                         axes=([0], [ax]))
        # tensordot leaves the remaining axes in their original order
        tn.indices[target] = tn.indices[target][:ax] + tn.indices[target][ax + 1:]
        del tn.dims[open_idx[q]]

    # fold tensors reduced to scalars into the global factor
    keep = [t for t in range(tn.n_tensors) if tn.indices[t]]
    for t in range(tn.n_tensors):
        if not tn.indices[t]:
            tn.scalar *= complex(tn.arrays[t].reshape(()).item())
    tn.arrays = [tn.arrays[t] for t in keep]
    tn.indices = [tn.indices[t] for t in keep]
    tn.provenance = [tn.provenance[t] for t in keep]
    tn.validate()
    return tn
