"""Closed-form cost models, analytic rank bounds, and cost reporting.

The effective qubit number of a contraction is log2 of its FLOPs per
two-qubit gate; dividing by n gives the complexity density, which the
geometry-level models below predict from (n, d) alone.  Combining a model
with the fidelity-resolvability depth limit gives the largest effective
qubit number reachable for given error and time budgets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..circuits import Circuit
from ..errors import DomainError
from ..estimators import verifiable_depth
from ..graphs import expansion_bound
from .tree import ContractionTree


@dataclass(frozen=True)
class SimpleCostModel:
    """Two-constant density models, one per circuit geometry.

    2d: density = amp * min(1, slope * d / sqrt(n)), a function of the
    scale-free depth d / sqrt(n) alone.  rg: density = min(1, rate*(d -
    offset)), clipped at 0, saturating for d past offset + 1/rate.
    spatial_dim records the surface-scaling exponent (n^((D-1)/D)) the 2d
    form specializes.
    """

    geometry: str
    amp: float = 1.1
    slope: float = 0.35
    rate: float = 0.125
    offset: float = 2.0
    spatial_dim: int = 2

    def __post_init__(self):
        if self.geometry not in ("2d", "rg"):
            raise ValueError("geometry must be '2d' or 'rg'")


def simple_cost(model: SimpleCostModel, n: int, d: float) -> tuple[float, float]:
    """Model complexity density and the FLOP count it implies."""
    if model.geometry == "2d":
        density = model.amp * min(1.0, model.slope * d / math.sqrt(n))
    else:
        density = min(1.0, model.rate * (d - model.offset))
    density = max(density, 0.0)
    flops = (n * d / 2.0) * 2.0 ** (density * n)
    return density, flops


def lower_bound_rank(n: int, d: int) -> float:
    """Expander-cut floor on the largest rank of any contraction tree."""
    return expansion_bound(n, d).rank_lower


@dataclass(frozen=True)
class MaxQubitsResult:
    n_eff: float
    n_star: int
    d_star: int
    depth_limit: float  # largest verifiable depth at n_star


def max_effective_qubits(eps: float, tau_q: float, t_q: float,
                         model: SimpleCostModel,
                         n_grid=range(8, 129, 4),
                         d_grid=range(1, 257)) -> MaxQubitsResult:
    """Largest model-predicted effective qubit number under a time budget.

    Scans the (n, d) grid keeping only depths whose fidelity stays
    resolvable in the quantum time budget, maximizing density * n.
    """
    best = None
    for n in n_grid:
        d_max = verifiable_depth(eps, tau_q, t_q, n)
        for d in d_grid:
            if d > d_max:
                break
            density, _ = simple_cost(model, n, d)
            n_eff = density * n
            if best is None or n_eff > best.n_eff:
                best = MaxQubitsResult(n_eff, n, d, d_max)
    if best is None:
        raise DomainError("no feasible (n, d) point in the grid")
    return best


CSV_HEADER = ("ensemble,N,d,d_eff,log2_flops,log2_width,"
              "log2_flops_sliced,n_slices,C_density,seed")


@dataclass
class CostSummary:
    """One row of a contraction-cost scan."""

    ensemble: str
    n: int
    d: int
    d_eff: float
    log2_flops: float
    log2_width: float
    log2_flops_sliced: float | None
    n_slices: int
    c_density: float
    seed: int | None

    def csv_row(self) -> str:
        sliced = "" if self.log2_flops_sliced is None else \
            f"{self.log2_flops_sliced:.4f}"
        seed = "" if self.seed is None else str(self.seed)
        return (f"{self.ensemble},{self.n},{self.d},{self.d_eff:.4f},"
                f"{self.log2_flops:.4f},{self.log2_width:.4f},"
                f"{sliced},{self.n_slices},{self.c_density:.6f},{seed}")


def summarize(c: Circuit, tree: ContractionTree,
              sliced_tree: ContractionTree | None = None,
              seed: int | None = None) -> CostSummary:
    """Cost summary of an optimized tree, densities per two-qubit gate."""
    if tree.stats is None:
        raise ValueError("tree has no attached stats")
    n_gates = max(c.n_2q, 1)
    n_eff = math.log2(tree.stats.total_flops / n_gates)
    sliced_cost = None
    n_slices = 0
    if sliced_tree is not None:
        if sliced_tree.stats is None:
            raise ValueError("sliced tree has no attached stats")
        sliced_cost = sliced_tree.stats.log2_total
        n_slices = len(sliced_tree.sliced)
    return CostSummary(
        ensemble=c.ensemble,
        n=c.n,
        d=c.depth,
        d_eff=c.d_eff,
        log2_flops=tree.stats.log2_flops,
        log2_width=tree.stats.log2_width,
        log2_flops_sliced=sliced_cost,
        n_slices=n_slices,
        c_density=n_eff / c.n,
        seed=seed,
    )
