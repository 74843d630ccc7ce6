"""rcsw: a workbench for random-geometry circuit sampling experiments.

Generates arbitrary-connectivity random circuits, simulates them exactly or
under injected noise, estimates fidelities several independent ways, and
prices out tensor-network and matrix-product-state attacks on the sampling
task.
"""

__version__ = "0.1.0"
