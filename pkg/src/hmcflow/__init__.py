"""Numerical laboratory for the degenerate harmonic-mean curvature flow of
weakly convex surfaces with flat sides.

Subpackages by concern: geometry (pointwise curvature of height fields),
flow (time evolution of the graph equation and the comparison harness),
interface (flat-side boundary extraction and curve shortening flow),
analysis (pressure transform, non-degeneracy monitors, weighted Hölder
norms), model_pde (the linear degenerate model operator and its split
solver), charts (the global coordinate-change formulary), oracle
(closed-form and reduced-dimension references), cli (configs, runs,
serialization).
"""

from . import analysis, charts, cli, errors, flow, geometry, interface, model_pde, oracle

__all__ = [
    "analysis",
    "charts",
    "cli",
    "errors",
    "flow",
    "geometry",
    "interface",
    "model_pde",
    "oracle",
]

__version__ = "0.1.0"
