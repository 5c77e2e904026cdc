"""Dual bases for scattered-data kernel approximation.

Subpackages cover the pipeline end to end: point sets and cluster trees
(:mod:`dualkern.pointset`), radial kernels (:mod:`dualkern.kernels`),
linear-algebra primitives (:mod:`dualkern.linalg`), dense reference bases
(:mod:`dualkern.bases`), localized Lagrange bases (:mod:`dualkern.lagrange`),
symmetric footprint preconditioners (:mod:`dualkern.precond`), samplet
compression (:mod:`dualkern.samplets`), and the benchmark harness
(:mod:`dualkern.bench`).
"""

from . import bases, bench, errors, kernels, lagrange, linalg, pointset, precond, samplets

__all__ = [
    "bases",
    "bench",
    "errors",
    "kernels",
    "lagrange",
    "linalg",
    "pointset",
    "precond",
    "samplets",
]

__version__ = "0.1.0"
