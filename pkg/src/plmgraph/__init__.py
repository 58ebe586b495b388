"""Protein residue graphs, embedding fusion, a desk-scale equivariant
network, and structure-assessment metrics."""

__version__ = "0.1.0"

from . import egnn, embedio, errors, graphbuild, metrics, seqalign, structio, trainer

__all__ = [
    "__version__",
    "egnn",
    "embedio",
    "errors",
    "graphbuild",
    "metrics",
    "seqalign",
    "structio",
    "trainer",
]
