"""Data-first transformation graphs for source repositories.

Build a graph whose nodes are data states and whose edges are the
transformations between them, navigate it with a small tool set, and run
search-based fault localization over the resulting lineages.
"""

__version__ = "0.1.0"

from .model import DataNode, Dtg, SubGraph, TransformEdge  # noqa: F401
from .spans import SourceSpan  # noqa: F401
