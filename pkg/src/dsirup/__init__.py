"""Monadic disjunctive sirups: evaluation, cactus expansions, boundedness
and complexity classification for covering-axiom mediated Boolean CQs."""

from .model import LabelledGraph, parse, serialize, shape

__all__ = ["LabelledGraph", "parse", "serialize", "shape"]
__version__ = "0.1.0"
