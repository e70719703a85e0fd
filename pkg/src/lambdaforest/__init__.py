"""Exact-arithmetic toolkit for group actions on trees with lexicographic
rational lengths: ordered-group arithmetic, finite tree metrics, isometry
classification, SL2 translation lengths over valued fields, gluing and
graphs of actions, graph-of-groups verification, and marked-group balls.
"""

from .ordgroup import LexValue, lex_compare

__all__ = ["LexValue", "lex_compare"]
__version__ = "0.1.0"
