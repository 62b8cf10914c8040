"""
Element colouring model
"""
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class Colouring:
    """
    Per-element colour ids 0..n_colours-1; elements of one colour share no node.
    """
    colour_of: np.ndarray

    def __post_init__(self):
        colour_of = np.array(self.colour_of, dtype=np.int64).reshape(-1)
        colour_of.setflags(write=False)
        object.__setattr__(self, "colour_of", colour_of)
        if colour_of.size:
            present = np.unique(colour_of)
            if present[0] != 0 or present[-1] != present.size - 1:
                raise ValueError("colour ids must be 0..n_colours-1 without gaps")

    @property
    def n_elements(self) -> int:
        return int(self.colour_of.size)

    @property
    def n_colours(self) -> int:
        return int(self.colour_of.max()) + 1 if self.colour_of.size else 0

    @cached_property
    def colour_classes(self) -> List[np.ndarray]:
        """Element indices of each colour, ascending"""
        order = np.argsort(self.colour_of, kind="stable")
        bounds = np.searchsorted(self.colour_of[order], np.arange(self.n_colours + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in range(self.n_colours)]

    def class_sizes(self) -> List[int]:
        return [int(members.size) for members in self.colour_classes]

    def to_rows(self) -> List[Tuple[int, int]]:
        return [(e, int(c)) for e, c in enumerate(self.colour_of)]

    def __repr__(self) -> str:
        return f"Colouring(elements={self.n_elements}, colours={self.n_colours}, sizes={self.class_sizes()})"
