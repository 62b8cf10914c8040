"""
Mesh and element data models
"""
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    if out is array:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    2D quadrilateral mesh.

    nodes: (V, 2) coordinates; elements: (Q, 4) CCW vertex indices;
    edges: (E, 2) vertex pairs (min, max) sorted lexicographically;
    element_edges: (Q, 4) index into edges of the local edges
    (v0,v1), (v1,v2), (v2,v3), (v3,v0).
    """
    nodes: np.ndarray
    elements: np.ndarray
    edges: np.ndarray
    element_edges: np.ndarray
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes, np.float64).reshape(-1, 2))
        object.__setattr__(self, "elements", _frozen(self.elements, np.int64).reshape(-1, 4))
        object.__setattr__(self, "edges", _frozen(self.edges, np.int64).reshape(-1, 2))
        object.__setattr__(self, "element_edges", _frozen(self.element_edges, np.int64).reshape(-1, 4))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.elements.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def same_structure(self, other: "Mesh") -> bool:
        """Structural equality: identical coordinates, topology and edges"""
        return (
            self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.elements, other.elements)
            and np.array_equal(self.edges, other.edges)
        )

    def __repr__(self) -> str:
        return f"Mesh(nodes={self.n_nodes}, elements={self.n_elements}, edges={self.n_edges})"


@dataclass(frozen=True, eq=False)
class ElementDofs:
    """Global DOF indices of one element, flat and run-length encoded"""
    flat: np.ndarray
    runs: np.ndarray  # (k, 2) rows of (start, length)

    def __post_init__(self):
        object.__setattr__(self, "flat", _frozen(self.flat, np.int64).reshape(-1))
        object.__setattr__(self, "runs", _frozen(self.runs, np.int64).reshape(-1, 2))

    @property
    def size(self) -> int:
        return int(self.flat.shape[0])

    @property
    def n_runs(self) -> int:
        return int(self.runs.shape[0])

    def run_list(self) -> List[Tuple[int, int]]:
        return [(int(s), int(n)) for s, n in self.runs]

    def storage_size(self) -> Tuple[int, int]:
        """Integers stored by the flat and the run-length form"""
        return self.size, 2 * self.n_runs


@dataclass(frozen=True, eq=False)
class ElementMatrix:
    """Dense local stiffness matrix, row-major"""
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"element matrix must be square, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class DofMap:
    """
    Global DOF numbering for a mesh at polynomial order p with d DOFs per node.

    Node numbering: mesh vertices, then p-1 nodes per edge (edges in global
    order), then (p-1)^2 interior nodes per element. DOF k of node v is v*d + k.
    """
    mesh: Mesh
    p: int
    d: int
    element_nodes: np.ndarray  # (Q, (p+1)^2) in local order
    n_global_nodes: int

    def __post_init__(self):
        object.__setattr__(self, "element_nodes", _frozen(self.element_nodes, np.int64))

    @property
    def nodes_per_element(self) -> int:
        return (self.p + 1) ** 2

    @property
    def dofs_per_element(self) -> int:
        return self.d * self.nodes_per_element

    @property
    def global_dof_count(self) -> int:
        return self.d * self.n_global_nodes

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @cached_property
    def element_dof_array(self) -> np.ndarray:
        """(Q, d*(p+1)^2) flat DOF arrays of every element"""
        d = self.d
        dofs = (self.element_nodes[:, :, None] * d + np.arange(d)[None, None, :])
        dofs = dofs.reshape(self.n_elements, -1)
        dofs.setflags(write=False)
        return dofs

    @cached_property
    def element_dofs_table(self) -> List[ElementDofs]:
        # core.mesh_builder imports this module
        from core.mesh_builder import encode_runs
        return [ElementDofs(flat=row, runs=encode_runs(row)) for row in self.element_dof_array]

    def __repr__(self) -> str:
        return (f"DofMap(p={self.p}, d={self.d}, elements={self.n_elements}, "
                f"dofs={self.global_dof_count})")
