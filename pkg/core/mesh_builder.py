"""
Structured quad meshes, uniform refinement and global DOF numbering.
"""
import logging
from typing import Iterable, Sequence, Tuple

import numpy as np

from models.mesh import DofMap, ElementDofs, ElementMatrix, Mesh

logger = logging.getLogger("cracbench.mesh")

# Local edges of a CCW quad: (v0,v1), (v1,v2), (v2,v3), (v3,v0)
_LOCAL_EDGE_START = np.array([0, 1, 2, 3])
_LOCAL_EDGE_END = np.array([1, 2, 3, 0])


def mesh_from_arrays(nodes: np.ndarray, elements: np.ndarray,
                     warnings: Iterable[str] = ()) -> Mesh:
    """
    Build a Mesh from coordinates and CCW quads, deriving the global edge list.

    Edges are ordered lexicographically by (min vertex, max vertex) so the
    ordering does not depend on how the quads were listed.
    """
    nodes = np.asarray(nodes, dtype=np.float64).reshape(-1, 2)
    elements = np.asarray(elements, dtype=np.int64).reshape(-1, 4)
    n_vertices = nodes.shape[0]

    if elements.size and (elements.min() < 0 or elements.max() >= n_vertices):
        raise ValueError("element references a vertex outside the node list")

    a = elements[:, _LOCAL_EDGE_START]
    b = elements[:, _LOCAL_EDGE_END]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    keys = (lo * max(n_vertices, 1) + hi).reshape(-1)
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    edges = np.stack([unique_keys // max(n_vertices, 1), unique_keys % max(n_vertices, 1)], axis=1)

    return Mesh(
        nodes=nodes,
        elements=elements,
        edges=edges,
        element_edges=np.asarray(inverse).reshape(-1, 4),
        warnings=tuple(warnings),
    )


def generate_structured(n: int) -> Mesh:
    """
    Split the unit square into n x n axis-aligned quads.

    Vertices and elements are both numbered row-major; vertex (i, j) sits at
    (i/n, j/n) and has index j*(n+1) + i.
    """
    if n < 1:
        raise ValueError(f"elements per side must be >= 1, got {n}")

    ticks = np.arange(n + 1, dtype=np.float64) / n
    xs, ys = np.meshgrid(ticks, ticks)
    nodes = np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)

    j, i = np.divmod(np.arange(n * n), n)
    v0 = j * (n + 1) + i
    elements = np.stack([v0, v0 + 1, v0 + n + 2, v0 + n + 1], axis=1)

    mesh = mesh_from_arrays(nodes, elements)
    logger.debug(f"Generated structured mesh n={n}: {mesh!r}")
    return mesh


def refine_uniform(mesh: Mesh) -> Mesh:
    """
    Split every quad into four.

    New vertices: one midpoint per edge (in global edge order) after the
    existing vertices, then one centre per element. The four children of an
    element are numbered consecutively and stay CCW.
    """
    V, E, Q = mesh.n_nodes, mesh.n_edges, mesh.n_elements
    mids = mesh.nodes[mesh.edges].mean(axis=1)
    centres = mesh.nodes[mesh.elements].mean(axis=1)
    nodes = np.concatenate([mesh.nodes, mids, centres])

    v = mesh.elements
    m = V + mesh.element_edges
    c = V + E + np.arange(Q)
    children = np.stack([
        np.stack([v[:, 0], m[:, 0], c, m[:, 3]], axis=1),
        np.stack([m[:, 0], v[:, 1], m[:, 1], c], axis=1),
        np.stack([c, m[:, 1], v[:, 2], m[:, 2]], axis=1),
        np.stack([m[:, 3], c, m[:, 2], v[:, 3]], axis=1),
    ], axis=1).reshape(-1, 4)

    return mesh_from_arrays(nodes, children, mesh.warnings)


def build_dof_map(mesh: Mesh, p: int, d: int) -> DofMap:
    """
    Number the nodes of every element at order p with d DOFs per node.

    Local order per element: 4 vertices, then p-1 nodes on each local edge
    (ascending along the edge, i.e. from its lower global vertex), then the
    (p-1)^2 interior nodes row-major.
    """
    if p < 1:
        raise ValueError(f"polynomial order must be >= 1, got {p}")
    if d < 1:
        raise ValueError(f"DOFs per node must be >= 1, got {d}")

    V, E, Q = mesh.n_nodes, mesh.n_edges, mesh.n_elements
    per_edge = p - 1
    per_cell = (p - 1) ** 2

    edge_nodes = (V + mesh.element_edges[:, :, None] * per_edge
                  + np.arange(per_edge)[None, None, :]).reshape(Q, 4 * per_edge)
    interior = (V + E * per_edge + np.arange(Q)[:, None] * per_cell
                + np.arange(per_cell)[None, :])
    element_nodes = np.concatenate([mesh.elements, edge_nodes, interior], axis=1)

    dof_map = DofMap(
        mesh=mesh,
        p=p,
        d=d,
        element_nodes=element_nodes,
        n_global_nodes=V + E * per_edge + Q * per_cell,
    )
    logger.debug(f"Built {dof_map!r}")
    return dof_map


def encode_runs(flat: Sequence[int]) -> np.ndarray:
    """Maximal run-length encoding: (start, length) per run of consecutive indices"""
    flat = np.asarray(flat, dtype=np.int64).reshape(-1)
    if flat.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    breaks = np.flatnonzero(np.diff(flat) != 1) + 1
    starts = np.concatenate([[0], breaks])
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    return np.stack([flat[starts], lengths], axis=1)


def decode_runs(runs: Iterable[Tuple[int, int]]) -> np.ndarray:
    pieces = [np.arange(start, start + length, dtype=np.int64) for start, length in runs]
    if not pieces:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(pieces)


def element_dofs(dof_map: DofMap, element: int) -> ElementDofs:
    if not 0 <= element < dof_map.n_elements:
        raise IndexError(f"element {element} out of range (0..{dof_map.n_elements - 1})")
    return dof_map.element_dofs_table[element]


def ones_element_matrix(dof_map: DofMap) -> ElementMatrix:
    m = dof_map.dofs_per_element
    return ElementMatrix(np.ones((m, m), dtype=np.float64))
