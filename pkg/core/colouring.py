"""
Greedy element colouring for lock-free coloured assembly
"""
import csv
import logging
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.errors import ColouringConflictError
from models.colouring import Colouring
from models.mesh import DofMap, Mesh

logger = logging.getLogger("cracbench.colouring")


def node_element_index(element_nodes: np.ndarray, n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Inverted index node -> elements as (offsets, element ids)"""
    width = element_nodes.shape[1]
    flat = element_nodes.reshape(-1)
    order = np.argsort(flat, kind="stable")
    owners = order // width
    offsets = np.concatenate([[0], np.cumsum(np.bincount(flat, minlength=n_nodes))])
    return offsets.astype(np.int64), owners.astype(np.int64)


def greedy_colouring(mesh: Mesh, dof_map: DofMap) -> Colouring:
    """
    Visit elements in index order; each takes the smallest colour unused by
    the elements it shares a node with.

    Elements that share an edge or interior node of the DofMap also share a
    mesh vertex, so the conflict graph is built from the vertices alone.
    """
    if dof_map.mesh is not mesh:
        raise ValueError("DofMap was built for a different mesh")

    elements = mesh.elements
    offsets, owners = node_element_index(elements, mesh.n_nodes)
    colour_of = np.full(mesh.n_elements, -1, dtype=np.int64)

    for e in range(mesh.n_elements):
        neighbours = np.concatenate([owners[offsets[v]:offsets[v + 1]] for v in elements[e]])
        used = colour_of[neighbours]
        taken = np.zeros(neighbours.size + 1, dtype=bool)
        taken[used[(used >= 0) & (used <= neighbours.size)]] = True
        colour_of[e] = int(np.argmin(taken))

    colouring = Colouring(colour_of)
    logger.info(f"Greedy colouring of {mesh!r}: {colouring.n_colours} colours")
    return colouring


def colour_distribution(colouring: Colouring) -> List[Tuple[int, float]]:
    """Fraction of elements per colour"""
    total = colouring.n_elements
    if total == 0:
        return []
    return [(k, size / total) for k, size in enumerate(colouring.class_sizes())]


def validate_colouring(colouring: Colouring,
                       element_nodes: Union[DofMap, Sequence[Sequence[int]], np.ndarray]) -> bool:
    """
    Raise ColouringConflictError if two elements of one colour share a node
    (or a DOF, when given DOF arrays).
    """
    if isinstance(element_nodes, DofMap):
        element_nodes = element_nodes.element_nodes
    element_nodes = np.asarray(element_nodes, dtype=np.int64)
    if element_nodes.shape[0] != colouring.n_elements:
        raise ValueError(
            f"colouring covers {colouring.n_elements} elements, mesh has {element_nodes.shape[0]}")

    width = element_nodes.shape[1] if element_nodes.ndim == 2 else 0
    for colour, members in enumerate(colouring.colour_classes):
        nodes = element_nodes[members].reshape(-1)
        owners = np.repeat(members, width)
        order = np.argsort(nodes, kind="stable")
        nodes, owners = nodes[order], owners[order]
        clash = np.flatnonzero((nodes[1:] == nodes[:-1]) & (owners[1:] != owners[:-1]))
        if clash.size:
            k = int(clash[0])
            raise ColouringConflictError(colour, int(owners[k]), int(owners[k + 1]), int(nodes[k]))
    return True


def write_colouring_csv(colouring: Colouring, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["element_id", "colour"])
        writer.writerows(colouring.to_rows())
    logger.info(f"Wrote colouring of {colouring.n_elements} elements to {path}")
