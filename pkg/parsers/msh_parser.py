"""
Reader and writer for the ASCII Gmsh MSH 2.2 subset used by the benchmarks:
$MeshFormat, $Nodes and $Elements. Only 4-node quads (type 3) become mesh
elements; other sections are skipped.
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.mesh_builder import generate_structured, mesh_from_arrays
from models.mesh import Mesh

logger = logging.getLogger("cracbench.parser")


class MshParseError(ValueError):
    """Malformed MSH content"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class MshHeaderError(MshParseError):
    """Missing or unsupported $MeshFormat header"""


class MshNodeCountError(MshParseError):
    """$Nodes section holds fewer node lines than it declares"""


class NonQuadMeshError(MshParseError):
    """Mesh contains entities that are neither quads nor ignorable"""


class DanglingNodeError(MshParseError):
    """Element references a node id the $Nodes section does not define"""


class MshParser:
    """
    Parser for MSH 2.2 ASCII meshes.
    Keeps quads, drops points and lines silently, skips triangles with a warning.
    """

    SUPPORTED_VERSION = "2.2"
    ASCII_FILE_TYPE = "0"

    QUAD = 3
    TRIANGLE = 2
    # Element type -> number of nodes
    NODES_PER_TYPE = {
        15: 1,   # point
        1: 2,    # line
        2: 3,    # triangle
        3: 4,    # quad
    }
    IGNORED_TYPES = {15, 1}

    def __init__(self):
        self.logger = logging.getLogger("cracbench.parser")

    def parse(self, text: str) -> Mesh:
        """
        Parse MSH text into a Mesh with nodes reindexed densely in file order.

        Raises:
            MshHeaderError, MshNodeCountError, NonQuadMeshError,
            DanglingNodeError, MshParseError
        """
        lines = text.splitlines()
        cursor = 0
        saw_header = False
        node_ids: Dict[int, int] = {}
        coords: List[Tuple[float, float]] = []
        raw_quads: List[Tuple[int, List[int]]] = []
        warnings: List[str] = []

        while cursor < len(lines):
            section = lines[cursor].strip()
            cursor += 1
            if not section:
                continue
            if section == "$MeshFormat":
                cursor = self._parse_header(lines, cursor)
                saw_header = True
            elif section == "$Nodes":
                if not saw_header:
                    raise MshHeaderError("$Nodes before $MeshFormat", cursor)
                cursor = self._parse_nodes(lines, cursor, node_ids, coords)
            elif section == "$Elements":
                if not saw_header:
                    raise MshHeaderError("$Elements before $MeshFormat", cursor)
                cursor = self._parse_elements(lines, cursor, raw_quads, warnings)
            elif section.startswith("$") and not section.startswith("$End"):
                cursor = self._skip_section(lines, cursor, section)
            else:
                raise MshParseError(f"unexpected content {section!r}", cursor)

        if not saw_header:
            raise MshHeaderError("missing $MeshFormat section")
        if not raw_quads:
            raise NonQuadMeshError("mesh contains no quadrilateral elements")

        elements = np.empty((len(raw_quads), 4), dtype=np.int64)
        for row, (line_no, refs) in enumerate(raw_quads):
            for k, ref in enumerate(refs):
                index = node_ids.get(ref)
                if index is None:
                    raise DanglingNodeError(f"element references undefined node {ref}", line_no)
                elements[row, k] = index

        nodes = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
        elements = self._orient_ccw(nodes, elements, warnings)

        for warning in warnings:
            self.logger.warning(warning)

        mesh = mesh_from_arrays(nodes, elements, warnings)
        self.logger.info(f"Imported {mesh!r} ({len(warnings)} warnings)")
        return mesh

    def _parse_header(self, lines: List[str], cursor: int) -> int:
        if cursor >= len(lines):
            raise MshHeaderError("truncated $MeshFormat section", cursor)
        fields = lines[cursor].split()
        if len(fields) != 3:
            raise MshHeaderError(f"malformed format line {lines[cursor]!r}", cursor + 1)
        version, file_type, _data_size = fields
        if version != self.SUPPORTED_VERSION:
            raise MshHeaderError(f"unsupported MSH version {version}", cursor + 1)
        if file_type != self.ASCII_FILE_TYPE:
            raise MshHeaderError("binary MSH files are not supported", cursor + 1)
        return self._expect_end(lines, cursor + 1, "$EndMeshFormat")

    def _parse_nodes(self, lines: List[str], cursor: int,
                     node_ids: Dict[int, int], coords: List[Tuple[float, float]]) -> int:
        declared = self._read_count(lines, cursor, "$Nodes")
        cursor += 1
        for k in range(declared):
            if cursor >= len(lines) or lines[cursor].lstrip().startswith("$"):
                raise MshNodeCountError(
                    f"$Nodes declares {declared} nodes but only {k} are present", cursor + 1)
            fields = lines[cursor].split()
            try:
                node_id = int(fields[0])
                x, y = float(fields[1]), float(fields[2])
            except (IndexError, ValueError):
                raise MshParseError(f"malformed node line {lines[cursor]!r}", cursor + 1)
            if node_id in node_ids:
                raise MshParseError(f"duplicate node id {node_id}", cursor + 1)
            node_ids[node_id] = len(coords)
            coords.append((x, y))
            cursor += 1
        return self._expect_end(lines, cursor, "$EndNodes")

    def _parse_elements(self, lines: List[str], cursor: int,
                        raw_quads: List[Tuple[int, List[int]]], warnings: List[str]) -> int:
        declared = self._read_count(lines, cursor, "$Elements")
        cursor += 1
        skipped_triangles = 0
        for k in range(declared):
            if cursor >= len(lines) or lines[cursor].lstrip().startswith("$"):
                raise MshParseError(
                    f"$Elements declares {declared} elements but only {k} are present", cursor + 1)
            try:
                fields = [int(token) for token in lines[cursor].split()]
                element_type, n_tags = fields[1], fields[2]
            except (IndexError, ValueError):
                raise MshParseError(f"malformed element line {lines[cursor]!r}", cursor + 1)

            n_nodes = self.NODES_PER_TYPE.get(element_type)
            if n_nodes is None:
                raise NonQuadMeshError(f"unsupported element type {element_type}", cursor + 1)
            refs = fields[3 + n_tags:]
            if len(refs) != n_nodes:
                raise MshParseError(
                    f"element type {element_type} needs {n_nodes} nodes, got {len(refs)}", cursor + 1)

            if element_type == self.QUAD:
                raw_quads.append((cursor + 1, refs))
            elif element_type == self.TRIANGLE:
                skipped_triangles += 1
            cursor += 1

        if skipped_triangles:
            warnings.append(f"skipped {skipped_triangles} triangle element(s)")
        return self._expect_end(lines, cursor, "$EndElements")

    def _skip_section(self, lines: List[str], cursor: int, section: str) -> int:
        end = "$End" + section[1:]
        while cursor < len(lines):
            if lines[cursor].strip() == end:
                return cursor + 1
            cursor += 1
        raise MshParseError(f"section {section} is not closed by {end}")

    @staticmethod
    def _read_count(lines: List[str], cursor: int, section: str) -> int:
        try:
            count = int(lines[cursor].split()[0])
        except (IndexError, ValueError):
            raise MshParseError(f"missing entity count after {section}", cursor + 1)
        if count < 0:
            raise MshParseError(f"negative entity count in {section}", cursor + 1)
        return count

    @staticmethod
    def _expect_end(lines: List[str], cursor: int, marker: str) -> int:
        if cursor >= len(lines) or lines[cursor].strip() != marker:
            found = lines[cursor].strip() if cursor < len(lines) else "end of file"
            error = MshHeaderError if marker == "$EndMeshFormat" else MshParseError
            raise error(f"expected {marker}, found {found!r}", cursor + 1)
        return cursor + 1

    @staticmethod
    def _orient_ccw(nodes: np.ndarray, elements: np.ndarray, warnings: List[str]) -> np.ndarray:
        xy = nodes[elements]
        x, y = xy[..., 0], xy[..., 1]
        area2 = (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1)
        clockwise = area2 < 0
        if clockwise.any():
            elements = elements.copy()
            elements[clockwise] = elements[clockwise][:, [0, 3, 2, 1]]
            warnings.append(f"reoriented {int(clockwise.sum())} clockwise quad(s) to CCW")
        return elements


def write_msh(mesh: Mesh) -> str:
    """Serialise a mesh as MSH 2.2 ASCII with 1-based ids and z = 0"""
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_nodes)]
    out.extend(f"{i + 1} {x!r} {y!r} 0" for i, (x, y) in enumerate(mesh.nodes.tolist()))
    out.extend(["$EndNodes", "$Elements", str(mesh.n_elements)])
    out.extend(
        f"{q + 1} 3 2 0 1 {a + 1} {b + 1} {c + 1} {d + 1}"
        for q, (a, b, c, d) in enumerate(mesh.elements.tolist())
    )
    out.append("$EndElements")
    return "\n".join(out) + "\n"


# Singleton instance
msh_parser = MshParser()


def import_msh(text: str) -> Mesh:
    return msh_parser.parse(text)


def load_mesh(source: str) -> Tuple[Mesh, Optional[int]]:
    """
    Resolve a mesh source: "gen:N" generates the structured N x N mesh,
    anything else is read as an MSH file. Returns the mesh and N (None for files).
    """
    if source.startswith("gen:"):
        try:
            n = int(source[4:])
        except ValueError:
            raise ValueError(f"invalid generated mesh source {source!r}, expected gen:N")
        return generate_structured(n), n
    with open(source, "r") as handle:
        return import_msh(handle.read()), None
