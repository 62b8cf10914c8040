"""
Parsers module for cracbench
"""
from .msh_parser import (
    MshParser, msh_parser, import_msh, write_msh, load_mesh,
    MshParseError, MshHeaderError, MshNodeCountError, NonQuadMeshError, DanglingNodeError
)

__all__ = [
    'MshParser', 'msh_parser', 'import_msh', 'write_msh', 'load_mesh',
    'MshParseError', 'MshHeaderError', 'MshNodeCountError', 'NonQuadMeshError', 'DanglingNodeError'
]
