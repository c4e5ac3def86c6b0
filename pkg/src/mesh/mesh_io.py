"""
Plain-text mesh format.

    tfem-mesh 1
    nodes <n>
    <x> <y>                     (n lines, 17 significant digits)
    elems <m>
    <a> <b> <c> <d>             (m lines, zero-based, counter-clockwise)
    nodeset <name> <k>
    <node>                      (k lines)
    edgeset <name> <k>
    <elem> <localEdge>          (k lines, edge i joins corner i to corner i+1 mod 4)

Everything after '#' on a line is a comment.
"""

import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

from mesh.quad_mesh import QuadMesh
from utils.errors import ParseError

HEADER = ('tfem-mesh', '1')

logger = logging.getLogger('mesh')


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def format_mesh(mesh: QuadMesh) -> str:
    """Render a mesh in the text format."""
    lines = [' '.join(HEADER), f"nodes {mesh.n_nodes}"]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in mesh.nodes]
    lines.append(f"elems {mesh.n_elems}")
    lines += [' '.join(str(int(n)) for n in row) for row in mesh.elems]
    for name in sorted(mesh.node_sets):
        ids = mesh.node_sets[name]
        lines.append(f"nodeset {name} {len(ids)}")
        lines += [str(int(i)) for i in ids]
    for name in sorted(mesh.edge_sets):
        pairs = mesh.edge_sets[name]
        lines.append(f"edgeset {name} {len(pairs)}")
        lines += [f"{int(e)} {int(le)}" for e, le in pairs]
    return '\n'.join(lines) + '\n'


def write_mesh(mesh: QuadMesh, path: Union[str, Path]) -> Path:
    """Write a mesh file; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_mesh(mesh))
    logger.info(f"Wrote mesh {path} ({mesh.n_elems} elements)")
    return path


def _records(text: str) -> Iterator[Tuple[int, List[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split('#', 1)[0].split()
        if tokens:
            yield lineno, tokens


class _Reader:
    def __init__(self, text: str):
        self._it = _records(text)
        self.line = 0

    def next(self, what: str) -> List[str]:
        try:
            self.line, tokens = next(self._it)
        except StopIteration:
            raise ParseError(self.line + 1, f"unexpected end of file, expected {what}")
        return tokens

    def rows(self, count: int, width: int, kind, what: str) -> List[List]:
        out = []
        for _ in range(count):
            tokens = self.next(what)
            if len(tokens) != width:
                raise ParseError(self.line, f"{what} record needs {width} values, got {len(tokens)}")
            try:
                out.append([kind(t) for t in tokens])
            except ValueError:
                raise ParseError(self.line, f"malformed {what} record: {' '.join(tokens)}")
        return out


def _count(reader: _Reader, tokens: List[str], keyword: str, width: int = 2) -> int:
    if len(tokens) != width or tokens[0] != keyword:
        raise ParseError(reader.line, f"expected '{keyword}' block header, got: {' '.join(tokens)}")
    try:
        count = int(tokens[-1])
    except ValueError:
        raise ParseError(reader.line, f"bad count in '{keyword}' header")
    if count < 0:
        raise ParseError(reader.line, f"negative count in '{keyword}' header")
    return count


def parse_mesh(text: str) -> QuadMesh:
    """
    Parse the text format.

    Raises:
        ParseError: malformed input, with the 1-based line number
        IndexOutOfRange: connectivity references a missing node
    """
    reader = _Reader(text)
    header = reader.next('header')
    if tuple(header) != HEADER:
        raise ParseError(reader.line, f"expected header '{' '.join(HEADER)}'")

    n = _count(reader, reader.next('nodes header'), 'nodes')
    nodes = reader.rows(n, 2, float, 'node')
    m = _count(reader, reader.next('elems header'), 'elems')
    elems = reader.rows(m, 4, int, 'element')

    node_sets, edge_sets = {}, {}
    while True:
        try:
            reader.line, tokens = next(reader._it)
        except StopIteration:
            break
        if tokens[0] == 'nodeset':
            k = _count(reader, tokens, 'nodeset', 3)
            node_sets[tokens[1]] = [r[0] for r in reader.rows(k, 1, int, 'nodeset')]
        elif tokens[0] == 'edgeset':
            k = _count(reader, tokens, 'edgeset', 3)
            edge_sets[tokens[1]] = reader.rows(k, 2, int, 'edgeset')
        else:
            raise ParseError(reader.line, f"unexpected record: {' '.join(tokens)}")

    return QuadMesh(
        nodes=np.array(nodes, dtype=float).reshape(-1, 2),
        elems=np.array(elems, dtype=np.int64).reshape(-1, 4),
        node_sets=node_sets,
        edge_sets=edge_sets,
    )


def read_mesh(path: Union[str, Path]) -> QuadMesh:
    """Read a mesh file."""
    path = Path(path)
    mesh = parse_mesh(path.read_text())
    logger.info(f"Read mesh {path} ({mesh.n_elems} elements)")
    return mesh
