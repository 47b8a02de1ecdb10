from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray

from pypctta.exceptions import ParseError, UnsupportedFormat

_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "i2",
    "int16": "i2",
    "ushort": "u2",
    "uint16": "u2",
    "int": "i4",
    "int32": "i4",
    "uint": "u4",
    "uint32": "u4",
    "float": "f4",
    "float32": "f4",
    "double": "f8",
    "float64": "f8",
}


@dataclass
class PlyProperty:
    name: str
    dtype: str
    count_dtype: str | None = None
    """Dtype of the item count of a list property, None for scalars."""

    @property
    def is_list(self) -> bool:
        return self.count_dtype is not None


@dataclass
class PlyElement:
    name: str
    count: int
    properties: List[PlyProperty] = field(default_factory=list)

    def scalar_dtype(self) -> np.dtype:
        return np.dtype([(p.name, "<" + p.dtype) for p in self.properties])


@dataclass
class PlyData:
    """Parsed PLY content: scalar element columns and list properties."""

    columns: Dict[str, Dict[str, NDArray]]
    lists: Dict[str, Dict[str, List[NDArray[np.int64]]]]


def _type(token: str, path: str, line: int) -> str:
    try:
        return _TYPES[token]
    except KeyError:
        raise ParseError(f"Unknown PLY property type '{token}'.", path=path, line=line)


def _parse_header(data: bytes, path: str) -> Tuple[str, List[PlyElement], int]:
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise ParseError(
            "Not a PLY file (missing 'ply' or 'end_header').", path=path, line=1
        )
    newline = data.find(b"\n", end)
    body_offset = len(data) if newline < 0 else newline + 1

    fmt = ""
    elements: List[PlyElement] = []
    lines = data[:end].decode("ascii", errors="replace").splitlines()
    for number, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        if tokens[0] == "format" and len(tokens) >= 2:
            fmt = tokens[1]
            if fmt == "binary_big_endian":
                raise UnsupportedFormat(
                    f"{path}: big-endian binary PLY is not supported."
                )
            if fmt not in ("ascii", "binary_little_endian"):
                raise ParseError(f"Unknown PLY format '{fmt}'.", path=path, line=number)
        elif tokens[0] == "element" and len(tokens) == 3:
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError(
                    f"Invalid element count '{tokens[2]}'.", path=path, line=number
                )
            elements.append(PlyElement(tokens[1], count))
        elif tokens[0] == "property" and elements:
            if len(tokens) == 5 and tokens[1] == "list":
                elements[-1].properties.append(
                    PlyProperty(
                        tokens[4],
                        _type(tokens[3], path, number),
                        _type(tokens[2], path, number),
                    )
                )
            elif len(tokens) == 3:
                elements[-1].properties.append(
                    PlyProperty(tokens[2], _type(tokens[1], path, number))
                )
            else:
                raise ParseError(
                    f"Malformed property line '{raw}'.", path=path, line=number
                )
        else:
            raise ParseError(f"Unexpected header line '{raw}'.", path=path, line=number)
    if not fmt:
        raise ParseError("PLY header has no format line.", path=path)
    return fmt, elements, body_offset


def _parse_ascii(
    text: str, elements: List[PlyElement], path: str, first_line: int
) -> PlyData:
    rows = [
        (i, line.split()) for i, line in enumerate(text.splitlines(), start=first_line)
    ]
    rows = [(i, tokens) for i, tokens in rows if tokens]
    position = 0
    columns: Dict[str, Dict[str, NDArray]] = {}
    lists: Dict[str, Dict[str, List[NDArray[np.int64]]]] = {}

    for element in elements:
        values: Dict[str, list] = {p.name: [] for p in element.properties}
        for _ in range(element.count):
            if position >= len(rows):
                raise ParseError(
                    f"Unexpected end of file in element '{element.name}'.", path=path
                )
            line, tokens = rows[position]
            position += 1
            cursor = 0
            try:
                for prop in element.properties:
                    if prop.is_list:
                        count = int(tokens[cursor])
                        items = tokens[cursor + 1 : cursor + 1 + count]
                        if len(items) != count:
                            raise IndexError
                        entry = np.array([int(t) for t in items], dtype=np.int64)
                        values[prop.name].append(entry)
                        cursor += 1 + count
                    else:
                        token = tokens[cursor]
                        values[prop.name].append(
                            float(token) if prop.dtype.startswith("f") else int(token)
                        )
                        cursor += 1
            except (ValueError, IndexError):
                raise ParseError(
                    f"Invalid or missing value in element '{element.name}'.",
                    path=path,
                    line=line,
                )
            if cursor != len(tokens):
                raise ParseError(
                    f"Too many values in element '{element.name}'.", path=path, line=line
                )
        columns[element.name] = {
            p.name: np.asarray(values[p.name], dtype=np.float64)
            for p in element.properties
            if not p.is_list
        }
        lists[element.name] = {
            p.name: values[p.name] for p in element.properties if p.is_list
        }
    return PlyData(columns, lists)


def _parse_binary(
    data: bytes, elements: List[PlyElement], path: str, offset: int
) -> PlyData:
    columns: Dict[str, Dict[str, NDArray]] = {}
    lists: Dict[str, Dict[str, List[NDArray[np.int64]]]] = {}

    def take(dtype: str, count: int) -> NDArray:
        nonlocal offset
        size = np.dtype(dtype).itemsize * count
        if offset + size > len(data):
            raise ParseError(
                "Unexpected end of binary PLY data.", path=path, offset=offset
            )
        values = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        offset += size
        return values

    for element in elements:
        if not any(p.is_list for p in element.properties):
            table = take(element.scalar_dtype(), element.count)
            columns[element.name] = {
                p.name: table[p.name].astype(np.float64) for p in element.properties
            }
            lists[element.name] = {}
            continue

        scalars: Dict[str, list] = {
            p.name: [] for p in element.properties if not p.is_list
        }
        items: Dict[str, List[NDArray[np.int64]]] = {
            p.name: [] for p in element.properties if p.is_list
        }
        for _ in range(element.count):
            for prop in element.properties:
                if prop.is_list:
                    (count,) = take("<" + str(prop.count_dtype), 1)
                    entries = take("<" + prop.dtype, int(count)).astype(np.int64)
                    items[prop.name].append(entries)
                else:
                    scalars[prop.name].append(take("<" + prop.dtype, 1)[0])
        columns[element.name] = {
            name: np.asarray(values, dtype=np.float64)
            for name, values in scalars.items()
        }
        lists[element.name] = items

    if offset != len(data):
        raise ParseError(
            f"{len(data) - offset} trailing bytes after the last element.",
            path=path,
            offset=offset,
        )
    return PlyData(columns, lists)


def read_ply(path: Path) -> PlyData:
    """Parses an ascii or binary little-endian PLY file."""
    data = path.read_bytes()
    fmt, elements, body_offset = _parse_header(data, str(path))
    if fmt == "ascii":
        header_lines = data[:body_offset].count(b"\n")
        text = data[body_offset:].decode("ascii", errors="replace")
        return _parse_ascii(text, elements, str(path), header_lines + 1)
    return _parse_binary(data, elements, str(path), body_offset)


def header(fmt: str, elements: List[Tuple[str, int, List[str]]]) -> bytes:
    """Builds a PLY header from (element name, count, property lines)."""
    lines = ["ply", f"format {fmt} 1.0", "comment written by py-pctta"]
    for name, count, properties in elements:
        lines.append(f"element {name} {count}")
        lines.extend(f"property {p}" for p in properties)
    lines.append("end_header")
    return ("\n".join(lines) + "\n").encode("ascii")
