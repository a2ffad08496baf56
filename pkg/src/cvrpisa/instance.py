"""CVRPLib / TSPLIB instance parsing and distance computation."""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

SUPPORTED_EDGE_WEIGHT_TYPES = ("EUC_2D", "EXPLICIT")
MATRIX_FORMATS = ("FULL_MATRIX", "LOWER_ROW", "LOWER_DIAG_ROW", "UPPER_ROW", "UPPER_DIAG_ROW")

_SECTIONS = (
    "NODE_COORD_SECTION",
    "EDGE_WEIGHT_SECTION",
    "DEMAND_SECTION",
    "DEPOT_SECTION",
    "DISPLAY_DATA_SECTION",
)


class InstanceFormatError(ValueError):
    """Base class for everything the parser rejects."""


class MissingSection(InstanceFormatError):
    pass


class MalformedNumber(InstanceFormatError):
    pass


class DimensionMismatch(InstanceFormatError):
    pass


class UnsupportedEdgeWeightType(InstanceFormatError):
    pass


class InvalidInstance(InstanceFormatError):
    """The document parsed but violates a CVRP invariant."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """A parsed CVRP instance.

    Nodes are indexed from 0 in file order; ``depot_index`` is 0-based.
    ``coords`` is ``None`` for EXPLICIT instances that carry no display data.
    """

    name: str
    dimension: int
    capacity: int
    depot_index: int
    demands: np.ndarray
    edge_weight_type: str
    coords: np.ndarray | None = None
    explicit_matrix: np.ndarray | None = None
    comment: str = field(default="", compare=False)

    def __post_init__(self):
        demands = _frozen(np.asarray(self.demands, dtype=np.int64).copy())
        object.__setattr__(self, "demands", demands)
        if self.coords is not None:
            coords = np.asarray(self.coords, dtype=float).reshape(-1, 2).copy()
            object.__setattr__(self, "coords", _frozen(coords))
        if self.explicit_matrix is not None:
            m = np.asarray(self.explicit_matrix, dtype=float).copy()
            object.__setattr__(self, "explicit_matrix", _frozen(m))
        self._validate()

    def _validate(self):
        n = self.dimension
        if n < 2:
            raise InvalidInstance(f"{self.name}: DIMENSION must be at least 2, got {n}")
        if self.capacity <= 0:
            raise InvalidInstance(f"{self.name}: CAPACITY must be positive")
        if not 0 <= self.depot_index < n:
            raise InvalidInstance(f"{self.name}: depot {self.depot_index + 1} out of range")
        if self.edge_weight_type not in SUPPORTED_EDGE_WEIGHT_TYPES:
            raise UnsupportedEdgeWeightType(self.edge_weight_type)
        if self.demands.shape != (n,):
            raise DimensionMismatch(f"{self.name}: {self.demands.size} demands for DIMENSION {n}")
        if (self.demands < 0).any():
            raise InvalidInstance(f"{self.name}: negative demand")
        if self.demands[self.depot_index] != 0:
            raise InvalidInstance(f"{self.name}: depot demand must be 0")
        if self.demands.max() > self.capacity:
            raise InvalidInstance(f"{self.name}: a customer demand exceeds CAPACITY")
        if self.coords is not None:
            if self.coords.shape != (n, 2):
                raise DimensionMismatch(f"{self.name}: {len(self.coords)} coordinates for DIMENSION {n}")
            if not np.isfinite(self.coords).all():
                raise MalformedNumber(f"{self.name}: non-finite coordinate")
        if self.edge_weight_type == "EUC_2D" and self.coords is None:
            raise MissingSection(f"{self.name}: EUC_2D requires NODE_COORD_SECTION")
        if self.edge_weight_type == "EXPLICIT":
            m = self.explicit_matrix
            if m is None:
                raise MissingSection(f"{self.name}: EXPLICIT requires EDGE_WEIGHT_SECTION")
            if m.shape != (n, n):
                raise DimensionMismatch(f"{self.name}: matrix shape {m.shape} for DIMENSION {n}")
            if not np.isfinite(m).all() or (m < 0).any():
                raise InvalidInstance(f"{self.name}: edge weights must be finite and non-negative")
            if not np.array_equal(m, m.T):
                raise InvalidInstance(f"{self.name}: explicit matrix is not symmetric")
            if np.any(np.diag(m) != 0):
                raise InvalidInstance(f"{self.name}: explicit matrix has a non-zero diagonal")

    @property
    def n_customers(self) -> int:
        return self.dimension - 1

    @property
    def customer_indices(self) -> np.ndarray:
        return np.delete(np.arange(self.dimension), self.depot_index)

    @property
    def has_coords(self) -> bool:
        return self.coords is not None

    @property
    def total_demand(self) -> int:
        return int(self.demands.sum())

    @property
    def min_vehicles(self) -> int:
        """Lower bound on the number of routes, ceil(total demand / capacity)."""
        return max(1, -(-self.total_demand // self.capacity))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.dimension == other.dimension
            and self.capacity == other.capacity
            and self.depot_index == other.depot_index
            and self.edge_weight_type == other.edge_weight_type
            and np.array_equal(self.demands, other.demands)
            and _opt_equal(self.coords, other.coords)
            and _opt_equal(self.explicit_matrix, other.explicit_matrix)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"Instance(name={self.name!r}, dimension={self.dimension}, "
            f"capacity={self.capacity}, edge_weight_type={self.edge_weight_type!r})"
        )


def _opt_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


def _to_float(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MalformedNumber(f"{where}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(v):
        raise MalformedNumber(f"{where}: non-finite value {tok!r}")
    return v


def _to_int(tok: str, where: str) -> int:
    v = _to_float(tok, where)
    if v != int(v):
        raise MalformedNumber(f"{where}: expected an integer, got {tok!r}")
    return int(v)


_HEADER = re.compile(r"^\s*([A-Z_0-9]+)\s*:\s*(.*?)\s*$", re.IGNORECASE)


def parse_instance(source: TextIO | str) -> Instance:
    """Parse a CVRPLib/TSPLIB document.

    ``source`` is a text stream or the document itself as a string.
    """
    text = source if isinstance(source, str) else source.read()
    lines = text.splitlines()

    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word = line.split(":", 1)[0].split()[0].upper()
        if word == "EOF":
            break
        if word in _SECTIONS:
            current = sections.setdefault(word, [])
            continue
        if word.endswith("_SECTION"):
            raise InstanceFormatError(f"unsupported section {word}")
        m = _HEADER.match(line)
        if m and ":" in line and not _looks_numeric(word):
            header[m.group(1).upper()] = m.group(2)
            current = None
            continue
        if current is None:
            raise InstanceFormatError(f"unexpected line outside any section: {line!r}")
        current.extend(line.split())

    for key in ("DIMENSION", "CAPACITY", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise MissingSection(f"missing header {key}")
    name = header.get("NAME", "unnamed")
    n = _to_int(header["DIMENSION"], "DIMENSION")
    capacity = _to_int(header["CAPACITY"], "CAPACITY")
    ewt = header["EDGE_WEIGHT_TYPE"].upper()
    if ewt not in SUPPORTED_EDGE_WEIGHT_TYPES:
        raise UnsupportedEdgeWeightType(f"EDGE_WEIGHT_TYPE {ewt} is not supported")
    if n < 2:
        raise InvalidInstance(f"DIMENSION must be at least 2, got {n}")

    if "DEMAND_SECTION" not in sections:
        raise MissingSection("missing DEMAND_SECTION")
    demands = _indexed_rows(sections["DEMAND_SECTION"], n, 1, "DEMAND_SECTION")
    demands = [_to_int(row[0], "DEMAND_SECTION") for row in demands]

    coords = None
    coord_key = "NODE_COORD_SECTION" if "NODE_COORD_SECTION" in sections else None
    if coord_key is None and "DISPLAY_DATA_SECTION" in sections:
        coord_key = "DISPLAY_DATA_SECTION"
    if coord_key is not None:
        rows = _indexed_rows(sections[coord_key], n, 2, coord_key)
        coords = np.array([[_to_float(t, coord_key) for t in row] for row in rows])

    matrix = None
    if ewt == "EXPLICIT":
        if "EDGE_WEIGHT_SECTION" not in sections:
            raise MissingSection("EXPLICIT instance without EDGE_WEIGHT_SECTION")
        fmt = header.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX").upper()
        values = [_to_float(t, "EDGE_WEIGHT_SECTION") for t in sections["EDGE_WEIGHT_SECTION"]]
        matrix = _expand_matrix(values, n, fmt)
    elif "NODE_COORD_SECTION" not in sections:
        raise MissingSection("EUC_2D instance without NODE_COORD_SECTION")

    depot = 0
    if "DEPOT_SECTION" in sections:
        ids = [_to_int(t, "DEPOT_SECTION") for t in sections["DEPOT_SECTION"]]
        ids = [i for i in ids if i != -1]
        if len(ids) != 1:
            raise InvalidInstance(f"expected exactly one depot, got {len(ids)}")
        depot = ids[0] - 1

    return Instance(
        name=name,
        dimension=n,
        capacity=capacity,
        depot_index=depot,
        demands=np.array(demands),
        edge_weight_type=ewt,
        coords=coords,
        explicit_matrix=matrix,
        comment=header.get("COMMENT", ""),
    )


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _indexed_rows(tokens: list[str], n: int, width: int, where: str) -> list[list[str]]:
    """Split ``id v1 .. v_width`` records and order them by node id."""
    if len(tokens) % (width + 1):
        raise DimensionMismatch(f"{where}: {len(tokens)} tokens do not form rows of {width + 1}")
    count = len(tokens) // (width + 1)
    if count != n:
        raise DimensionMismatch(f"{where}: {count} entries for DIMENSION {n}")
    out: list[list[str] | None] = [None] * n
    for k in range(count):
        rec = tokens[k * (width + 1): (k + 1) * (width + 1)]
        node = _to_int(rec[0], where)
        if not 1 <= node <= n or out[node - 1] is not None:
            raise InstanceFormatError(f"{where}: bad or repeated node id {node}")
        out[node - 1] = rec[1:]
    return out  # type: ignore[return-value]


def _expand_matrix(values: list[float], n: int, fmt: str) -> np.ndarray:
    if fmt == "FULL_MATRIX":
        if len(values) != n * n:
            raise DimensionMismatch(f"FULL_MATRIX needs {n * n} weights, got {len(values)}")
        return np.array(values).reshape(n, n)
    # numpy's triangle indices enumerate row-major, matching TSPLIB's *_ROW layouts
    triangles = {
        "LOWER_ROW": np.tril_indices(n, -1),
        "LOWER_DIAG_ROW": np.tril_indices(n),
        "UPPER_ROW": np.triu_indices(n, 1),
        "UPPER_DIAG_ROW": np.triu_indices(n),
    }
    if fmt not in triangles:
        raise UnsupportedEdgeWeightType(f"EDGE_WEIGHT_FORMAT {fmt} is not supported")
    idx = triangles[fmt]
    if len(values) != len(idx[0]):
        raise DimensionMismatch(f"{fmt} needs {len(idx[0])} weights, got {len(values)}")
    m = np.zeros((n, n))
    m[idx] = values
    return m + m.T - np.diag(np.diag(m))


def read_instance(path: str | Path) -> Instance:
    with open(path, encoding="ascii", errors="replace") as fh:
        return parse_instance(fh)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_instance(inst: Instance) -> str:
    """Serialize an instance back to CVRPLib text (inverse of ``parse_instance``)."""
    out = io.StringIO()
    out.write(f"NAME : {inst.name}\n")
    if inst.comment:
        out.write(f"COMMENT : {inst.comment}\n")
    out.write("TYPE : CVRP\n")
    out.write(f"DIMENSION : {inst.dimension}\n")
    out.write(f"EDGE_WEIGHT_TYPE : {inst.edge_weight_type}\n")
    if inst.edge_weight_type == "EXPLICIT":
        out.write("EDGE_WEIGHT_FORMAT : FULL_MATRIX\n")
    out.write(f"CAPACITY : {inst.capacity}\n")
    if inst.edge_weight_type == "EXPLICIT":
        out.write("EDGE_WEIGHT_SECTION\n")
        for row in inst.explicit_matrix:
            out.write(" ".join(_num(v) for v in row) + "\n")
    if inst.coords is not None:
        key = "NODE_COORD_SECTION" if inst.edge_weight_type == "EUC_2D" else "DISPLAY_DATA_SECTION"
        out.write(key + "\n")
        for i, (x, y) in enumerate(inst.coords, start=1):
            out.write(f"{i} {_num(x)} {_num(y)}\n")
    out.write("DEMAND_SECTION\n")
    for i, d in enumerate(inst.demands, start=1):
        out.write(f"{i} {int(d)}\n")
    out.write(f"DEPOT_SECTION\n{inst.depot_index + 1}\n-1\nEOF\n")
    return out.getvalue()


def nint(x):
    """TSPLIB nearest-integer rounding: halves round up, unlike ``round``."""
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def euclidean_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def distance_matrix(inst: Instance) -> np.ndarray:
    """Full symmetric distance matrix: rounded Euclidean for EUC_2D, the file's weights for EXPLICIT.

    The returned array is read-only.
    """
    if inst.edge_weight_type == "EXPLICIT":
        d = inst.explicit_matrix.copy()
    else:
        d = nint(euclidean_matrix(inst.coords))
    np.fill_diagonal(d, 0.0)
    return _frozen(d)
