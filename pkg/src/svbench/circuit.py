"""Layered circuit representation, device descriptions and compiled-circuit checks.

A circuit is a list of layers; each layer is a set of gates on disjoint qubits
and layers are compilation barriers.  Idle qubits are implicit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx

from . import gates as _gates
from .errors import CircuitParseError, CircuitStructureError


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[str, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name).lower())
        object.__setattr__(self, "qubits", tuple(str(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not self.qubits:
            raise CircuitStructureError(f"gate '{self.name}' acts on no qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitStructureError(f"gate '{self.name}' repeats a qubit: {self.qubits}")
        if not all(math.isfinite(p) for p in self.params):
            raise CircuitStructureError(f"gate '{self.name}' has a non-finite parameter")
        spec = _gates.GATE_SPECS.get(self.name)
        if spec is not None:
            if not spec.accepts(len(self.qubits)):
                raise CircuitStructureError(
                    f"gate '{self.name}' cannot act on {len(self.qubits)} qubits")
            if len(self.params) != spec.n_params:
                raise CircuitStructureError(
                    f"gate '{self.name}' takes {spec.n_params} parameters, got {len(self.params)}")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def matrix(self):
        return _gates.gate_matrix(self.name, self.arity, self.params)

    def inverse(self) -> "Gate":
        name, params = _gates.inverse(self.name, self.params)
        return Gate(name, self.qubits, params)

    def relabel(self, mapping: Mapping[str, str]) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.params)


@dataclass(frozen=True)
class Circuit:
    qubits: tuple[str, ...]
    layers: tuple[tuple[Gate, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(str(q) for q in self.qubits))
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in self.layers))
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitStructureError("duplicate qubit label in circuit")
        known = set(self.qubits)
        for j, layer in enumerate(self.layers):
            seen: set[str] = set()
            for g in layer:
                for q in g.qubits:
                    if q not in known:
                        raise CircuitStructureError(f"layer {j}: gate '{g.name}' uses undeclared qubit '{q}'")
                    if q in seen:
                        raise CircuitStructureError(f"layer {j}: qubit '{q}' appears in two gates")
                    seen.add(q)

    @property
    def width(self) -> int:
        return len(self.qubits)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @cached_property
    def index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.qubits)}

    def gates(self) -> Iterator[Gate]:
        for layer in self.layers:
            yield from layer

    def gate_count(self, name: str | None = None) -> int:
        return sum(1 for g in self.gates() if name is None or g.name == name)

    def active_qubits(self, j: int) -> set[str]:
        return {q for g in self.layers[j] for q in g.qubits}

    def inverse(self) -> "Circuit":
        return Circuit(self.qubits, [[g.inverse() for g in reversed(layer)] for layer in reversed(self.layers)])

    def relabel(self, mapping: Mapping[str, str]) -> "Circuit":
        return Circuit([mapping[q] for q in self.qubits],
                       [[g.relabel(mapping) for g in layer] for layer in self.layers])

    def __add__(self, other: "Circuit") -> "Circuit":
        qubits = list(self.qubits) + [q for q in other.qubits if q not in self.index]
        return Circuit(qubits, self.layers + other.layers)

    def to_dict(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "layers": [[_gate_to_dict(g) for g in layer] for layer in self.layers],
        }


def _gate_to_dict(g: Gate) -> dict:
    out: dict = {"g": g.name, "q": list(g.qubits)}
    if g.params:
        out["p"] = [float(p) for p in g.params]
    return out


def circuit_shape(c: Circuit) -> tuple[int, int, int]:
    """Width, depth and quop count; idle locations count as operations."""
    return c.width, c.depth, c.width * c.depth


def layerize(qubits: Sequence[str], gates: Iterable[Gate]) -> Circuit:
    """Pack a gate sequence into as-soon-as-possible layers.

    Each gate lands one layer after the latest layer already occupied by any
    of its qubits, so per-qubit gate order is preserved.
    """
    frontier = {q: 0 for q in qubits}
    layers: list[list[Gate]] = []
    for g in gates:
        j = max(frontier[q] for q in g.qubits)
        if j == len(layers):
            layers.append([])
        layers[j].append(g)
        for q in g.qubits:
            frontier[q] = j + 1
    return Circuit(qubits, layers)


@dataclass(frozen=True)
class DeviceModel:
    qubits: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    native_gates: tuple[tuple[str, int], ...] = (("rz", 1), ("sx", 1), ("cx", 2))

    def __post_init__(self):
        qubits = tuple(str(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise CircuitStructureError("duplicate qubit label in device")
        order = {q: i for i, q in enumerate(qubits)}
        edges = []
        for a, b in self.edges:
            a, b = str(a), str(b)
            if a not in order or b not in order:
                raise CircuitStructureError(f"edge ({a}, {b}) references an undeclared qubit")
            if a == b:
                raise CircuitStructureError(f"self-loop on qubit {a}")
            edges.append((a, b) if order[a] < order[b] else (b, a))
        if len(set(edges)) != len(edges):
            raise CircuitStructureError("duplicate device edge")
        native = tuple(sorted((str(n).lower(), int(k)) for n, k in self.native_gates))
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "edges", tuple(sorted(edges, key=lambda e: (order[e[0]], order[e[1]]))))
        object.__setattr__(self, "native_gates", native)

    @classmethod
    def line(cls, n: int, prefix: str = "Q", native=None) -> "DeviceModel":
        qubits = [f"{prefix}{i}" for i in range(n)]
        edges = [(qubits[i], qubits[i + 1]) for i in range(n - 1)]
        return cls(qubits, edges, native or cls.__dataclass_fields__["native_gates"].default)

    @classmethod
    def grid(cls, rows: int, cols: int, prefix: str = "Q", native=None) -> "DeviceModel":
        label = lambda r, c: f"{prefix}{r * cols + c}"
        qubits = [label(r, c) for r in range(rows) for c in range(cols)]
        edges = [(label(r, c), label(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
        edges += [(label(r, c), label(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
        return cls(qubits, edges, native or cls.__dataclass_fields__["native_gates"].default)

    @cached_property
    def native(self) -> dict[str, int]:
        return dict(self.native_gates)

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.qubits)
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def _adjacency(self) -> dict[str, tuple[str, ...]]:
        order = {q: i for i, q in enumerate(self.qubits)}
        return {q: tuple(sorted(self.graph.neighbors(q), key=order.__getitem__)) for q in self.qubits}

    def neighbors(self, q: str) -> tuple[str, ...]:
        return self._adjacency[q]

    def has_edge(self, a: str, b: str) -> bool:
        return self.graph.has_edge(a, b)

    def is_connected(self, subset: Iterable[str] | None = None) -> bool:
        nodes = list(self.qubits if subset is None else subset)
        if not nodes:
            return False
        return nx.is_connected(self.graph.subgraph(nodes))

    def to_dict(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "edges": [list(e) for e in self.edges],
            "native": [{"g": n, "arity": k} for n, k in self.native_gates],
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[tuple[int, Gate | None, str], ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_compiled(c: Circuit, dev: DeviceModel) -> ValidationReport:
    """Check that ``c`` only uses native gates on coupled device qubits.

    Qubits absent from the device are reported once with layer index -1.
    """
    violations: list[tuple[int, Gate | None, str]] = []
    device_qubits = set(dev.qubits)
    for q in c.qubits:
        if q not in device_qubits:
            violations.append((-1, None, f"unknown qubit '{q}'"))
    native = dev.native
    for j, layer in enumerate(c.layers):
        for g in layer:
            if g.name not in native:
                violations.append((j, g, "non-native gate"))
            elif native[g.name] != g.arity:
                violations.append((j, g, "arity mismatch"))
            if g.arity >= 2 and all(q in device_qubits for q in g.qubits):
                if g.arity == 2:
                    coupled = dev.has_edge(*g.qubits)
                else:
                    coupled = dev.is_connected(g.qubits)
                if not coupled:
                    violations.append((j, g, "uncoupled pair"))
    return ValidationReport(tuple(violations))


# --- serialization -------------------------------------------------------------


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, exc.lineno, exc.colno) from None


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise CircuitParseError(f"{where}: missing key '{key}'")
    return obj[key]


def circuit_from_dict(data) -> Circuit:
    qubits = _require(data, "qubits", "circuit")
    layers = _require(data, "layers", "circuit")
    if not isinstance(qubits, list) or not isinstance(layers, list):
        raise CircuitParseError("circuit: 'qubits' and 'layers' must be lists")
    parsed = []
    for j, layer in enumerate(layers):
        if not isinstance(layer, list):
            raise CircuitParseError(f"layers[{j}] is not a list")
        row = []
        for k, gd in enumerate(layer):
            where = f"layers[{j}][{k}]"
            name = _require(gd, "g", where)
            qs = _require(gd, "q", where)
            params = gd.get("p", [])
            if not isinstance(qs, list) or not isinstance(params, list):
                raise CircuitParseError(f"{where}: 'q' and 'p' must be lists")
            try:
                row.append(Gate(name, qs, params))
            except (TypeError, ValueError) as exc:
                if isinstance(exc, CircuitStructureError):
                    raise CircuitStructureError(f"{where}: {exc}") from None
                raise CircuitParseError(f"{where}: {exc}") from None
        parsed.append(row)
    return Circuit(qubits, parsed)


def parse_circuit(text: str) -> Circuit:
    return circuit_from_dict(_load_json(text))


def serialize_circuit(c: Circuit, indent: int | None = None) -> str:
    # float repr round-trips exactly, which is stronger than a fixed digit count
    return json.dumps(c.to_dict(), indent=indent)


def device_from_dict(data) -> DeviceModel:
    qubits = _require(data, "qubits", "device")
    edges = _require(data, "edges", "device")
    native = data.get("native")
    if native is None:
        native_pairs = DeviceModel.__dataclass_fields__["native_gates"].default
    else:
        native_pairs = [(_require(n, "g", "native"), _require(n, "arity", "native")) for n in native]
    try:
        return DeviceModel(qubits, [tuple(e) for e in edges], native_pairs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CircuitStructureError):
            raise
        raise CircuitParseError(f"device: {exc}") from None


def parse_device(text: str) -> DeviceModel:
    return device_from_dict(_load_json(text))


def serialize_device(dev: DeviceModel, indent: int | None = None) -> str:
    return json.dumps(dev.to_dict(), indent=indent)


def load_circuit(path) -> Circuit:
    with open(path) as fh:
        return parse_circuit(fh.read())


def load_device(path) -> DeviceModel:
    with open(path) as fh:
        return parse_device(fh.read())


def save_circuit(c: Circuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_circuit(c, indent=1))
        fh.write("\n")
