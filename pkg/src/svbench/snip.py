"""Sample shape-(w, d) snippets from a compiled target circuit.

A snippet is built in three steps: pick a contiguous window of d layers, pick
a subset of the device equivalent to the prototype, then grow a connected set
of w qubits inside it.  Multi-qubit gates that cross the boundary of the
chosen set are dropped and counted; single-qubit gates are never dropped.

Random draws happen in a fixed order (start layer, equivalent subset, seed
qubit, one draw per growth step over a frontier sorted in device order), so a
generator state fully determines the snippet.
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from .circuit import Circuit, DeviceModel
from .errors import EmbeddingError, ShapeError

NEIGHBOR_MODES = ("qubit", "edge")


@dataclass(frozen=True, order=True)
class Shape:
    w: int
    d: int

    def __post_init__(self):
        if int(self.w) < 1 or int(self.d) < 1:
            raise ShapeError(f"shape ({self.w}, {self.d}) must have w >= 1 and d >= 1")
        object.__setattr__(self, "w", int(self.w))
        object.__setattr__(self, "d", int(self.d))

    @property
    def quops(self) -> int:
        return self.w * self.d

    def __str__(self) -> str:
        return f"{self.w}x{self.d}"

    @classmethod
    def parse(cls, text: str) -> "Shape":
        m = re.fullmatch(r"\s*(\d+)\s*[xX,]\s*(\d+)\s*", text)
        if not m:
            raise ShapeError(f"cannot parse shape '{text}' (expected WxD)")
        return cls(int(m.group(1)), int(m.group(2)))


def parse_shapes(text: str) -> list[Shape]:
    return [Shape.parse(part) for part in text.split(",") if part.strip()]


def shape_grid(widths, depths) -> list[Shape]:
    return [Shape(w, d) for w in widths for d in depths]


@dataclass(frozen=True)
class Snippet:
    shape: Shape
    circuit: Circuit
    start_layer: int
    qubit_set: tuple[str, ...]
    dropped_gates: int
    total_boundary_gates: int
    relabeling: dict

    def provenance(self) -> dict:
        return {
            "w": self.shape.w,
            "d": self.shape.d,
            "start_layer": self.start_layer,
            "qubits": list(self.qubit_set),
            "relabeling": dict(self.relabeling),
            "dropped_gates": self.dropped_gates,
            "total_boundary_gates": self.total_boundary_gates,
            "dropped_fraction": dropped_gate_fraction(self),
        }


def sample_layer_window(c: Circuit, d: int, rng: np.random.Generator) -> int:
    """Uniform start index in ``0 .. depth(c) - d``."""
    if d < 1 or d > c.depth:
        raise ShapeError(f"window depth {d} does not fit circuit depth {c.depth}")
    return int(rng.integers(c.depth - d + 1))


def sample_qubit_subset(dev: DeviceModel, eligible, w: int, rng: np.random.Generator,
                        neighbor_mode: str = "qubit") -> tuple[str, ...]:
    """Grow a connected set of ``w`` eligible qubits from a uniform seed qubit.

    ``neighbor_mode="qubit"`` picks uniformly among distinct frontier qubits;
    ``"edge"`` picks uniformly among edges leaving the set, which favours
    qubits with several links into it.  The result is in device order.
    """
    if neighbor_mode not in NEIGHBOR_MODES:
        raise ValueError(f"neighbor_mode must be one of {NEIGHBOR_MODES}")
    eligible = set(eligible)
    pool = [q for q in dev.qubits if q in eligible]
    if w < 1 or w > len(pool):
        raise ShapeError(f"cannot choose {w} qubits from {len(pool)} eligible")
    chosen = [pool[int(rng.integers(len(pool)))]]
    inside = set(chosen)
    while len(chosen) < w:
        if neighbor_mode == "qubit":
            options = [q for q in pool if q not in inside and any(n in inside for n in dev.neighbors(q))]
        else:
            options = [q for q in pool if q not in inside for n in dev.neighbors(q) if n in inside]
        if not options:
            raise ShapeError(f"connected component of eligible qubits is smaller than {w}")
        nxt = options[int(rng.integers(len(options)))]
        chosen.append(nxt)
        inside.add(nxt)
    return tuple(q for q in dev.qubits if q in inside)


@lru_cache(maxsize=64)
def equivalent_subsets(dev: DeviceModel, proto: DeviceModel) -> tuple[dict, ...]:
    """One map device->prototype per device subset equivalent to ``proto``.

    Equivalence means an induced-subgraph isomorphism of the coupling graphs
    plus native-gate coverage.  When a subset admits several maps the
    label-preserving one is preferred, then the first in enumeration order.
    Subsets are returned sorted by their device-order qubit tuples.
    """
    missing = {g: a for g, a in dev.native.items() if proto.native.get(g) != a}
    if missing:
        raise EmbeddingError(f"prototype lacks native gates {sorted(missing)}")
    if len(proto.qubits) > len(dev.qubits):
        raise EmbeddingError("prototype has more qubits than the device")
    order = {q: i for i, q in enumerate(dev.qubits)}
    best: dict[tuple[str, ...], dict] = {}
    for iso in GraphMatcher(dev.graph, proto.graph).subgraph_isomorphisms_iter():
        key = tuple(sorted(iso, key=order.__getitem__))
        identity = all(a == b for a, b in iso.items())
        if key not in best or identity:
            best[key] = dict(sorted(iso.items(), key=lambda kv: order[kv[0]]))
    if not best:
        raise EmbeddingError("no device subset is equivalent to the prototype")
    return tuple(best[k] for k in sorted(best, key=lambda k: [order[q] for q in k]))


def restrict(c: Circuit, start: int, d: int, qubits) -> tuple[list[list], int, int]:
    """Layers of the window kept on ``qubits`` plus (dropped, touching) gate counts."""
    keep = set(qubits)
    layers, dropped, touching = [], 0, 0
    for layer in c.layers[start:start + d]:
        kept = []
        for g in layer:
            inside = [q in keep for q in g.qubits]
            if not any(inside):
                continue
            touching += 1
            if all(inside):
                kept.append(g)
            else:
                dropped += 1
        layers.append(kept)
    return layers, dropped, touching


def snip(c: Circuit, dev: DeviceModel, proto: DeviceModel, shape: Shape, rng: np.random.Generator,
         neighbor_mode: str = "qubit") -> Snippet:
    if shape.d > c.depth:
        raise ShapeError(f"shape {shape} deeper than target depth {c.depth}")
    if shape.w > c.width or shape.w > len(proto.qubits):
        raise ShapeError(f"shape {shape} wider than target ({c.width}) or prototype ({len(proto.qubits)})")
    stray = [q for q in c.qubits if q not in set(dev.qubits)]
    if stray:
        raise EmbeddingError(f"target uses qubits missing from the device: {stray[:5]}")
    subsets = equivalent_subsets(dev, proto)
    start = sample_layer_window(c, shape.d, rng)
    mapping = subsets[int(rng.integers(len(subsets)))]
    eligible = [q for q in mapping if q in c.index]
    chosen = sample_qubit_subset(dev, eligible, shape.w, rng, neighbor_mode)
    ordered = tuple(q for q in c.qubits if q in set(chosen))
    layers, dropped, touching = restrict(c, start, shape.d, ordered)
    relabel = {q: mapping[q] for q in ordered}
    body = Circuit(ordered, layers).relabel(relabel)
    return Snippet(shape, body, start, ordered, dropped, touching, relabel)


def dropped_gate_fraction(s: Snippet) -> float:
    return s.dropped_gates / s.total_boundary_gates if s.total_boundary_gates else 0.0


def snippet_rng(seed: int, shape: Shape, k: int) -> np.random.Generator:
    """Generator for snippet ``k`` of ``shape``; independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(shape.w, shape.d, k)))


def snip_experiment(c: Circuit, dev: DeviceModel, proto: DeviceModel, shapes, K: int, seed: int,
                    neighbor_mode: str = "qubit", workers: int | None = None) -> list[tuple[Shape, int, Snippet]]:
    """K snippets per shape, each from its own derived generator.

    Results are listed by shape then k and do not depend on ``workers``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    equivalent_subsets(dev, proto)  # fail fast and warm the cache before threading
    jobs = [(Shape(s.w, s.d), k) for s in shapes for k in range(K)]

    def work(job):
        shape, k = job
        return shape, k, snip(c, dev, proto, shape, snippet_rng(seed, shape, k), neighbor_mode)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(work, jobs))
    return [work(j) for j in jobs]
