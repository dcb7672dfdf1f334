from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from svbench.circuit import Circuit, DeviceModel, Gate
from svbench.errors import EmbeddingError, ShapeError
from svbench.snip import (Shape, dropped_gate_fraction, equivalent_subsets, parse_shapes, restrict,
                          sample_layer_window, sample_qubit_subset, shape_grid, snip, snip_experiment)

from conftest import random_native_circuit


def _empty(depth, width=1):
    return Circuit([f"Q{i}" for i in range(width)], [[] for _ in range(depth)])


# --- shapes ----------------------------------------------------------------------------


def test_shape_parsing_and_grid():
    assert parse_shapes("2x4, 3X8") == [Shape(2, 4), Shape(3, 8)]
    assert str(Shape(2, 4)) == "2x4"
    assert Shape(3, 5).quops == 15
    assert shape_grid([1, 2], [2, 4]) == [Shape(1, 2), Shape(1, 4), Shape(2, 2), Shape(2, 4)]
    with pytest.raises(ValueError):
        Shape(0, 3)


# --- layer window ---------------------------------------------------------------------------


def test_full_depth_window_starts_at_zero():
    rng = np.random.default_rng(0)
    assert {sample_layer_window(_empty(6), 6, rng) for _ in range(50)} == {0}


@pytest.mark.parametrize("d_c,d", [(6, 5), (5, 1)])
def test_window_start_is_uniform(d_c, d):
    rng = np.random.default_rng(d_c * 10 + d)
    counts = Counter(sample_layer_window(_empty(d_c), d, rng) for _ in range(10_000))
    n = d_c - d + 1
    assert sorted(counts) == list(range(n))
    assert chisquare([counts[i] for i in range(n)]).pvalue > 0.01


def test_window_too_deep():
    with pytest.raises(ShapeError):
        sample_layer_window(_empty(3), 4, np.random.default_rng(0))


# --- qubit subset ------------------------------------------------------------------------------


def test_single_qubit_subset_is_uniform():
    dev = DeviceModel.line(4)
    rng = np.random.default_rng(1)
    counts = Counter(sample_qubit_subset(dev, dev.qubits, 1, rng) for _ in range(8000))
    assert len(counts) == 4
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_full_width_subset_is_forced():
    dev = DeviceModel.line(5)
    rng = np.random.default_rng(2)
    assert {sample_qubit_subset(dev, dev.qubits, 5, rng) for _ in range(50)} == {tuple(dev.qubits)}


def _growth_law(dev, eligible, w, mode="qubit"):
    """Exact subset probabilities of the growth process by enumeration."""
    pool = [q for q in dev.qubits if q in set(eligible)]
    law: Counter = Counter()

    def grow(inside, p):
        if len(inside) == w:
            law[tuple(q for q in dev.qubits if q in inside)] += p
            return
        if mode == "qubit":
            opts = [q for q in pool if q not in inside and any(n in inside for n in dev.neighbors(q))]
        else:
            opts = [q for q in pool if q not in inside for n in dev.neighbors(q) if n in inside]
        for q in opts:
            grow(inside | {q}, p / len(opts))

    for q in pool:
        grow({q}, 1 / len(pool))
    return law


def test_pair_law_on_three_line():
    dev = DeviceModel.line(3)
    law = _growth_law(dev, dev.qubits, 2)
    assert law == pytest.approx({("Q0", "Q1"): 0.5, ("Q1", "Q2"): 0.5})
    rng = np.random.default_rng(3)
    counts = Counter(sample_qubit_subset(dev, dev.qubits, 2, rng) for _ in range(10_000))
    assert ("Q0", "Q2") not in counts
    keys = sorted(law)
    assert chisquare([counts[k] for k in keys], [law[k] * 10_000 for k in keys]).pvalue > 0.01


@pytest.mark.parametrize("mode", ["qubit", "edge"])
def test_grid_law_matches_enumeration(mode):
    dev = DeviceModel.grid(2, 3)
    law = _growth_law(dev, dev.qubits, 3, mode)
    rng = np.random.default_rng(4)
    n = 20_000
    counts = Counter(sample_qubit_subset(dev, dev.qubits, 3, rng, mode) for _ in range(n))
    assert set(counts) <= set(law)
    keys = sorted(law)
    assert chisquare([counts[k] for k in keys], [law[k] * n for k in keys]).pvalue > 0.01


def test_edge_mode_differs_from_qubit_mode_on_grid():
    dev = DeviceModel.grid(2, 3)
    q, e = _growth_law(dev, dev.qubits, 4, "qubit"), _growth_law(dev, dev.qubits, 4, "edge")
    assert sum(q.values()) == pytest.approx(1.0) and sum(e.values()) == pytest.approx(1.0)
    assert any(abs(q[k] - e[k]) > 1e-6 for k in q)


def test_disconnected_eligible_set():
    dev = DeviceModel.line(4)
    with pytest.raises(ShapeError):
        sample_qubit_subset(dev, ["Q0", "Q2"], 2, np.random.default_rng(0))


# --- prototype subsets ----------------------------------------------------------------------------


def test_line_subsets_of_grid():
    subsets = equivalent_subsets(DeviceModel.grid(3, 3), DeviceModel.line(3))
    assert len(subsets) == 22
    assert all(len(m) == 3 for m in subsets)


def test_proto_equal_to_device_has_identity_map():
    dev = DeviceModel.line(4)
    (only,) = equivalent_subsets(dev, dev)
    assert all(a == b for a, b in only.items())


def test_prototype_larger_than_device():
    with pytest.raises(EmbeddingError):
        equivalent_subsets(DeviceModel.line(2), DeviceModel.line(3))


# --- snip ------------------------------------------------------------------------------------------


def test_whole_circuit_snippet_is_the_circuit(rng):
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 6, rng, labels=dev.qubits, edges=dev.edges)
    s = snip(c, dev, dev, Shape(4, 6), np.random.default_rng(0))
    assert s.circuit == c
    assert s.dropped_gates == 0 and dropped_gate_fraction(s) == 0.0


def test_width_one_keeps_only_single_qubit_gates(rng):
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 8, rng, p_cx=0.8, labels=dev.qubits, edges=dev.edges)
    for k in range(30):
        s = snip(c, dev, dev, Shape(1, 4), np.random.default_rng(k))
        assert all(g.arity == 1 for g in s.circuit.gates())
        (q,) = s.qubit_set
        window = c.layers[s.start_layer:s.start_layer + 4]
        n_cx = sum(1 for layer in window for g in layer if g.arity == 2 and q in g.qubits)
        assert s.dropped_gates == n_cx


def test_cx_only_width_one_drops_everything():
    dev = DeviceModel.line(2)
    c = Circuit(dev.qubits, [[Gate("cx", ["Q0", "Q1"])]] * 3)
    s = snip(c, dev, dev, Shape(1, 3), np.random.default_rng(0))
    assert dropped_gate_fraction(s) == 1.0


def test_dropped_fraction_quarter():
    dev = DeviceModel.line(3)
    cx01, cx12 = Gate("cx", ["Q0", "Q1"]), Gate("cx", ["Q1", "Q2"])
    c = Circuit(dev.qubits, [[cx01], [cx01], [cx12], [cx01]])
    layers, dropped, touching = restrict(c, 0, 4, ["Q0", "Q1"])
    assert (dropped, touching) == (1, 4)
    assert sum(len(layer) for layer in layers) == 3


def _hand_circuit():
    q = ["Q0", "Q1", "Q2", "Q3"]
    layers = [
        [Gate("sx", ["Q0"]), Gate("cx", ["Q1", "Q2"]), Gate("rz", ["Q3"], [0.1])],
        [Gate("cx", ["Q0", "Q1"]), Gate("cx", ["Q2", "Q3"])],
        [Gate("rz", ["Q1"], [0.2]), Gate("sx", ["Q2"])],
        [Gate("cx", ["Q1", "Q2"]), Gate("sx", ["Q3"])],
        [Gate("sx", ["Q0"]), Gate("cx", ["Q2", "Q3"])],
        [Gate("cx", ["Q0", "Q1"]), Gate("rz", ["Q2"], [0.3])],
    ]
    return Circuit(q, layers)


def _reference_snip(c, dev, shape, seed):
    """Straight-line re-derivation of the three sampling steps (proto = device)."""
    rng = np.random.default_rng(seed)
    start = int(rng.integers(c.depth - shape.d + 1))
    rng.integers(1)  # the only equivalent subset is the device itself
    pool = list(dev.qubits)
    chosen = {pool[int(rng.integers(len(pool)))]}
    while len(chosen) < shape.w:
        opts = [q for q in pool if q not in chosen and any(n in chosen for n in dev.neighbors(q))]
        chosen.add(opts[int(rng.integers(len(opts)))])
    layers, dropped = [], 0
    for layer in c.layers[start:start + shape.d]:
        kept = [g for g in layer if set(g.qubits) <= chosen]
        dropped += sum(1 for g in layer if set(g.qubits) & chosen and not set(g.qubits) <= chosen)
        layers.append(kept)
    return start, tuple(q for q in c.qubits if q in chosen), layers, dropped


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("shape", [Shape(2, 3), Shape(3, 2), Shape(1, 6)])
def test_snip_matches_hand_reference(seed, shape):
    c, dev = _hand_circuit(), DeviceModel.line(4)
    s = snip(c, dev, dev, shape, np.random.default_rng(seed))
    start, qubits, layers, dropped = _reference_snip(c, dev, shape, seed)
    assert (s.start_layer, s.qubit_set, s.dropped_gates) == (start, qubits, dropped)
    assert [list(layer) for layer in s.circuit.layers] == layers


def test_snippet_relabels_to_prototype():
    dev, proto = DeviceModel.grid(2, 3), DeviceModel.line(3)
    c = random_native_circuit(6, 5, np.random.default_rng(0), labels=dev.qubits, edges=dev.edges)
    for k in range(20):
        s = snip(c, dev, proto, Shape(2, 3), np.random.default_rng(k))
        assert set(s.circuit.qubits) <= set(proto.qubits)
        for g in s.circuit.gates():
            if g.arity == 2:
                assert proto.has_edge(*g.qubits)


def test_snippet_rejects_oversized_shape():
    dev = DeviceModel.line(3)
    with pytest.raises(ShapeError):
        snip(_empty(3, 3), dev, dev, Shape(4, 2), np.random.default_rng(0))
    with pytest.raises(ShapeError):
        snip(_empty(3, 3), dev, dev, Shape(2, 5), np.random.default_rng(0))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_structural_invariants(w, d, seed):
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 6, np.random.default_rng(seed), labels=dev.qubits, edges=dev.edges)
    s = snip(c, dev, dev, Shape(w, d), np.random.default_rng(seed))
    assert (s.circuit.width, s.circuit.depth) == (w, d)
    assert 0 <= s.start_layer <= c.depth - d
    assert 0 <= s.dropped_gates <= s.total_boundary_gates
    assert 0.0 <= dropped_gate_fraction(s) <= 1.0
    kept = sum(1 for _ in s.circuit.gates())
    assert kept + s.dropped_gates == s.total_boundary_gates


# --- experiments ----------------------------------------------------------------------------------------


def test_experiment_is_reproducible_and_worker_independent(rng):
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 10, rng, labels=dev.qubits, edges=dev.edges)
    shapes = shape_grid([1, 2, 3], [2, 5])
    a = snip_experiment(c, dev, dev, shapes, 4, seed=11)
    b = snip_experiment(c, dev, dev, shapes, 4, seed=11, workers=4)
    assert len(a) == 24
    assert [(sh, k, s.provenance(), s.circuit) for sh, k, s in a] == \
        [(sh, k, s.provenance(), s.circuit) for sh, k, s in b]
    other = snip_experiment(c, dev, dev, shapes, 4, seed=12)
    assert [s.provenance() for *_, s in a] != [s.provenance() for *_, s in other]
