import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svbench import gates as G
from svbench.circuit import (Circuit, DeviceModel, Gate, circuit_shape, layerize, parse_circuit, parse_device,
                             serialize_circuit, serialize_device, validate_compiled)
from svbench.errors import CircuitParseError, CircuitStructureError, UnsupportedGateError

from conftest import random_native_circuit


# --- gates ------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["x", "y", "z", "h", "s", "sdg", "t", "tdg", "sx", "sxdg", "id"])
def test_fixed_gates_are_unitary_and_inverses_match(name):
    u = Gate(name, ["a"]).matrix()
    assert np.allclose(u.conj().T @ u, np.eye(2))
    assert np.allclose(Gate(name, ["a"]).inverse().matrix() @ u, np.eye(2))


def test_sx_squares_to_x():
    assert np.allclose(G.SX @ G.SX, G.X)


@pytest.mark.parametrize("name,params", [("rx", (0.3,)), ("ry", (-1.1,)), ("rz", (2.0,)), ("u3", (0.3, 0.4, 0.5))])
def test_parametrized_inverse(name, params):
    g = Gate(name, ["a"], params)
    assert np.allclose(g.inverse().matrix() @ g.matrix(), np.eye(2))


def test_controlled_gate_matrices():
    cx = Gate("cx", ["a", "b"]).matrix()
    assert np.allclose(cx, np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
    ccz = Gate("ccz", ["a", "b", "c"]).matrix()
    assert np.allclose(ccz, np.diag([1] * 7 + [-1]))
    mcry = Gate("mcry", ["a", "b", "c"], [0.4]).matrix()
    assert np.allclose(mcry[6:, 6:], G.ry(0.4)) and np.allclose(mcry[:6, :6], np.eye(6))


def test_swap_matrix_exchanges_qubits():
    sw = Gate("swap", ["a", "b"]).matrix()
    v = np.kron([1, 0], [0, 1])
    assert np.allclose(sw @ v, np.kron([0, 1], [1, 0]))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("cx", ["a", "a"])
    with pytest.raises(ValueError):
        Gate("cx", ["a"])
    with pytest.raises(ValueError):
        Gate("rz", ["a"])
    with pytest.raises(ValueError):
        Gate("rz", ["a"], [float("nan")])
    assert Gate("CX", ["a", "b"]).name == "cx"
    # unknown names are allowed as data; they only fail when a matrix is needed
    g = Gate("toffoli", ["a", "b", "c"])
    with pytest.raises(UnsupportedGateError):
        g.matrix()


# --- circuits ---------------------------------------------------------------------


def test_empty_circuit():
    c = parse_circuit('{"qubits": ["a", "b"], "layers": []}')
    assert (c.width, c.depth) == (2, 0)
    assert circuit_shape(c) == (2, 0, 0)


def test_single_cx_layer():
    c = parse_circuit('{"qubits": ["q0", "q1"], "layers": [[{"g": "cx", "q": ["q0", "q1"]}]]}')
    assert (c.width, c.depth) == (2, 1)


def test_idle_qubit_layer_round_trip():
    text = json.dumps({"qubits": ["a", "b"], "layers": [
        [{"g": "sx", "q": ["a"]}, {"g": "sx", "q": ["b"]}],
        [{"g": "rz", "q": ["a"], "p": [0.125]}],
        [{"g": "cx", "q": ["a", "b"]}]]})
    c = parse_circuit(text)
    assert c.depth == 3
    assert c.active_qubits(1) == {"a"}
    assert parse_circuit(serialize_circuit(c)) == c


def test_duplicate_qubit_in_layer_is_structural_error():
    text = '{"qubits": ["a", "b"], "layers": [[{"g": "sx", "q": ["a"]}, {"g": "rz", "q": ["a"], "p": [1]}]]}'
    with pytest.raises(CircuitStructureError):
        parse_circuit(text)


def test_malformed_json_reports_position():
    with pytest.raises(CircuitParseError) as info:
        parse_circuit('{"qubits": ["a"],\n "layers": [[}')
    assert info.value.line == 2
    assert "line 2" in str(info.value)


@pytest.mark.parametrize("w,d,quops", [(11, 1277, 14047), (21, 12090, 253890), (0, 5, 0), (4, 0, 0)])
def test_quops_count_idles(w, d, quops):
    c = Circuit([f"q{i}" for i in range(w)], [[] for _ in range(d)])
    assert circuit_shape(c) == (w, d, quops)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 6), st.integers(0, 2 ** 32 - 1))
def test_serialization_round_trip(n, d, seed):
    c = random_native_circuit(n, d, np.random.default_rng(seed))
    back = parse_circuit(serialize_circuit(c))
    assert back == c
    for g1, g2 in zip(c.gates(), back.gates()):
        assert np.allclose(g1.params, g2.params, atol=1e-12, rtol=0)


def test_inverse_circuit_undoes_it(rng):
    from svbench.statevector import circuit_unitary
    c = random_native_circuit(3, 5, rng)
    assert np.allclose(circuit_unitary(c + c.inverse()), np.eye(8))


# --- layerize ---------------------------------------------------------------------


def test_layerize_serial_and_parallel():
    serial = layerize(["a"], [Gate("sx", ["a"])] * 4)
    assert serial.depth == 4
    assert layerize(["a", "b"], [Gate("sx", ["a"]), Gate("sx", ["b"])]).depth == 1


def _brute_force_schedule(qubits, gates):
    # straight-line greedy scheduler: place each gate in the first layer after all
    # earlier gates sharing a qubit
    placed = []
    for k, g in enumerate(gates):
        layer = 0
        for j in range(k):
            if set(gates[j].qubits) & set(g.qubits):
                layer = max(layer, placed[j] + 1)
        placed.append(layer)
    return placed


def test_layerize_matches_brute_force_on_cx_chain():
    qs = ["q0", "q1", "q2", "q3"]
    gates = [Gate("cx", ["q0", "q1"]), Gate("cx", ["q2", "q3"]), Gate("cx", ["q1", "q2"]),
             Gate("cx", ["q0", "q1"]), Gate("cx", ["q2", "q3"]), Gate("sx", ["q0"]), Gate("cx", ["q1", "q2"])]
    c = layerize(qs, gates)
    expected = _brute_force_schedule(qs, gates)
    got = {}
    for j, layer in enumerate(c.layers):
        for g in layer:
            got.setdefault(g, []).append(j)
    positions = [got[g].pop(0) for g in gates]
    assert positions == expected
    assert c.depth == 4


# --- devices and validation -------------------------------------------------------


def test_device_validation():
    with pytest.raises(ValueError):
        DeviceModel(["a", "b"], [("a", "a")])
    with pytest.raises(ValueError):
        DeviceModel(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(ValueError):
        DeviceModel(["a"], [("a", "z")])


def test_device_round_trip():
    dev = DeviceModel.grid(2, 3)
    assert parse_device(serialize_device(dev)) == dev
    assert dev.neighbors("Q4") == ("Q1", "Q3", "Q5")


def test_uncoupled_pair_violation():
    dev = DeviceModel.line(3)
    c = Circuit(dev.qubits, [[Gate("cx", ["Q0", "Q2"])]])
    report = validate_compiled(c, dev)
    assert not report.ok
    assert [v[2] for v in report.violations] == ["uncoupled pair"]


def test_non_native_violation():
    dev = DeviceModel.line(3)
    c = Circuit(dev.qubits, [[Gate("toffoli", ["Q0", "Q1", "Q2"])]])
    assert "non-native gate" in [v[2] for v in validate_compiled(c, dev).violations]


def test_unknown_qubit_violation():
    dev = DeviceModel.line(2)
    c = Circuit(["Q0", "Z9"], [[Gate("sx", ["Z9"])]])
    report = validate_compiled(c, dev)
    assert report.violations[0][0] == -1 and "unknown qubit" in report.violations[0][2]


def test_native_circuit_is_ok(rng):
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 6, rng, labels=dev.qubits, edges=dev.edges)
    report = validate_compiled(c, dev)
    assert report.ok and report.violations == ()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_validation_is_monotone_under_native_additions(seed):
    rng = np.random.default_rng(seed)
    dev = DeviceModel.line(4)
    c = random_native_circuit(4, 3, rng, labels=dev.qubits, edges=dev.edges)
    extra = random_native_circuit(4, 2, rng, labels=dev.qubits, edges=dev.edges)
    assert validate_compiled(c + extra, dev).ok
