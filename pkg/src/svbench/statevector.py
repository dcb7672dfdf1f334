"""Dense statevector evolution for small circuits.

States are tensors of shape ``(2,) * n + batch`` so a batch of columns can be
pushed through a circuit at once; qubit 0 is the most significant bit.
"""
from __future__ import annotations

import numpy as np

from .circuit import Circuit, Gate
from .errors import CapacityError

MAX_DENSE_QUBITS = 20


def apply_matrix(state: np.ndarray, mat: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    k = len(axes)
    op = mat.reshape((2,) * (2 * k))
    out = np.tensordot(op, state, axes=(tuple(range(k, 2 * k)), axes))
    return np.moveaxis(out, tuple(range(k)), axes)


def apply_gate(state: np.ndarray, gate: Gate, index: dict[str, int]) -> np.ndarray:
    return apply_matrix(state, gate.matrix(), tuple(index[q] for q in gate.qubits))


def apply_circuit(c: Circuit, state: np.ndarray) -> np.ndarray:
    """Evolve a ``(2,)*n + batch`` tensor through every layer of ``c``."""
    index = c.index
    for layer in c.layers:
        for g in layer:
            state = apply_gate(state, g, index)
    return state


def basis_columns(n: int, columns=None) -> np.ndarray:
    dim = 1 << n
    cols = np.arange(dim) if columns is None else np.asarray(columns)
    out = np.zeros((dim, len(cols)), dtype=complex)
    out[cols, np.arange(len(cols))] = 1.0
    return out.reshape((2,) * n + (len(cols),))


def circuit_unitary(c: Circuit, max_qubits: int = 12) -> np.ndarray:
    if c.width > max_qubits:
        raise CapacityError(f"dense unitary of {c.width} qubits exceeds limit {max_qubits}")
    dim = 1 << c.width
    out = apply_circuit(c, basis_columns(c.width))
    return out.reshape(dim, dim)


def evolve(c: Circuit, vectors: np.ndarray) -> np.ndarray:
    """Apply ``c`` to state vectors given as columns of a ``(2**n, batch)`` array."""
    if c.width > MAX_DENSE_QUBITS:
        raise CapacityError(f"statevector of {c.width} qubits exceeds limit {MAX_DENSE_QUBITS}")
    dim = 1 << c.width
    batch = vectors.shape[1]
    out = apply_circuit(c, vectors.reshape((2,) * c.width + (batch,)))
    return out.reshape(dim, batch)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """Max-abs difference between ``a`` and ``b`` after removing the best global phase."""
    overlap = np.vdot(a, b)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(a * phase - b)))


def random_states(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure states as the columns of a ``(dim, count)`` array."""
    v = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    return v / np.linalg.norm(v, axis=0)
