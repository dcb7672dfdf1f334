"""Gate vocabulary: arities, parameter counts, unitaries and adjoints.

Multi-qubit controlled gates list their controls first and the target last.
Matrices use the gate's own qubit order with the first qubit as the most
significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedGateError


@dataclass(frozen=True)
class GateSpec:
    min_arity: int
    max_arity: int | None
    n_params: int

    def accepts(self, arity: int) -> bool:
        if arity < self.min_arity:
            return False
        return self.max_arity is None or arity <= self.max_arity


def _fixed(arity, n_params=0):
    return GateSpec(arity, arity, n_params)


GATE_SPECS: dict[str, GateSpec] = {
    "id": _fixed(1),
    "x": _fixed(1),
    "y": _fixed(1),
    "z": _fixed(1),
    "h": _fixed(1),
    "s": _fixed(1),
    "sdg": _fixed(1),
    "t": _fixed(1),
    "tdg": _fixed(1),
    "sx": _fixed(1),
    "sxdg": _fixed(1),
    "rx": _fixed(1, 1),
    "ry": _fixed(1, 1),
    "rz": _fixed(1, 1),
    "u3": _fixed(1, 3),
    "cx": _fixed(2),
    "cy": _fixed(2),
    "cz": _fixed(2),
    "swap": _fixed(2),
    "ccx": _fixed(3),
    "ccz": _fixed(3),
    "mcx": GateSpec(2, None, 0),
    "mcy": GateSpec(2, None, 0),
    "mcz": GateSpec(2, None, 0),
    "mcry": GateSpec(2, None, 1),
}

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
T = np.diag([1, np.exp(1j * np.pi / 4)])
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]]
    )


_FIXED_1Q = {"id": I2, "x": X, "y": Y, "z": Z, "h": H, "s": S, "sdg": S.conj().T,
             "t": T, "tdg": T.conj().T, "sx": SX, "sxdg": SX.conj().T}
_PARAM_1Q = {"rx": rx, "ry": ry, "rz": rz, "u3": u3}
_CONTROLLED_TARGET = {"cx": X, "cy": Y, "cz": Z, "ccx": X, "ccz": Z, "mcx": X, "mcy": Y, "mcz": Z}


def controlled(u: np.ndarray, n_controls: int) -> np.ndarray:
    """Unitary applying ``u`` to the last qubit when all controls are 1."""
    k = u.shape[0]
    dim = k << n_controls
    out = np.eye(dim, dtype=complex)
    out[dim - k:, dim - k:] = u
    return out


def is_known(name: str) -> bool:
    return name in GATE_SPECS


def target_unitary(name: str, params=()) -> tuple[np.ndarray, bool]:
    """Single-qubit unitary acted on by gate ``name`` and whether it is controlled."""
    if name in _FIXED_1Q:
        return _FIXED_1Q[name], False
    if name in _PARAM_1Q:
        return _PARAM_1Q[name](*params), False
    if name in _CONTROLLED_TARGET:
        return _CONTROLLED_TARGET[name], True
    if name == "mcry":
        return ry(params[0]), True
    raise UnsupportedGateError(f"no unitary for gate '{name}'")


def gate_matrix(name: str, arity: int, params=()) -> np.ndarray:
    if name == "swap":
        return _swap()
    u, is_controlled = target_unitary(name, tuple(params))
    if is_controlled:
        return controlled(u, arity - 1)
    return u


@lru_cache(maxsize=None)
def _swap() -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            m[2 * b + a, 2 * a + b] = 1
    return m


_SELF_INVERSE = {"id", "x", "y", "z", "h", "cx", "cy", "cz", "swap", "ccx", "ccz", "mcx", "mcy", "mcz"}
_INVERSE_NAMES = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t", "sx": "sxdg", "sxdg": "sx"}


def inverse(name: str, params: tuple[float, ...]) -> tuple[str, tuple[float, ...]]:
    """Name and parameters of the adjoint gate."""
    if name in _SELF_INVERSE:
        return name, params
    if name in _INVERSE_NAMES:
        return _INVERSE_NAMES[name], params
    if name in ("rx", "ry", "rz", "mcry"):
        return name, (-params[0],)
    if name == "u3":
        theta, phi, lam = params
        return name, (-theta, -lam, -phi)
    raise UnsupportedGateError(f"no adjoint known for gate '{name}'")
