"""Block-encoding circuits for weighted Pauli sums via a linear combination of unitaries.

Register layout of generated circuits (qubit 0 is the most significant bit of
the term index):

* index register ``i0 .. i{m-1}``
* unary-iteration accumulators ``a0 .. a{m-2}`` (unary select only)
* system register ``s0 .. s{n-1}``
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, layerize
from .errors import CapacityError, SvbError
from .gates import PAULIS
from .statevector import apply_circuit, basis_columns

SELECT_MODES = ("direct", "unary")
PREPARE_MODES = ("multiplexed", "multicontrolled")
MAX_VERIFY_QUBITS = 14


class LcuInputError(SvbError, ValueError):
    pass


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    pauli: str

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "pauli", str(self.pauli).upper())
        if not math.isfinite(self.coeff) or self.coeff == 0.0:
            raise LcuInputError(f"coefficient must be finite and nonzero, got {self.coeff}")
        if not self.pauli or set(self.pauli) - set("IXYZ"):
            raise LcuInputError(f"bad Pauli string '{self.pauli}'")

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for p in self.pauli:
            out = np.kron(out, PAULIS[p])
        return out


@dataclass(frozen=True)
class LcuSpec:
    terms: tuple[PauliTerm, ...]
    n: int
    m: int
    select_mode: str = "unary"

    @property
    def one_norm(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms))

    @property
    def n_ancilla(self) -> int:
        return max(self.m - 1, 0) if self.select_mode == "unary" else 0

    @property
    def n_aux(self) -> int:
        return self.m + self.n_ancilla

    @property
    def index_qubits(self) -> list[str]:
        return [f"i{k}" for k in range(self.m)]

    @property
    def ancilla_qubits(self) -> list[str]:
        return [f"a{k}" for k in range(self.n_ancilla)]

    @property
    def system_qubits(self) -> list[str]:
        return [f"s{k}" for k in range(self.n)]

    @property
    def qubits(self) -> list[str]:
        return self.index_qubits + self.ancilla_qubits + self.system_qubits

    def operator(self) -> np.ndarray:
        return sum(t.coeff * t.matrix() for t in self.terms)


def plan_registers(terms: Sequence[PauliTerm], select_mode: str = "unary") -> LcuSpec:
    """Size the index register to the smallest ``m`` with ``2**m >= len(terms)``."""
    terms = tuple(terms)
    if not terms:
        raise LcuInputError("at least one term is required")
    if select_mode not in SELECT_MODES:
        raise LcuInputError(f"select mode must be one of {SELECT_MODES}")
    n = len(terms[0].pauli)
    if any(len(t.pauli) != n for t in terms):
        raise LcuInputError("all Pauli strings must have the same length")
    m = math.ceil(math.log2(len(terms))) if len(terms) > 1 else 0
    return LcuSpec(terms, n, m, select_mode)


def terms_from_json(data) -> list[PauliTerm]:
    if not isinstance(data, list):
        raise LcuInputError("terms file must hold a JSON list")
    try:
        return [PauliTerm(d["c"], d["p"]) for d in data]
    except (KeyError, TypeError) as exc:
        raise LcuInputError(f"bad term entry: {exc}") from None


def load_terms(path) -> list[PauliTerm]:
    with open(path) as fh:
        return terms_from_json(json.load(fh))


TOY_OPERATORS = {
    "identity_plus_z": [(0.5, "I"), (0.5, "Z")],
    "identity_minus_z": [(0.5, "I"), (-0.5, "Z")],
    "two_qubit_ising": [(1.0, "ZZ"), (0.5, "XI"), (0.5, "IX")],
    "two_qubit_mixed": [(0.7, "XZ"), (-0.3, "ZY")],
    "two_qubit_heisenberg": [(0.25, "XX"), (0.25, "YY"), (-0.25, "ZZ"), (0.4, "ZI"), (-0.1, "IZ")],
}


def toy_operator(name: str) -> list[PauliTerm]:
    return [PauliTerm(c, p) for c, p in TOY_OPERATORS[name]]


# --- state tree ----------------------------------------------------------------


@dataclass(frozen=True)
class StateTree:
    """Complete binary trie over the index register.

    ``norms[j][i]`` is the partial norm of the node at depth ``j`` whose bit
    string is ``i`` (left child appends 0).  ``signs`` are +1/-1, or 0 for
    zero-norm nodes whose sign is irrelevant.
    """

    norms: tuple[np.ndarray, ...]
    signs: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.norms) - 1

    @property
    def leaves(self) -> np.ndarray:
        return self.norms[-1] * np.where(self.signs[-1] == 0, 1, self.signs[-1])

    def max_pythagorean_violation(self) -> float:
        worst = 0.0
        for j in range(self.m):
            kids = self.norms[j + 1]
            worst = max(worst, float(np.max(np.abs(self.norms[j] ** 2 - kids[0::2] ** 2 - kids[1::2] ** 2))))
        return worst


def build_state_tree(spec: LcuSpec) -> StateTree:
    size = 1 << spec.m
    mags = np.zeros(size)
    leaf_signs = np.zeros(size, dtype=int)
    norm1 = spec.one_norm
    for l, t in enumerate(spec.terms):
        mags[l] = math.sqrt(abs(t.coeff) / norm1)
        leaf_signs[l] = 1 if t.coeff > 0 else -1
    norms = [mags]
    signs = [leaf_signs]
    for _ in range(spec.m):
        kids, kid_signs = norms[0], signs[0]
        norms.insert(0, np.sqrt(kids[0::2] ** 2 + kids[1::2] ** 2))
        # a node takes its right child's sign; zero-norm children carry none
        right, left = kid_signs[1::2], kid_signs[0::2]
        signs.insert(0, np.where(right != 0, right, left))
    return StateTree(tuple(norms), tuple(signs))


@dataclass(frozen=True)
class AngleTable:
    """Y-rotation angles per tree depth; ``angles[j][i]`` lies in ``[0, pi]``.

    ``flips[j][i]`` marks rotations whose sign is flipped in the unprepare
    oracle.  A flipped rotation is realised as ``2*pi - theta`` so that
    RY(2*pi - theta)|0> = -cos|0> + sin|1>, which keeps the subtree's overall
    sign equal to its right child's.  ``global_sign`` is the root sign, folded
    into the unprepare root rotation.
    """

    angles: tuple[np.ndarray, ...]
    flips: tuple[np.ndarray, ...]
    global_sign: int = 1

    @property
    def m(self) -> int:
        return len(self.angles)

    def __len__(self) -> int:
        return sum(len(a) for a in self.angles)

    def prepare_angles(self, j: int) -> np.ndarray:
        return self.angles[j]

    def unprepare_angles(self, j: int, sign_flips: bool = True) -> np.ndarray:
        theta = self.angles[j]
        if not sign_flips:
            return theta
        out = np.where(self.flips[j], 2 * np.pi - theta, theta)
        if j == 0 and self.global_sign < 0:
            # RY(x + 2*pi) = -RY(x): absorbs the overall sign of the state
            out = out + 2 * np.pi
        return out


def rotation_angles(tree: StateTree) -> AngleTable:
    angles, flips = [], []
    for j in range(tree.m):
        node = tree.norms[j]
        right = tree.norms[j + 1][1::2]
        ratio = np.divide(right, node, out=np.zeros_like(node), where=node > 0)
        angles.append(2 * np.arcsin(np.clip(ratio, 0.0, 1.0)))
        kid_signs = tree.signs[j + 1]
        left_s, right_s = kid_signs[0::2], kid_signs[1::2]
        flips.append((left_s != 0) & (right_s != 0) & (left_s != right_s))
    root_sign = int(tree.signs[0][0]) or 1
    return AngleTable(tuple(angles), tuple(flips), root_sign)


# --- oracles -------------------------------------------------------------------


def _x_wrap(qubits: Sequence[str], pattern: int, width: int) -> list[Gate]:
    """X gates on the qubits whose bit (MSB first) in ``pattern`` is 0."""
    return [Gate("x", [q]) for b, q in enumerate(qubits) if not (pattern >> (width - 1 - b)) & 1]


def _multicontrolled_ry(theta: np.ndarray, controls: Sequence[str], target: str) -> list[Gate]:
    out: list[Gate] = []
    for i, angle in enumerate(theta):
        if angle == 0.0:
            continue
        if not controls:
            out.append(Gate("ry", [target], [angle]))
            continue
        wrap = _x_wrap(controls, i, len(controls))
        out += wrap + [Gate("mcry", list(controls) + [target], [angle])] + wrap
    return out


def _gray(g: int) -> int:
    return g ^ (g >> 1)


def multiplexed_ry(theta: np.ndarray, controls: Sequence[str], target: str) -> list[Gate]:
    """Uniformly controlled Y rotation from single-qubit RY and CNOT (Gray-code order).

    Applies RY(theta[i]) to ``target`` when the controls (MSB first) hold ``i``.
    """
    k = len(controls)
    if k == 0:
        return [Gate("ry", [target], [theta[0]])] if theta[0] != 0.0 else []
    size = 1 << k
    grays = np.array([_gray(g) for g in range(size)])
    parity = np.array([[bin(grays[g] & i).count("1") & 1 for g in range(size)] for i in range(size)])
    signs = 1 - 2 * parity
    phis = signs.T @ np.asarray(theta) / size
    out: list[Gate] = []
    for g in range(size):
        if abs(phis[g]) > 1e-15:
            out.append(Gate("ry", [target], [phis[g]]))
        changed = int(grays[g] ^ grays[(g + 1) % size])
        bit = changed.bit_length() - 1
        out.append(Gate("cx", [controls[k - 1 - bit], target]))
    return out


def build_prepare(angles: AngleTable, mode: str = "multiplexed", unprepare: bool = False,
                  sign_flips: bool = True, qubits: Sequence[str] | None = None) -> Circuit:
    """Circuit fragment on the index register mapping |0...0> to sum_l a_l|l>.

    With ``unprepare=True`` the flipped angles of the unprepare oracle are used.
    """
    if mode not in PREPARE_MODES:
        raise LcuInputError(f"prepare mode must be one of {PREPARE_MODES}")
    m = angles.m
    qubits = list(qubits) if qubits is not None else [f"i{k}" for k in range(m)]
    gates: list[Gate] = []
    build = multiplexed_ry if mode == "multiplexed" else _multicontrolled_ry
    for j in range(m):
        theta = angles.unprepare_angles(j, sign_flips) if unprepare else angles.prepare_angles(j)
        gates += build(theta, qubits[:j], qubits[j])
    return layerize(qubits, gates)


def _controlled_pauli(term: PauliTerm, controls: Sequence[str], system: Sequence[str]) -> list[Gate]:
    out = []
    for p, q in zip(term.pauli, system):
        if p == "I":
            continue
        if not controls:
            out.append(Gate(p.lower(), [q]))
        elif len(controls) == 1:
            out.append(Gate("c" + p.lower(), [controls[0], q]))
        else:
            out.append(Gate("mc" + p.lower(), list(controls) + [q]))
    return out


def _select_direct(spec: LcuSpec) -> list[Gate]:
    idx, sys_q = spec.index_qubits, spec.system_qubits
    out: list[Gate] = []
    for l, term in enumerate(spec.terms):
        body = _controlled_pauli(term, idx, sys_q)
        if not body:
            continue
        wrap = _x_wrap(idx, l, spec.m)
        out += wrap + body + wrap
    return out


def _select_unary(spec: LcuSpec) -> list[Gate]:
    idx, anc, sys_q = spec.index_qubits, spec.ancilla_qubits, spec.system_qubits
    m = spec.m
    active = [any(p != "I" for p in t.pauli) for t in spec.terms]
    active += [False] * ((1 << m) - len(active))
    if m == 0:
        return _controlled_pauli(spec.terms[0], [], sys_q) if active[0] else []

    def busy(lo, size):
        return any(active[lo:lo + size])

    def emit(level: int, ctrl: str | None, lo: int) -> list[Gate]:
        size = 1 << (m - level)
        if not busy(lo, size):
            return []
        if level == m:
            return _controlled_pauli(spec.terms[lo], [ctrl], sys_q)
        half = size // 2
        sel = idx[level]
        left, right = busy(lo, half), busy(lo + half, half)
        if level == 0:
            out = []
            if left:
                out += [Gate("x", [sel])] + emit(1, sel, lo) + [Gate("x", [sel])]
            if right:
                out += emit(1, sel, lo + half)
            return out
        acc = anc[level - 1]
        toffoli = Gate("ccx", [ctrl, sel, acc])
        neg = Gate("x", [sel])
        if left and right:
            return ([neg, toffoli, neg] + emit(level + 1, acc, lo) + [Gate("cx", [ctrl, acc])]
                    + emit(level + 1, acc, lo + half) + [toffoli])
        if left:
            return [neg, toffoli, neg] + emit(level + 1, acc, lo) + [neg, toffoli, neg]
        return [toffoli] + emit(level + 1, acc, lo + half) + [toffoli]

    return emit(0, None, 0)


def build_select(spec: LcuSpec, mode: str | None = None) -> Circuit:
    """Circuit applying sum_l |l><l| (x) U_l on index (x) system.

    Unary mode uses ``m - 1`` accumulator qubits that start and end in |0>.
    """
    mode = mode or spec.select_mode
    if mode not in SELECT_MODES:
        raise LcuInputError(f"select mode must be one of {SELECT_MODES}")
    if mode != spec.select_mode:
        spec = LcuSpec(spec.terms, spec.n, spec.m, mode)
    gates = _select_unary(spec) if mode == "unary" else _select_direct(spec)
    return layerize(spec.qubits, gates)


def assemble_lcu(spec: LcuSpec, prepare_mode: str = "multiplexed", sign_flips: bool = True) -> Circuit:
    """Prepare, select, then the adjoint of unprepare, as one layered circuit."""
    qubits = spec.qubits
    tree = build_state_tree(spec)
    table = rotation_angles(tree)
    prep = build_prepare(table, prepare_mode, qubits=spec.index_qubits)
    unprep = build_prepare(table, prepare_mode, unprepare=True, sign_flips=sign_flips,
                           qubits=spec.index_qubits)
    select = build_select(spec)
    gates = list(prep.gates()) + list(select.gates()) + list(unprep.inverse().gates())
    if spec.m == 0 and sign_flips and spec.terms[0].coeff < 0:
        gates.append(Gate("ry", [spec.system_qubits[0]], [2 * np.pi]))
    return layerize(qubits, gates)


def encoded_block(circuit: Circuit, system: Sequence[str]) -> np.ndarray:
    """The block <0|^aux U |0>^aux of ``circuit`` over the ``system`` qubits."""
    if circuit.width > MAX_VERIFY_QUBITS:
        raise CapacityError(f"{circuit.width} qubits exceeds dense verification limit {MAX_VERIFY_QUBITS}")
    order = list(system) + [q for q in circuit.qubits if q not in set(system)]
    perm = Circuit(order, circuit.layers)
    n = len(system)
    aux = perm.width - n
    # system qubits lead, so basis column j < 2**n has the auxiliaries in |0>
    cols = np.arange(1 << n) << aux
    out = apply_circuit(perm, basis_columns(perm.width, cols))
    out = out.reshape(1 << n, 1 << aux, 1 << n)
    return out[:, 0, :]


def verify_block_encoding(circuit: Circuit, spec: LcuSpec) -> float:
    """Max-abs entrywise error between A / ||c||_1 and the encoded block."""
    block = encoded_block(circuit, spec.system_qubits)
    target = spec.operator() / spec.one_norm
    return float(np.max(np.abs(target - block)))
