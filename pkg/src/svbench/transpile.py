"""Compile generator circuits to a native rz/sx/cx gate set on a device.

The pipeline is decompose -> place and route -> layerize.  It is deliberately
simple: identity initial layout, greedy shortest-path SWAP insertion with
seeded tie-breaking and no peephole optimisation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from . import gates as _g
from .circuit import Circuit, DeviceModel, Gate, layerize, validate_compiled
from .errors import CapacityError, SvbError, UnsupportedGateError

__all__ = ["GateSetTarget", "decompose_to_native", "place_and_route", "layerize", "transpile",
           "RoutingResult", "zyz_angles"]


class RoutingError(SvbError):
    pass


@dataclass(frozen=True)
class GateSetTarget:
    one_qubit: tuple[str, ...] = ("rz", "sx")
    two_qubit: str = "cx"
    tolerance: float = 1e-12

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if set(self.one_qubit) != {"rz", "sx"} or self.two_qubit != "cx":
            raise UnsupportedGateError("only the rz/sx/cx target is implemented")


# --- single-qubit synthesis -----------------------------------------------------


def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Return ``(alpha, beta, gamma, delta)`` with u = e^{i alpha} RZ(beta) RY(gamma) RZ(delta)."""
    alpha = 0.5 * np.angle(np.linalg.det(u))
    w = u * np.exp(-1j * alpha)
    a, b = w[0, 0], w[1, 0]
    gamma = 2 * np.arctan2(abs(b), abs(a))
    if abs(b) < 1e-14:
        plus, minus = -2 * np.angle(a), 0.0
    elif abs(a) < 1e-14:
        plus, minus = 0.0, 2 * np.angle(b)
    else:
        plus, minus = -2 * np.angle(a), 2 * np.angle(b)
    beta = 0.5 * (plus + minus)
    delta = 0.5 * (plus - minus)
    return float(alpha), float(beta), float(gamma), float(delta)


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2 * np.pi) - np.pi)


def _rz(angle: float, q: str, tol: float) -> list[Gate]:
    angle = _wrap(angle)
    # rz(2*pi k) differs from the identity only by a global phase
    return [] if abs(angle) < tol else [Gate("rz", [q], [angle])]


def synthesize_1q(u: np.ndarray, q: str, tol: float = 1e-12) -> list[Gate]:
    """rz/sx sequence equal to ``u`` up to global phase (at most 2 sx and 3 rz)."""
    _, beta, gamma, delta = zyz_angles(u)
    if abs(gamma) < tol:
        return _rz(beta + delta, q, tol)
    # RY(g) ~ SX RZ(-g) SXdg and SXdg ~ RZ(pi) SX RZ(-pi)
    return (_rz(delta - np.pi, q, tol) + [Gate("sx", [q])] + _rz(np.pi - gamma, q, tol)
            + [Gate("sx", [q])] + _rz(beta, q, tol))


# --- multi-qubit decompositions ---------------------------------------------------
# Intermediate ops are ("u", matrix, (q,)) for single-qubit unitaries and
# ("cx", None, (c, t)) for CNOTs.


def _u(m, q):
    return ("u", m, (q,))


def _cx(c, t):
    return ("cx", None, (c, t))


def _ccz(a, b, c):
    t, tdg = _g.T, _g.T.conj().T
    return [_cx(b, c), _u(tdg, c), _cx(a, c), _u(t, c), _cx(b, c), _u(tdg, c), _cx(a, c),
            _u(t, b), _u(t, c), _cx(a, b), _u(t, a), _u(tdg, b), _cx(a, b)]


def _controlled_1q(u: np.ndarray, c: str, t: str):
    alpha, beta, gamma, delta = zyz_angles(u)
    a = _g.rz(beta) @ _g.ry(gamma / 2)
    b = _g.ry(-gamma / 2) @ _g.rz(-(delta + beta) / 2)
    cc = _g.rz((delta - beta) / 2)
    phase = np.diag([1.0, np.exp(1j * alpha)])
    return [_u(cc, t), _cx(c, t), _u(b, t), _cx(c, t), _u(a, t), _u(phase, c)]


def _sqrtm_unitary(u: np.ndarray) -> np.ndarray:
    tri, vecs = schur(u, output="complex")
    return vecs @ np.diag(np.sqrt(np.diag(tri))) @ vecs.conj().T


def _multi_controlled(u: np.ndarray, controls: list[str], t: str):
    k = len(controls)
    if k == 0:
        return [_u(u, t)]
    if k == 1:
        if np.allclose(u, _g.X):
            return [_cx(controls[0], t)]
        return _controlled_1q(u, controls[0], t)
    if k == 2 and np.allclose(u, _g.Z):
        return _ccz(controls[0], controls[1], t)
    if k == 2 and np.allclose(u, _g.X):
        return [_u(_g.H, t)] + _ccz(controls[0], controls[1], t) + [_u(_g.H, t)]
    # C^k(U) = C_last(V) . C^{k-1}X(rest -> last) . C_last(V^dag) . C^{k-1}X . C^{k-1}(V), V^2 = U
    v = _sqrtm_unitary(u)
    rest, last = controls[:-1], controls[-1]
    return (_controlled_1q(v, last, t) + _multi_controlled(_g.X, rest, last)
            + _controlled_1q(v.conj().T, last, t) + _multi_controlled(_g.X, rest, last)
            + _multi_controlled(v, rest, t))


def _expand(g: Gate):
    name, qs = g.name, list(g.qubits)
    if name == "cx":
        return [_cx(*qs)]
    if name == "swap":
        a, b = qs
        return [_cx(a, b), _cx(b, a), _cx(a, b)]
    if name == "cz":
        return [_u(_g.H, qs[1]), _cx(*qs), _u(_g.H, qs[1])]
    if name == "cy":
        return [_u(_g.S.conj().T, qs[1]), _cx(*qs), _u(_g.S, qs[1])]
    if not _g.is_known(name):
        raise UnsupportedGateError(f"cannot decompose unknown gate '{name}'")
    u, is_controlled = _g.target_unitary(name, g.params)
    if not is_controlled:
        return [_u(u, qs[0])]
    return _multi_controlled(u, qs[:-1], qs[-1])


def decompose_to_native(c: Circuit, target: GateSetTarget = GateSetTarget()) -> Circuit:
    """Rewrite every gate into rz, sx and cx; equal to ``c`` up to global phase."""
    out: list[Gate] = []
    for g in c.gates():
        if g.name in ("rz", "sx"):
            out.append(g)
            continue
        for kind, mat, qs in _expand(g):
            if kind == "cx":
                out.append(Gate("cx", qs))
            else:
                out += synthesize_1q(mat, qs[0], target.tolerance)
    return layerize(c.qubits, out)


# --- routing --------------------------------------------------------------------


@dataclass(frozen=True)
class RoutingResult:
    circuit: Circuit
    initial_layout: dict[str, str]
    final_layout: dict[str, str]
    n_swaps: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "initial_layout": self.initial_layout,
            "final_layout": self.final_layout,
            "n_swaps": self.n_swaps,
            **self.meta,
        }


def _distances_to(dev: DeviceModel, dst: str) -> dict[str, int]:
    dist = {dst: 0}
    queue = deque([dst])
    while queue:
        u = queue.popleft()
        for v in dev.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def place_and_route(c: Circuit, dev: DeviceModel, seed: int = 0) -> RoutingResult:
    """Map ``c`` onto ``dev`` with an identity layout and greedy SWAP insertion.

    Circuit qubit k starts on device qubit k.  A two-qubit gate on uncoupled
    qubits moves its first qubit along a shortest path (ties broken by the
    seeded generator) until the pair is coupled; each SWAP is emitted as three
    cx gates.  The output acts on the device qubits that were used.
    """
    if c.width > len(dev.qubits):
        raise CapacityError(f"circuit width {c.width} exceeds device size {len(dev.qubits)}")
    rng = np.random.default_rng(seed)
    layout = dict(zip(c.qubits, dev.qubits))
    occupant = {p: l for l, p in layout.items()}
    used = set(layout.values())
    out: list[Gate] = []
    n_swaps = 0
    for g in c.gates():
        if g.arity > 2:
            raise RoutingError(f"gate '{g.name}' on {g.arity} qubits must be decomposed before routing")
        if g.arity == 2:
            a, b = g.qubits
            pa, pb = layout[a], layout[b]
            if not dev.has_edge(pa, pb):
                dist = _distances_to(dev, pb)
                if pa not in dist:
                    raise RoutingError(f"no path between device qubits {pa} and {pb}")
                while dist[pa] > 1:
                    steps = [v for v in dev.neighbors(pa) if dist.get(v) == dist[pa] - 1]
                    nxt = steps[int(rng.integers(len(steps)))] if len(steps) > 1 else steps[0]
                    out += [Gate("cx", [pa, nxt]), Gate("cx", [nxt, pa]), Gate("cx", [pa, nxt])]
                    n_swaps += 1
                    used.add(nxt)
                    la, ln = occupant.get(pa), occupant.get(nxt)
                    occupant[pa], occupant[nxt] = ln, la
                    for lab, phys in ((la, nxt), (ln, pa)):
                        if lab is not None:
                            layout[lab] = phys
                    pa = nxt
        out.append(Gate(g.name, [layout[q] for q in g.qubits], g.params))
    qubits = [p for p in dev.qubits if p in used]
    initial = dict(zip(c.qubits, dev.qubits))
    return RoutingResult(layerize(qubits, out), initial, dict(layout), n_swaps)


def transpile(c: Circuit, dev: DeviceModel, seed: int = 0,
              target: GateSetTarget = GateSetTarget()) -> RoutingResult:
    """Decompose, route and layerize; the result always passes ``validate_compiled``."""
    native = decompose_to_native(c, target)
    routed = place_and_route(native, dev, seed)
    report = validate_compiled(routed.circuit, dev)
    if not report.ok:
        raise RoutingError(f"transpiled circuit failed validation: {report.violations[:3]}")
    meta = {"seed": seed, "source_width": c.width, "source_depth": c.depth,
            "width": routed.circuit.width, "depth": routed.circuit.depth}
    return RoutingResult(routed.circuit, routed.initial_layout, routed.final_layout,
                         routed.n_swaps, meta)
