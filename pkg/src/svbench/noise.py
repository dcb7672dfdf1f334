"""Per-location noise models: Pauli stochastic, depolarizing, coherent Z and crosstalk.

Every (qubit, layer) slot of a circuit is a location.  A location holding a
gate looks up the rule for that gate name; an empty slot uses the ``idle``
rule.  After the ideal layer, each location applies a coherent ``rz(theta)``
and then its Pauli channel.

Rules are keyed ``"kind"`` or ``"qubit/kind"``.  Lookup for qubit ``q`` and
kind ``k`` tries ``q/k``, ``q/gate`` (gates only), ``q/*``, ``k``, ``gate``
(gates only) and ``*`` in that order; no match means a noiseless location.

Crosstalk multiplies the total Pauli error at a location by ``1 + gamma*A``,
where A counts device neighbours of the qubit that hold a gate in the same
layer.  Scaled rates are clamped just below 1; coherent angles are not scaled.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, DeviceModel
from .errors import ConfigError

MAX_ERROR = 1.0 - 1e-12
_FIELDS = ("px", "py", "pz", "dep", "theta")


@dataclass(frozen=True)
class NoiseRule:
    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0
    dep: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in _FIELDS:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"noise field {name} must be finite")
            object.__setattr__(self, name, v)
        if min(self.px, self.py, self.pz) < 0 or self.px + self.py + self.pz > 1:
            raise ConfigError("pauli probabilities must be >= 0 and sum to at most 1")
        if not 0 <= self.dep < 1:
            raise ConfigError("depolarizing infidelity must lie in [0, 1)")

    def pauli_probs(self) -> np.ndarray:
        """Probabilities of (I, X, Y, Z) after composing the explicit and depolarizing parts."""
        a = np.array([1 - self.px - self.py - self.pz, self.px, self.py, self.pz])
        e = self.dep / 3
        b = np.array([1 - self.dep, e, e, e])
        # Pauli labels multiply like Z2 x Z2 under XOR of (x, z) bits: I=0, X=1, Y=2, Z=3
        xor = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
        out = np.zeros(4)
        for i in range(4):
            for j in range(4):
                out[xor[i, j]] += a[i] * b[j]
        return out

    @property
    def is_stochastic(self) -> bool:
        return self.theta == 0.0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _FIELDS if getattr(self, k) != 0.0}


NOISELESS = NoiseRule()


@dataclass(frozen=True)
class NoiseModel:
    rules: dict = field(default_factory=dict)
    gamma: float = 0.0
    edges: tuple = ()

    def __post_init__(self):
        rules = {}
        for key, rule in dict(self.rules).items():
            rules[str(key)] = rule if isinstance(rule, NoiseRule) else _rule_from_dict(rule, key)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "edges", tuple(tuple(map(str, e)) for e in self.edges))
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ConfigError("crosstalk gamma must be a finite value >= 0")

    @classmethod
    def depolarizing(cls, eps: float, gamma: float = 0.0) -> "NoiseModel":
        """Uniform depolarizing noise of process infidelity ``eps`` at every location."""
        return cls({"*": NoiseRule(dep=eps)}, gamma)

    @classmethod
    def pauli(cls, px: float, py: float, pz: float, gamma: float = 0.0) -> "NoiseModel":
        return cls({"*": NoiseRule(px, py, pz)}, gamma)

    @property
    def is_stochastic(self) -> bool:
        return all(r.is_stochastic for r in self.rules.values())

    def rule(self, qubit: str, kind: str) -> NoiseRule:
        is_gate = kind != "idle"
        keys = [f"{qubit}/{kind}"] + ([f"{qubit}/gate"] if is_gate else []) + [f"{qubit}/*", kind]
        keys += (["gate"] if is_gate else []) + ["*"]
        for key in keys:
            if key in self.rules:
                return self.rules[key]
        return NOISELESS

    def to_dict(self) -> dict:
        out: dict = {"gamma": self.gamma}
        if self.edges:
            out["edges"] = [list(e) for e in self.edges]
        for key in sorted(self.rules):
            out[key] = self.rules[key].to_dict()
        return out


def _rule_from_dict(data, key) -> NoiseRule:
    if not isinstance(data, dict):
        raise ConfigError(f"noise rule '{key}' must be an object")
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"noise rule '{key}' has unknown fields {sorted(unknown)}")
    return NoiseRule(**{k: float(v) for k, v in data.items()})


def noise_from_dict(data) -> NoiseModel:
    if not isinstance(data, dict):
        raise ConfigError("noise model must be a JSON object")
    data = dict(data)
    gamma = data.pop("gamma", 0.0)
    edges = data.pop("edges", ())
    rules = data.pop("rules", {})
    rules = {**rules, **data}
    return NoiseModel(rules, gamma, edges)


def load_noise(path) -> NoiseModel:
    with open(path) as fh:
        try:
            return noise_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"noise model {path}: {exc}") from exc


def save_noise(nm: NoiseModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(nm.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


# --- location tables ---------------------------------------------------------------


def adjacency(c: Circuit, nm: NoiseModel, dev: DeviceModel | None = None) -> dict[str, set[str]]:
    """Neighbour sets among the circuit's qubits.

    Taken from ``dev`` when given, else from the model's ``edges``, else a
    chain in circuit qubit order (snippets of line devices keep that order).
    """
    adj = {q: set() for q in c.qubits}
    if dev is not None:
        pairs = dev.edges
    elif nm.edges:
        pairs = nm.edges
    else:
        pairs = list(zip(c.qubits, c.qubits[1:]))
    for a, b in pairs:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    return adj


@dataclass(frozen=True)
class LocationTable:
    """Pauli probabilities ``probs[j, i]`` (I, X, Y, Z) and angles ``theta[j, i]``."""
    probs: np.ndarray
    theta: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return 1.0 - self.probs[..., 0]


def location_table(c: Circuit, nm: NoiseModel, dev: DeviceModel | None = None) -> LocationTable:
    adj = adjacency(c, nm, dev) if nm.gamma else None
    probs = np.zeros((c.depth, c.width, 4))
    theta = np.zeros((c.depth, c.width))
    for j, layer in enumerate(c.layers):
        kind = {q: g.name for g in layer for q in g.qubits}
        for i, q in enumerate(c.qubits):
            rule = nm.rule(q, kind.get(q, "idle"))
            p = rule.pauli_probs()
            if adj is not None:
                active = sum(1 for n in adj[q] if n in kind)
                err = 1.0 - p[0]
                if err > 0 and active:
                    scaled = min(err * (1 + nm.gamma * active), MAX_ERROR)
                    p = np.concatenate([[1 - scaled], p[1:] * (scaled / err)])
            probs[j, i] = p
            theta[j, i] = rule.theta
    return LocationTable(probs, theta)
