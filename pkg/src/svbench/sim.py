"""Process fidelities of noisy circuits: exact, Monte Carlo and zero-fault product.

Process fidelity is the entanglement fidelity of the error map
``E = Lambda o U^dag`` on a maximally entangled state,
``F = (1/d^2) sum_ij <i|U^dag Lambda(|i><j|) U|j>``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import gates as _g
from .circuit import Circuit, DeviceModel
from .errors import CapacityError, ConfigError, UnsupportedNoiseModelError
from .noise import LocationTable, NoiseModel, location_table
from .statevector import MAX_DENSE_QUBITS, apply_matrix, circuit_unitary, random_states

EXACT_MAX_QUBITS = 6
MC_MAX_QUBITS = MAX_DENSE_QUBITS
METHODS = ("exact", "mc", "external")

# kron(P, conj(P)) for I, X, Y, Z acting on a (ket, bra) axis pair
_PAULI_SUPEROPS = np.array([np.kron(p, p.conj()) for p in (_g.I2, _g.X, _g.Y, _g.Z)])


def _layer_ops(c: Circuit):
    index = c.index
    for layer in c.layers:
        yield [(g.matrix(), tuple(index[q] for q in g.qubits)) for g in layer]


# --- exact -------------------------------------------------------------------------


def exact_process_fidelity(c: Circuit, nm: NoiseModel, dev: DeviceModel | None = None,
                           max_qubits: int = EXACT_MAX_QUBITS, table: LocationTable | None = None) -> float:
    """Exact process fidelity by evolving every operator ``|i><j|`` through the noisy circuit.

    Work is chunked over the row index ``i`` so memory stays near ``d^3``.
    """
    n = c.width
    if n > max_qubits:
        raise CapacityError(f"exact fidelity of {n} qubits exceeds limit {max_qubits}")
    if n == 0:
        return 1.0
    table = location_table(c, nm, dev) if table is None else table
    dim = 1 << n
    u = circuit_unitary(c, max_qubits=max_qubits)
    layers = list(_layer_ops(c))
    chunk = max(1, (1 << 21) // (dim ** 3))
    total = 0.0
    for lo in range(0, dim, chunk):
        rows = np.arange(lo, min(dim, lo + chunk))
        nb = len(rows) * dim
        # axes: ket qubits 0..n-1, bra qubits n..2n-1, then a batch over (i, j)
        ops = np.zeros((dim, dim, len(rows), dim), dtype=complex)
        ii, jj = np.meshgrid(np.arange(len(rows)), np.arange(dim), indexing="ij")
        ops[rows[ii], jj, ii, jj] = 1.0
        ops = ops.reshape((2,) * (2 * n) + (nb,))
        for j, layer in enumerate(layers):
            for mat, axes in layer:
                ops = apply_matrix(ops, mat, axes)
                ops = apply_matrix(ops, mat.conj(), tuple(a + n for a in axes))
            for i in range(n):
                th = table.theta[j, i]
                if th:
                    rz = _g.rz(th)
                    ops = apply_matrix(ops, rz, (i,))
                    ops = apply_matrix(ops, rz.conj(), (i + n,))
                p = table.probs[j, i]
                if p[0] < 1.0:
                    sup = np.tensordot(p, _PAULI_SUPEROPS, axes=1)
                    ops = apply_matrix(ops, sup, (i, i + n))
        m = ops.reshape(dim, dim, len(rows), dim)
        # <i| U^dag M_ij U |j>
        total += np.einsum("ai,abij,bj->", u[:, rows].conj(), m, u).real
    return float(np.clip(total / (dim * dim), 0.0, 1.0))


# --- Monte Carlo ---------------------------------------------------------------------


def _apply_paulis(state: np.ndarray, axis: int, kinds: np.ndarray) -> np.ndarray:
    """Apply Pauli ``kinds[b]`` (0=I, 1=X, 2=Y, 3=Z) on ``axis`` to batch column b, in place."""
    cols = np.nonzero(kinds)[0]
    k = kinds[cols]
    sub = state[..., cols]
    lower = (slice(None),) * axis + (1,)
    sub[lower] *= np.where(k >= 2, -1.0, 1.0)
    sub = np.where((k == 1) | (k == 2), np.flip(sub, axis=axis), sub)
    # Y = i X Z
    state[..., cols] = sub * np.where(k == 2, 1j, 1.0)
    return state


def _mc_chunk(c: Circuit, table: LocationTable, layers, n_faults: int, n_states: int,
              rng: np.random.Generator) -> np.ndarray:
    n, depth = c.width, c.depth
    dim = 1 << n
    cum = np.cumsum(table.probs, axis=-1)
    draws = rng.random((n_faults, depth, n))
    kinds = np.minimum((draws[..., None] >= cum[None]).sum(-1), 3)
    trivial = ~kinds.any(axis=(1, 2)) & (not table.theta.any())
    psi = random_states(dim, n_faults * 2 * n_states, rng)
    ideal = psi.reshape((2,) * n + (-1,))
    noisy = ideal.copy()
    rep = 2 * n_states
    for j, layer in enumerate(layers):
        for mat, axes in layer:
            ideal = apply_matrix(ideal, mat, axes)
            noisy = apply_matrix(noisy, mat, axes)
        for i in range(n):
            if table.theta[j, i]:
                noisy = apply_matrix(noisy, _g.rz(table.theta[j, i]), (i,))
            col = kinds[:, j, i]
            if col.any():
                noisy = _apply_paulis(noisy, i, np.repeat(col, rep))
    overlaps = np.einsum("ab,ab->b", ideal.reshape(dim, -1).conj(), noisy.reshape(dim, -1))
    t = overlaps.reshape(n_faults, 2, n_states).mean(axis=2)
    out = (t[:, 0] * t[:, 1].conj()).real
    out[trivial] = 1.0
    return out


def mc_process_fidelity(c: Circuit, nm: NoiseModel, n_fault_samples: int, n_state_samples: int,
                        rng: np.random.Generator, dev: DeviceModel | None = None,
                        workers: int | None = None, max_qubits: int = MC_MAX_QUBITS) -> tuple[float, float]:
    """Unbiased Monte Carlo estimate of the process fidelity and its standard error.

    Each fault sample draws one Pauli per location (coherent rotations are
    always applied) and forms ``W``.  Two independent groups of Haar states
    give estimates t1, t2 of ``Tr(U^dag W)/d``; ``Re(t1 * conj(t2))`` is an
    unbiased estimate of ``|Tr(U^dag W)|^2 / d^2``.  Fault-free samples
    contribute exactly 1.  Samples are processed in fixed chunks, each with
    its own derived generator, so ``workers`` does not change the result.
    """
    if n_fault_samples < 1 or n_state_samples < 1:
        raise ValueError("sample counts must be positive")
    if c.width > max_qubits:
        raise CapacityError(f"statevector of {c.width} qubits exceeds limit {max_qubits}")
    if not isinstance(nm, NoiseModel):
        raise UnsupportedNoiseModelError("Monte Carlo estimation needs a mixed-unitary noise model")
    table = location_table(c, nm, dev)
    layers = list(_layer_ops(c))
    per_chunk = max(1, (1 << 20) // ((1 << c.width) * 2 * n_state_samples))
    sizes = [min(per_chunk, n_fault_samples - lo) for lo in range(0, n_fault_samples, per_chunk)]
    seeds = np.random.SeedSequence(int(rng.integers(2 ** 63))).spawn(len(sizes))

    def work(job):
        size, ss = job
        return _mc_chunk(c, table, layers, size, n_state_samples, np.random.default_rng(ss))

    jobs = list(zip(sizes, seeds))
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    samples = np.concatenate(parts)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return mean, stderr


def zero_fault_bound(c: Circuit, nm: NoiseModel, dev: DeviceModel | None = None) -> float:
    """Product of ``1 - eps_ij`` over all ``w*d`` locations (purely stochastic noise only)."""
    table = location_table(c, nm, dev)
    if table.theta.any():
        raise UnsupportedNoiseModelError("zero-fault product is undefined with coherent errors")
    return float(np.exp(np.log1p(-table.error).sum()))


# --- records and batches -----------------------------------------------------------


@dataclass(frozen=True)
class FidelityRecord:
    w: int
    d: int
    k: int
    F: float | None
    stderr: float = 0.0
    method: str = "exact"
    dropped: float | None = None
    error: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown record method '{self.method}'")
        if self.F is None:
            if self.error is None:
                raise ConfigError("a record without F must carry an error message")
        elif not (math.isfinite(self.F) and 0.0 <= self.F <= 1.0):
            raise ConfigError(f"record F={self.F} outside [0, 1]")
        if not self.stderr >= 0.0:
            raise ConfigError("record stderr must be >= 0")

    @property
    def failed(self) -> bool:
        return self.F is None

    @property
    def shape(self) -> tuple[int, int]:
        return self.w, self.d

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None or k == "F"}


def record_from_dict(data: dict) -> FidelityRecord:
    try:
        return FidelityRecord(int(data["w"]), int(data["d"]), int(data.get("k", 0)),
                              None if data.get("F") is None else float(data["F"]),
                              float(data.get("stderr", 0.0)), data.get("method", "external"),
                              data.get("dropped"), data.get("error"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad fidelity record {data!r}: {exc}") from exc


def write_records(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")


def read_records(path) -> list[FidelityRecord]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(record_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return out


@dataclass(frozen=True)
class SimBudget:
    exact_max_width: int = 4
    n_fault_samples: int = 256
    n_state_samples: int = 2
    workers: int | None = None

    def __post_init__(self):
        if not 0 <= self.exact_max_width <= EXACT_MAX_QUBITS:
            raise ConfigError(f"exact_max_width must lie in [0, {EXACT_MAX_QUBITS}]")
        if self.n_fault_samples < 2 or self.n_state_samples < 1:
            raise ConfigError("need at least 2 fault samples and 1 state sample")

    def method_for(self, width: int) -> str:
        return "exact" if width <= self.exact_max_width else "mc"


def item_rng(seed: int, w: int, d: int, k: int) -> np.random.Generator:
    # the trailing 1 keeps this stream apart from the snipping stream of the same seed
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(w, d, k, 1)))


def evaluate_snippet(circuit: Circuit, w: int, d: int, k: int, nm: NoiseModel, budget: SimBudget,
                     seed: int, dev: DeviceModel | None = None, dropped: float | None = None) -> FidelityRecord:
    method = budget.method_for(circuit.width)
    try:
        if method == "exact":
            f, se = exact_process_fidelity(circuit, nm, dev), 0.0
        else:
            f, se = mc_process_fidelity(circuit, nm, budget.n_fault_samples, budget.n_state_samples,
                                        item_rng(seed, w, d, k), dev)
            f = min(max(f, 0.0), 1.0)
    except CapacityError as exc:
        return FidelityRecord(w, d, k, None, 0.0, method, dropped, str(exc))
    return FidelityRecord(w, d, k, f, se, method, dropped)


def run_snippet_batch(snippets, nm: NoiseModel, budget: SimBudget = SimBudget(), seed: int = 0,
                      dev: DeviceModel | None = None) -> list[FidelityRecord]:
    """One record per ``(shape, k, snippet)`` item, in input order.

    Exact evaluation is used up to ``budget.exact_max_width`` qubits and Monte
    Carlo beyond.  Capacity failures yield a record with ``F=None`` and an
    error message instead of aborting the batch.
    """
    from .snip import dropped_gate_fraction

    def work(item):
        shape, k, snippet = item
        return evaluate_snippet(snippet.circuit, shape.w, shape.d, k, nm, budget, seed, dev,
                                dropped_gate_fraction(snippet))

    items = list(snippets)
    if budget.workers and budget.workers > 1:
        with ThreadPoolExecutor(max_workers=budget.workers) as pool:
            return list(pool.map(work, items))
    return [work(i) for i in items]
