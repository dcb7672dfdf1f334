"""From snippet fidelities to effective error rates, quops and capability coefficients.

Per shape (w, d) with K records:

    GM    = (prod_k F_k)^(1/K)
    eps   = 1 - GM^(1/(w*d))
    F_c   = (1 - eps)^(w_c*d_c)          reported as log10
    Q     = 1/eps

Q_0 uses the depth-averaged rate at w=2, Q_C the rate at the widest measured
width and Q_T = w_c*d_c.  Scalability is Q_C/Q_0 and capability Q_C/Q_T.
All powers are taken in log space so tiny fidelities never underflow.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from .errors import IncompleteDataError, UndefinedWidthError

DEFAULT_THRESHOLD = 0.07


@dataclass(frozen=True)
class ShapeAggregate:
    w: int
    d: int
    K: int
    gm_fidelity: float | None
    eps: float | None
    eps_stderr: float | None = None
    mean_fidelity: float | None = None
    dropped_fraction: float | None = None
    excluded: bool = False
    reason: str | None = None
    n_failed: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.w, self.d

    def to_dict(self) -> dict:
        return asdict(self)


def geometric_mean(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("geometric mean of no values")
    if (v <= 0).any():
        return 0.0
    return float(np.exp(np.log(v).mean()))


def effective_error(gm: float, w: int, d: int) -> float:
    """``1 - gm^(1/(w*d))``, computed without cancellation for gm near 1."""
    if gm <= 0:
        return 1.0
    return float(-np.expm1(math.log(gm) / (w * d)))


def aggregate_shape(records, threshold: float = DEFAULT_THRESHOLD) -> ShapeAggregate:
    """Aggregate the records of one shape; failed records are counted and skipped.

    The shape is excluded when any fidelity falls below ``threshold``.  The
    error-rate standard error is first-order propagation of record stderrs.
    """
    records = list(records)
    if not records:
        raise ValueError("aggregate_shape needs at least one record")
    shapes = {(r.w, r.d) for r in records}
    if len(shapes) != 1:
        raise ValueError(f"records mix shapes {sorted(shapes)}")
    (w, d), = shapes
    good = [r for r in records if not r.failed]
    n_failed = len(records) - len(good)
    dropped = [r.dropped for r in records if r.dropped is not None]
    drop = float(np.mean(dropped)) if dropped else None
    if not good:
        return ShapeAggregate(w, d, 0, None, None, None, None, drop, True, "all records failed", n_failed)
    f = np.array([r.F for r in good])
    mean_f = float(f.mean())
    low = f < threshold
    if low.any():
        reason = f"{int(low.sum())} of {len(f)} fidelities below {threshold:g}"
        gm = geometric_mean(f)
        return ShapeAggregate(w, d, len(f), gm, None, None, mean_f, drop, True, reason, n_failed)
    gm = geometric_mean(f)
    eps = effective_error(gm, w, d)
    # d eps / d F_k = (1 - eps) / (w d K F_k)
    se = np.array([r.stderr for r in good])
    eps_se = float((1 - eps) / (w * d * len(f)) * math.sqrt(((se / f) ** 2).sum()))
    return ShapeAggregate(w, d, len(f), gm, eps, eps_se, mean_f, drop, False, None, n_failed)


def aggregate_records(records, threshold: float = DEFAULT_THRESHOLD) -> list[ShapeAggregate]:
    """One aggregate per shape present, sorted by (w, d)."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.w, r.d)].append(r)
    return [aggregate_shape(groups[s], threshold) for s in sorted(groups)]


def depth_average(aggregates) -> float:
    """Unweighted mean of ``eps`` over the non-excluded aggregates of one width."""
    aggregates = list(aggregates)
    widths = {a.w for a in aggregates}
    if len(widths) > 1:
        raise ValueError(f"depth_average got several widths {sorted(widths)}")
    vals = [a.eps for a in aggregates if not a.excluded and a.eps is not None]
    if not vals:
        w = next(iter(widths)) if widths else None
        raise UndefinedWidthError(f"no usable depth at width {w}")
    return float(np.mean(vals))


def eps_by_width(aggregates) -> dict[int, float]:
    """Depth-averaged error rate for every width with at least one usable depth."""
    groups = defaultdict(list)
    for a in aggregates:
        groups[a.w].append(a)
    out = {}
    for w in sorted(groups):
        try:
            out[w] = depth_average(groups[w])
        except UndefinedWidthError:
            continue
    return out


def predict_target_fidelity(eps: float, target_shape) -> float:
    """``log10((1 - eps)^(w_c*d_c))``."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    w_c, d_c = target_shape
    return float(w_c * d_c * math.log1p(-eps) / math.log(10))


@dataclass(frozen=True)
class CapabilitySummary:
    Q_T: float
    eps_2: float | None
    eps_wmax: float | None
    w_max: int | None
    Q_0: float | None
    Q_C: float | None
    F0_log10: float | None
    F_log10: float | None
    scalability: float | None
    capability: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _inv(x):
    return math.inf if x == 0 else 1.0 / x


def capability_summary(eps_w: dict, target_shape, strict: bool = True, w_max: int | None = None,
                       q_t: float | None = None) -> CapabilitySummary:
    """Quops and coefficients from a width -> error-rate table.

    ``w_max`` defaults to the widest width present.  With ``strict`` a missing
    width 2 or ``w_max`` raises; otherwise the dependent fields are None.
    ``q_t`` overrides the target quop count ``w_c*d_c``.
    """
    w_c, d_c = target_shape
    q_t = float(w_c * d_c) if q_t is None else float(q_t)
    w_max = max(eps_w) if (w_max is None and eps_w) else w_max
    missing = [w for w in (2, w_max) if w is None or w not in eps_w]
    if missing and strict:
        raise IncompleteDataError(sorted({w for w in missing if w is not None}) or [2])
    e2 = eps_w.get(2)
    ec = eps_w.get(w_max) if w_max is not None else None
    q0 = _inv(e2) if e2 is not None else None
    qc = _inv(ec) if ec is not None else None
    f0 = predict_target_fidelity(e2, (w_c, d_c)) if e2 is not None else None
    fc = predict_target_fidelity(ec, (w_c, d_c)) if ec is not None else None
    scal = qc / q0 if (q0 is not None and qc is not None) else None
    cap = qc / q_t if qc is not None else None
    return CapabilitySummary(q_t, e2, ec, w_max, q0, qc, f0, fc, scal, cap)


def summary_from_quops(q_0: float, q_c: float, target_shape, q_t: float | None = None) -> CapabilitySummary:
    """Summary built directly from tabulated quops, with eps = 1/Q and ``w_max = w_c``."""
    w_c, d_c = target_shape
    q_t = float(w_c * d_c) if q_t is None else float(q_t)
    e2, ec = 1.0 / q_0, 1.0 / q_c
    return CapabilitySummary(q_t, e2, ec, int(w_c), float(q_0), float(q_c),
                             predict_target_fidelity(e2, target_shape),
                             predict_target_fidelity(ec, target_shape), q_c / q_0, q_c / q_t)
