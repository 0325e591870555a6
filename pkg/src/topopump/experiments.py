"""Sweep and ensemble drivers: fidelity curves, phase diagrams, robustness.

Sweep points and ensemble members are independent work items that integrate
side by side in one batch; the batch composition is fixed by the experiment
definition, so results do not depend on how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .dynamics import evolve_batch, initial_state, target_state
from .errors import NumericalError
from .lattice import (
    ChainSpec,
    DisorderKind,
    DisorderSymmetry,
    LossModel,
    asymmetric_loss,
    interface_chain,
    uniform_loss,
)
from .protocol import DriveSchedule, derive_seed, sample_disorder

__all__ = [
    "FidelityCurve",
    "EnsembleStats",
    "PhaseDiagram",
    "CubicFit",
    "ScalingPoint",
    "protocol_factory",
    "fidelity_vs_time",
    "stabilization_time",
    "alpha_phase_diagram",
    "optimal_alpha",
    "disorder_ensemble",
    "loss_sweep",
    "stabilization_vs_size",
    "stabilization_vs_branches",
    "fidelity_vs_size_with_loss",
    "cubic_fit",
    "fitted_alpha_for_size",
    "cosine_time_budget",
    "exponential_time_budget",
]


def fitted_alpha_for_size(length: int) -> float:
    """Empirical cubic for the optimal exponential sharpness vs chain size."""
    return 1.2e-5 * length**3 - 0.0026 * length**2 + 0.22 * length - 0.33


def cosine_time_budget(length: int) -> float:
    """Empirical cubic for the cosine-drive 0.99-fidelity time vs chain size."""
    return 0.1 * length**3 - 0.46 * length**2 + 28.0 * length - 260.0


def exponential_time_budget(length: int) -> float:
    """Empirical cubic for the exponential-drive 0.99-fidelity time vs size."""
    return 0.00052 * length**3 + 0.059 * length**2 - 0.34 * length + 68.0


def protocol_factory(kind: str, *, j0: float = 1.0, alpha: float | None = None,
                     t_op: float | None = None, j1_0: float | None = None,
                     j2_0: float | None = None, vb_symmetric: bool = False):
    """Callable t_star -> DriveSchedule with everything else pinned."""

    def make(t_star: float) -> DriveSchedule:
        return DriveSchedule(kind, t_star, j0, alpha, t_op, j1_0, j2_0, vb_symmetric)

    return make


@dataclass(frozen=True)
class FidelityCurve:
    t_grid: np.ndarray
    fidelities: np.ndarray
    protocol: str
    label: str = ""

    def __post_init__(self) -> None:
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t* grid must be strictly increasing")


@dataclass(frozen=True)
class EnsembleStats:
    """Summary of one ensemble point (one disorder strength or loss rate)."""

    parameter: float
    mean_fidelity: float
    std_fidelity: float
    n_samples: int
    mean_abs_phase: float
    std_abs_phase: float
    n_phase_defined: int
    fidelities: np.ndarray
    phase_diffs: np.ndarray  # signed, nan where an end amplitude was too small


@dataclass(frozen=True)
class PhaseDiagram:
    alpha_grid: np.ndarray
    t_grid: np.ndarray
    fidelity: np.ndarray  # (n_alpha, n_t)
    thresholds: tuple[float, ...] = (0.9, 0.99)

    def stabilization_contour(self, threshold: float) -> np.ndarray:
        """Per-alpha stabilization time (inf where never stabilized)."""
        return np.array(
            [
                stabilization_time(FidelityCurve(self.t_grid, row, "row"), threshold)
                for row in self.fidelity
            ]
        )


@dataclass(frozen=True)
class CubicFit:
    coefficients: tuple[float, float, float, float]  # c3, c2, c1, c0
    residual_rms: float
    xs: np.ndarray
    ys: np.ndarray

    def predict(self, x) -> np.ndarray:
        return np.polyval(self.coefficients, x)


@dataclass(frozen=True)
class ScalingPoint:
    size: float
    alpha: float | None
    value: float  # stabilization time or fidelity, depending on the sweep


def fidelity_vs_time(
    spec: ChainSpec,
    schedule_for,
    t_grid,
    *,
    dt=None,
    disorder=None,
    loss=None,
    label: str = "",
) -> FidelityCurve:
    """One full propagation per grid point, integrated as a single batch."""
    t_grid = np.asarray(t_grid, dtype=float)
    schedules = [schedule_for(float(t)) for t in t_grid]
    finals = evolve_batch(spec, schedules, dt=dt, disorder=disorder, loss=loss)
    tgt = target_state(spec)
    fids = np.abs(finals @ tgt.conj()) ** 2
    return FidelityCurve(t_grid, fids, schedules[0].kind, label)


def stabilization_time(curve: FidelityCurve, threshold: float = 0.99) -> float:
    """Smallest scanned t* from which fidelity stays at or above the threshold.

    This is stabilization, not first crossing: oscillating curves may dip
    back below after an early crossing.  Returns inf when the tail of the
    scanned range never settles above the threshold.
    """
    ok = curve.fidelities >= threshold
    above_from_here = np.logical_and.accumulate(ok[::-1])[::-1]
    idx = np.nonzero(above_from_here)[0]
    if idx.size == 0:
        return float("inf")
    return float(curve.t_grid[idx[0]])


def alpha_phase_diagram(
    spec: ChainSpec,
    alpha_grid,
    t_grid,
    *,
    j0: float = 1.0,
    dt=None,
    vb_symmetric: bool = False,
) -> PhaseDiagram:
    """Fidelity over the (alpha, t*) plane for the exponential drive."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    schedules = [
        DriveSchedule("exponential", float(t), j0, alpha=float(a), vb_symmetric=vb_symmetric)
        for a in alpha_grid
        for t in t_grid
    ]
    finals = evolve_batch(spec, schedules, dt=dt)
    tgt = target_state(spec)
    fids = (np.abs(finals @ tgt.conj()) ** 2).reshape(len(alpha_grid), len(t_grid))
    return PhaseDiagram(alpha_grid, t_grid, fids)


def optimal_alpha(
    spec: ChainSpec,
    alpha_grid,
    t_grid,
    *,
    threshold: float = 0.99,
    j0: float = 1.0,
    dt=None,
) -> tuple[float, float]:
    """Sharpness minimizing the stabilization time; ties go to the milder drive."""
    diagram = alpha_phase_diagram(spec, alpha_grid, t_grid, j0=j0, dt=dt)
    times = diagram.stabilization_contour(threshold)
    if not np.any(np.isfinite(times)):
        raise NumericalError(
            f"no alpha in {list(diagram.alpha_grid)} stabilizes above {threshold} "
            f"within the scanned range"
        )
    best = int(np.argmin(times))  # argmin takes the first (smallest alpha) on ties
    return float(diagram.alpha_grid[best]), float(times[best])


def _phase_diffs(finals: np.ndarray, spec: ChainSpec) -> np.ndarray:
    """Signed end-port phase mismatch per member; nan where undefined."""
    ends = list(spec.output_sites)
    amps = finals[:, ends]
    defined = np.all(np.abs(amps) >= 1e-6, axis=1)
    phases = np.angle(amps)
    if len(ends) == 2:
        raw = phases[:, 0] - phases[:, 1]
        wrapped = (raw + np.pi) % (2.0 * np.pi) - np.pi
    else:
        diffs = []
        for i in range(len(ends)):
            for j in range(i + 1, len(ends)):
                d = (phases[:, i] - phases[:, j] + np.pi) % (2.0 * np.pi) - np.pi
                diffs.append(np.abs(d))
        wrapped = np.max(diffs, axis=0)
    return np.where(defined, wrapped, np.nan)


def _stats(parameter: float, fids: np.ndarray, phases: np.ndarray) -> EnsembleStats:
    m = len(fids)
    defined = np.isfinite(phases)
    abs_ph = np.abs(phases[defined])
    return EnsembleStats(
        parameter=float(parameter),
        mean_fidelity=float(np.mean(fids)),
        std_fidelity=float(np.std(fids, ddof=1)) if m > 1 else 0.0,
        n_samples=m,
        mean_abs_phase=float(np.mean(abs_ph)) if abs_ph.size else float("nan"),
        std_abs_phase=float(np.std(abs_ph, ddof=1)) if abs_ph.size > 1 else 0.0,
        n_phase_defined=int(defined.sum()),
        fidelities=fids,
        phase_diffs=phases,
    )


def disorder_ensemble(
    spec: ChainSpec,
    schedule: DriveSchedule,
    kind: DisorderKind,
    symmetry: DisorderSymmetry,
    strength: float,
    *,
    n_samples: int = 100,
    master_seed: int = 0,
    dt=None,
    loss: LossModel | None = None,
    granularity: str = "global",
) -> EnsembleStats:
    """Mean/std fidelity and phase mismatch over independent realizations.

    Realization i draws its own seed from (master_seed, i), so the ensemble
    is reproducible and independent of execution order.
    """
    if n_samples < 1:
        raise ValueError("need at least one realization")
    realizations = [
        sample_disorder(spec, kind, symmetry, strength, derive_seed(master_seed, i), granularity)
        for i in range(n_samples)
    ]
    schedules = [schedule] * n_samples
    finals = evolve_batch(spec, schedules, dt=dt, disorder=realizations, loss=loss)
    tgt = target_state(spec)
    fids = np.abs(finals @ tgt.conj()) ** 2
    return _stats(strength, fids, _phase_diffs(finals, spec))


def loss_sweep(
    spec: ChainSpec,
    schedule: DriveSchedule,
    gamma_grid,
    *,
    asymmetric: bool = False,
    n_samples: int = 20,
    master_seed: int = 0,
    dt=None,
) -> list[EnsembleStats]:
    """Final fidelity (and phase mismatch) per loss rate.

    Symmetric losses are deterministic (one run per rate); asymmetric mode
    draws the two b-sublattice detunings uniformly from [-0.1, 0.1] per
    realization and averages.
    """
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    out = []
    tgt = target_state(spec)
    for g_idx, gamma in enumerate(gamma_grid):
        if asymmetric:
            losses = []
            for i in range(n_samples):
                rng = np.random.Generator(
                    np.random.Philox(key=derive_seed(master_seed, g_idx * n_samples + i))
                )
                deltas = rng.uniform(-0.1, 0.1, 2)
                losses.append(asymmetric_loss(spec, float(gamma), tuple(deltas)))
            schedules = [schedule] * n_samples
        else:
            losses = [uniform_loss(spec, float(gamma))]
            schedules = [schedule]
        finals = evolve_batch(spec, schedules, dt=dt, loss=losses)
        fids = np.abs(finals @ tgt.conj()) ** 2
        out.append(_stats(float(gamma), fids, _phase_diffs(finals, spec)))
    return out


def _interface_for_length(length: int) -> ChainSpec:
    if length % 2 == 0 or (length - 1) // 2 % 2 != 0:
        raise ValueError(
            f"chain length {length} does not give an interface chain with an even cell count"
        )
    return interface_chain((length - 1) // 2)


def stabilization_vs_size(
    lengths,
    kind: str,
    t_grid_for,
    *,
    alpha_for=fitted_alpha_for_size,
    threshold: float = 0.99,
    dt=None,
    j0: float = 1.0,
) -> list[ScalingPoint]:
    """Stabilization time against chain length, one fidelity scan per length."""
    out = []
    for length in lengths:
        spec = _interface_for_length(int(length))
        alpha = float(alpha_for(int(length))) if kind == "exponential" else None
        factory = protocol_factory(kind, j0=j0, alpha=alpha)
        curve = fidelity_vs_time(spec, factory, t_grid_for(int(length)), dt=dt)
        out.append(ScalingPoint(float(length), alpha, stabilization_time(curve, threshold)))
    return out


def stabilization_vs_branches(
    branch_counts,
    branch_sites: int,
    t_grid,
    *,
    alpha: float = 3.2,
    kind: str = "exponential",
    threshold: float = 0.99,
    dt=None,
    j0: float = 1.0,
) -> list[ScalingPoint]:
    """Stabilization time against the number of router branches."""
    from .lattice import router as make_router

    out = []
    factory = protocol_factory(kind, j0=j0, alpha=alpha if kind == "exponential" else None)
    for k in branch_counts:
        spec = make_router(int(k), branch_sites)
        curve = fidelity_vs_time(spec, factory, t_grid, dt=dt)
        out.append(ScalingPoint(float(k), alpha, stabilization_time(curve, threshold)))
    return out


def fidelity_vs_size_with_loss(
    lengths,
    gamma: float,
    kind: str,
    *,
    alpha_for=fitted_alpha_for_size,
    budget_for=None,
    dt=None,
    j0: float = 1.0,
) -> list[ScalingPoint]:
    """Final fidelity against chain length at fixed uniform loss.

    Each length runs for its protocol's empirical time budget, which keeps
    the lossless transfer at the 0.99 level.
    """
    if budget_for is None:
        budget_for = cosine_time_budget if kind == "cosine" else exponential_time_budget
    out = []
    tgt_cache = {}
    for length in lengths:
        spec = _interface_for_length(int(length))
        alpha = float(alpha_for(int(length))) if kind == "exponential" else None
        schedule = DriveSchedule(kind, float(budget_for(int(length))), j0, alpha=alpha)
        finals = evolve_batch(spec, [schedule], dt=dt, loss=uniform_loss(spec, gamma))
        if spec.n_sites not in tgt_cache:
            tgt_cache[spec.n_sites] = target_state(spec)
        fid = float(np.abs(finals[0] @ tgt_cache[spec.n_sites].conj()) ** 2)
        out.append(ScalingPoint(float(length), alpha, fid))
    return out


def cubic_fit(xs, ys) -> CubicFit:
    """Ordinary least-squares cubic polynomial through (xs, ys)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < 4:
        raise ValueError("cubic fit needs at least 4 distinct x values")
    coeffs = np.polyfit(xs, ys, 3)
    resid = ys - np.polyval(coeffs, xs)
    return CubicFit(tuple(float(c) for c in coeffs), float(np.sqrt(np.mean(resid**2))), xs, ys)
