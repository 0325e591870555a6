"""Time evolution of site-basis amplitudes and the transfer observables.

The integrator is a classical fixed-step fourth-order Runge-Kutta scheme
applied to i dpsi/dt = H(t) psi, with H evaluated at the substep times.
The same path handles the lossy, non-Hermitian Hamiltonian: for a pure
initial state this is exactly the quoted Liouville dynamics followed by
the fidelity functional, at vector instead of matrix cost.  Fidelity is
measured against the unit-norm target without renormalizing the evolved
state, so population loss shows up as reduced fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine
from .errors import PhaseUndefinedError, TopologyError
from .lattice import ChainSpec, DisorderRealization, LossModel, Topology
from .protocol import DriveSchedule, batch_evaluator

__all__ = [
    "EvolutionResult",
    "initial_state",
    "target_state",
    "evolve",
    "evolve_batch",
    "phase_difference",
    "convergence_check",
]


@dataclass(frozen=True)
class EvolutionResult:
    """Full record of one propagation run."""

    final_state: np.ndarray
    fidelity: float
    times: np.ndarray
    populations: np.ndarray  # (n_frames, n_sites)
    norms: np.ndarray
    phase_profile: np.ndarray  # arg of the final amplitudes
    target: np.ndarray


def initial_state(spec: ChainSpec) -> np.ndarray:
    """Unit amplitude on the input port (hub, or left edge for odd chains)."""
    site = spec.input_site
    if site is None:
        raise TopologyError("the plain even chain has no designated input port")
    psi = np.zeros(spec.n_sites, dtype=complex)
    psi[site] = 1.0
    return psi


def target_state(spec: ChainSpec) -> np.ndarray:
    """Equal-amplitude, equal-phase superposition of the output ports."""
    ends = spec.output_sites
    if not ends:
        raise TopologyError("the plain even chain has no designated output ports")
    psi = np.zeros(spec.n_sites, dtype=complex)
    psi[list(ends)] = 1.0 / np.sqrt(len(ends))
    return psi


def evolve(
    spec: ChainSpec,
    schedule: DriveSchedule,
    *,
    dt: float | None = None,
    disorder: DisorderRealization | None = None,
    loss: LossModel | None = None,
    initial: np.ndarray | None = None,
    target: np.ndarray | None = None,
    n_frames: int = _engine.MAX_FRAMES,
) -> EvolutionResult:
    """Propagate one run from t=0 to t=t* and collect observables."""
    if dt is None:
        dt = _engine.default_dt(schedule.t_star, schedule.j0)
    system = _engine.compile_system(spec, disorder, loss)
    t_stars, values_fn = batch_evaluator([schedule])
    psi0 = initial_state(spec) if initial is None else np.asarray(initial, dtype=complex)
    tgt = target_state(spec) if target is None else np.asarray(target, dtype=complex)
    finals, frames = _engine.integrate(
        system, values_fn, t_stars, dt, psi0[None, :], n_frames=max(2, n_frames)
    )
    final = finals[0]
    times, pops, norms = frames
    fidelity = float(np.abs(np.vdot(tgt, final)) ** 2)
    return EvolutionResult(final, fidelity, times, pops, norms, np.angle(final), tgt)


def evolve_batch(
    spec: ChainSpec,
    schedules: list[DriveSchedule],
    *,
    dt=None,
    disorder=None,
    loss=None,
) -> np.ndarray:
    """Final states for many runs integrated side by side; returns (n, L).

    ``disorder`` and ``loss`` may be single objects (shared) or sequences
    with one entry per schedule.
    """
    n = len(schedules)
    t_stars, values_fn = batch_evaluator(schedules)
    if dt is None:
        dt = np.array([_engine.default_dt(s.t_star, s.j0) for s in schedules])

    def per_member(obj, kind):
        if obj is None or isinstance(obj, kind):
            return [obj] * n
        if len(obj) != n:
            raise ValueError("need one disorder/loss entry per schedule")
        return list(obj)

    disorders = per_member(disorder, DisorderRealization)
    losses = per_member(loss, LossModel)
    if all(d is disorders[0] for d in disorders) and all(l is losses[0] for l in losses):
        system = _engine.compile_system(spec, disorders[0], losses[0])
    else:
        system = _engine.stack_systems(
            [_engine.compile_system(spec, d, l) for d, l in zip(disorders, losses)]
        )
    psi0 = np.tile(initial_state(spec), (n, 1))
    finals, _ = _engine.integrate(system, values_fn, t_stars, dt, psi0)
    return finals


def phase_difference(state: np.ndarray | EvolutionResult, spec: ChainSpec) -> float:
    """Phase mismatch between output ports, wrapped to (-pi, pi].

    For two ports this is arg(psi_first) - arg(psi_last); routers report
    the largest pairwise mismatch.
    """
    psi = state.final_state if isinstance(state, EvolutionResult) else np.asarray(state)
    ends = spec.output_sites
    if len(ends) < 2:
        raise TopologyError("phase difference needs at least two output ports")
    amps = psi[list(ends)]
    if np.any(np.abs(amps) < 1e-6):
        raise PhaseUndefinedError(
            "an output-port amplitude is below 1e-6; its phase carries no information"
        )
    phases = np.angle(amps)
    if len(ends) == 2:
        return _wrap(phases[0] - phases[1])
    diffs = [
        abs(_wrap(phases[i] - phases[j]))
        for i in range(len(ends))
        for j in range(i + 1, len(ends))
    ]
    return float(max(diffs))


def _wrap(phi: float) -> float:
    out = (phi + np.pi) % (2.0 * np.pi) - np.pi
    if out == -np.pi:
        out = np.pi
    return float(out)


def convergence_check(
    spec: ChainSpec,
    schedule: DriveSchedule,
    dt: float,
    **kwargs,
) -> tuple[float, float, float]:
    """Fidelity at dt and dt/2 plus their absolute difference (step audit)."""
    f1 = evolve(spec, schedule, dt=dt, n_frames=2, **kwargs).fidelity
    f2 = evolve(spec, schedule, dt=dt / 2.0, n_frames=2, **kwargs).fidelity
    return f1, f2, abs(f1 - f2)
