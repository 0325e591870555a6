"""Batched fixed-step RK4 propagator over stream-parameterized lattices.

The Hamiltonian of every supported topology is H(t) = J1(t) B1 + J2(t) B2
+ Va(t) Da + Vb(t) Db - i diag(rates), where the B/D structure matrices are
static (they absorb disorder factors).  Chains are stored as one
tridiagonal band; router hub bonds are kept as explicit extra edges.  All
arrays carry an optional leading batch axis so that a parameter sweep or a
disorder ensemble integrates as a single vectorized run, one member per
row.  Every per-element operation is independent of batch composition, so
results are bitwise identical however a workload is split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, StabilityError
from .lattice import ChainSpec, DisorderRealization, LossModel, Topology

__all__ = ["CompiledSystem", "compile_system", "stack_systems", "integrate", "default_dt"]

STABILITY_LIMIT = 0.1
MAX_FRAMES = 500


def default_dt(t_star: float, j0: float = 1.0) -> float:
    """Default integrator step: min(0.005/j0, t_star/20000)."""
    return min(0.005 / j0, t_star / 20000.0)


@dataclass
class CompiledSystem:
    """Static structure arrays; leading batch axis optional on all of them."""

    n_sites: int
    a_diag: np.ndarray  # (..., L) 1.0 on a-sites times site factor
    b_diag: np.ndarray
    band1: np.ndarray  # (..., L-1) J1-stream weight on bond (i, i+1)
    band2: np.ndarray
    hub: int | None
    hub_j: np.ndarray  # (n_extra,) neighbor site of each hub edge
    hub1: np.ndarray  # (..., n_extra) stream weights of hub edges
    hub2: np.ndarray
    loss: np.ndarray | None  # (..., L) decay rates

    @property
    def batched(self) -> bool:
        return self.a_diag.ndim == 2


def compile_system(
    spec: ChainSpec,
    disorder: DisorderRealization | None = None,
    loss: LossModel | None = None,
) -> CompiledSystem:
    L = spec.n_sites
    site_f = np.ones(L) if disorder is None else disorder.site_factors
    bond_f = np.ones(len(spec.bonds)) if disorder is None else disorder.bond_factors
    if disorder is not None:
        disorder.validate_for(spec)
    a_diag = np.where(spec.site_is_b, 0.0, site_f)
    b_diag = np.where(spec.site_is_b, site_f, 0.0)
    band1 = np.zeros(L - 1)
    band2 = np.zeros(L - 1)
    hub = spec.hub_index if spec.topology is Topology.ROUTER else None
    hub_j: list[int] = []
    hub1: list[float] = []
    hub2: list[float] = []
    for idx, (i, j, role) in enumerate(spec.bonds):
        f = bond_f[idx]
        if hub is not None and j == hub:
            hub_j.append(i)
            hub1.append(f if role == 1 else 0.0)
            hub2.append(f if role == 2 else 0.0)
        elif j == i + 1:
            (band1 if role == 1 else band2)[i] = f
        else:  # pragma: no cover - topologies above exhaust the bond kinds
            raise NotImplementedError("unsupported bond layout")
    rates = None if loss is None else loss.site_rates.astype(float)
    return CompiledSystem(
        L,
        a_diag,
        b_diag,
        band1,
        band2,
        hub,
        np.array(hub_j, dtype=int),
        np.array(hub1),
        np.array(hub2),
        rates,
    )


def stack_systems(systems: list[CompiledSystem]) -> CompiledSystem:
    """Stack per-realization systems into one batched system."""
    first = systems[0]
    any_loss = any(s.loss is not None for s in systems)
    loss = None
    if any_loss:
        loss = np.stack(
            [s.loss if s.loss is not None else np.zeros(s.n_sites) for s in systems]
        )
    return CompiledSystem(
        first.n_sites,
        np.stack([s.a_diag for s in systems]),
        np.stack([s.b_diag for s in systems]),
        np.stack([s.band1 for s in systems]),
        np.stack([s.band2 for s in systems]),
        first.hub,
        first.hub_j,
        np.stack([s.hub1 for s in systems]),
        np.stack([s.hub2 for s in systems]),
        loss,
    )


def _h_apply(sysm: CompiledSystem, j1, j2, va, vb, psi: np.ndarray) -> np.ndarray:
    """H(t) psi for a batch: psi (n, L), stream values (n,)."""
    diag = va[:, None] * sysm.a_diag + vb[:, None] * sysm.b_diag
    band = j1[:, None] * sysm.band1 + j2[:, None] * sysm.band2
    out = diag * psi
    out[:, :-1] += band * psi[:, 1:]
    out[:, 1:] += band * psi[:, :-1]
    if sysm.hub is not None and sysm.hub_j.size:
        w = j1[:, None] * sysm.hub1 + j2[:, None] * sysm.hub2
        out[:, sysm.hub] += np.sum(w * psi[:, sysm.hub_j], axis=1)
        out[:, sysm.hub_j] += w * psi[:, sysm.hub, None]
    if sysm.loss is not None:
        out += (-1j) * (sysm.loss * psi)
    return out


def _norm_bound(sysm: CompiledSystem, values_fn, t_stars: np.ndarray) -> np.ndarray:
    """Per-member upper bound on max_t ||H(t)|| via a conservative row-sum cap."""
    n = len(t_stars)
    bound = np.zeros(n)
    site_cap = float(np.max(sysm.a_diag + sysm.b_diag))
    band_cap = float(np.max(np.abs(sysm.band1) + np.abs(sysm.band2)))
    hub_cap = 0.0
    if sysm.hub is not None and sysm.hub_j.size:
        hub_cap = float(np.max(np.sum(np.abs(sysm.hub1) + np.abs(sysm.hub2), axis=-1)))
    loss_cap = 0.0 if sysm.loss is None else float(np.max(sysm.loss))
    for frac in np.linspace(0.0, 1.0, 129):
        j1, j2, va, vb = values_fn(frac * t_stars)
        vmax = np.maximum(np.abs(va), np.abs(vb))
        jmax = np.maximum(np.abs(j1), np.abs(j2))
        row = vmax * site_cap + jmax * (2.0 * band_cap + hub_cap) + loss_cap
        bound = np.maximum(bound, row)
    return bound


def integrate(
    sysm: CompiledSystem,
    values_fn,
    t_stars: np.ndarray,
    dt,
    psi0: np.ndarray,
    n_frames: int = 0,
):
    """Propagate i dpsi/dt = H(t) psi on uniform per-member grids.

    Parameters
    ----------
    values_fn : callable mapping a time vector (n,) to stream values (4 x (n,)).
    t_stars : (n,) final times; each member stops at its own t*.
    dt : requested step, scalar or per-member; the actual step divides t*
        exactly and never exceeds the request.
    psi0 : (n, L) initial amplitudes.
    n_frames : if nonzero (single member only), record up to ``n_frames``
        uniformly spaced snapshots of populations and norm.

    Returns
    -------
    finals : (n, L) state of each member at its own t*.
    frames : None, or (times, populations, norms) for the single member.
    """
    t_stars = np.asarray(t_stars, dtype=float)
    n = len(t_stars)
    dt_req = np.broadcast_to(np.asarray(dt, dtype=float), (n,))
    if np.any(dt_req <= 0):
        raise ValueError("dt must be positive")
    bound = _norm_bound(sysm, values_fn, t_stars)
    worst = float(np.max(dt_req * bound))
    if worst > STABILITY_LIMIT:
        raise StabilityError(
            f"dt * max||H|| = {worst:.3g} exceeds the stability guard {STABILITY_LIMIT}"
        )
    n_steps = np.maximum(1, np.ceil(t_stars / dt_req - 1e-9).astype(int))
    dts = t_stars / n_steps
    n_max = int(n_steps.max())

    psi = np.array(psi0, dtype=complex, copy=True)
    if psi.shape != (n, sysm.n_sites):
        raise ValueError("psi0 shape does not match the batch")
    finals = np.empty_like(psi)

    frames = None
    frame_steps: np.ndarray | None = None
    next_frame = 1
    if n_frames:
        if n != 1:
            raise ValueError("frame recording expects a single-member batch")
        count = min(int(n_steps[0]) + 1, max(2, min(n_frames, MAX_FRAMES)))
        frame_steps = np.unique(np.round(np.linspace(0, n_steps[0], count)).astype(int))
        f_times = frame_steps * dts[0]
        f_pops = np.empty((len(frame_steps), sysm.n_sites))
        f_norms = np.empty(len(frame_steps))
        f_pops[0] = np.abs(psi[0]) ** 2
        f_norms[0] = np.sqrt(f_pops[0].sum())
        frames = (f_times, f_pops, f_norms)

    t = np.zeros(n)
    check_interval = 4096
    for step in range(n_max):
        h = dts
        v1 = values_fn(np.minimum(t, t_stars))
        vh = values_fn(np.minimum(t + 0.5 * h, t_stars))
        v2 = values_fn(np.minimum(t + h, t_stars))
        k1 = _h_apply(sysm, *v1, psi)
        k2 = _h_apply(sysm, *vh, psi - (0.5j * h)[:, None] * k1)
        k3 = _h_apply(sysm, *vh, psi - (0.5j * h)[:, None] * k2)
        k4 = _h_apply(sysm, *v2, psi - (1j * h)[:, None] * k3)
        psi = psi - (1j * h / 6.0)[:, None] * (k1 + 2.0 * (k2 + k3) + k4)
        t = t + h
        completed = step + 1
        just_done = n_steps == completed
        if np.any(just_done):
            finals[just_done] = psi[just_done]
        if frame_steps is not None and next_frame < len(frame_steps) and completed == frame_steps[next_frame]:
            f_pops[next_frame] = np.abs(psi[0]) ** 2
            f_norms[next_frame] = np.sqrt(f_pops[next_frame].sum())
            if not np.isfinite(f_norms[next_frame]):
                raise NumericalError(f"non-finite amplitudes at step {completed}")
            next_frame += 1
        if completed % check_interval == 0 and not np.all(np.isfinite(psi)):
            bad = np.nonzero(~np.all(np.isfinite(psi), axis=1))[0]
            raise NumericalError(
                f"non-finite amplitudes at step {completed} (members {bad[:8].tolist()})"
            )
    if not np.all(np.isfinite(finals)):
        raise NumericalError("non-finite amplitudes in final states")
    return finals, frames
