"""Eigen-analysis: dispersion, winding number, edge states, gap tracking.

Eigenvectors are gauge-fixed by making each vector's largest-magnitude
component real and positive, so overlaps and continuity tracking are
deterministic across library versions and batch layouts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearDegeneracyError, NumericalError, TrackingError
from .lattice import (
    ChainSpec,
    CouplingPoint,
    DisorderRealization,
    DisorderSymmetry,
    HamiltonianMatrix,
    Topology,
    _assemble,
    build_hamiltonian,
)
from .protocol import DriveSchedule

__all__ = [
    "SpectrumSnapshot",
    "EdgeStatePair",
    "GapTrack",
    "dispersion",
    "d_vector",
    "winding_number",
    "eigendecompose",
    "analytic_edge_states",
    "analytic_gap_state",
    "gap_tracking",
    "adiabaticity_metric",
]

EIG_DIM_CAP = 1024


@dataclass(frozen=True)
class SpectrumSnapshot:
    """One full eigendecomposition; eigenvectors are the columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap_state_index: int | None = None
    min_neighbor_gap: float | None = None


@dataclass(frozen=True)
class EdgeStatePair:
    """Ideal exponentially-localized edge states of the even chain."""

    left: np.ndarray
    right: np.ndarray
    hybrid_energy: float  # |E| of the pair hybridized by the finite overlap
    xi: float  # localization factor -J1/J2


@dataclass(frozen=True)
class GapTrack:
    """Gap state followed through a drive by eigenvector continuity."""

    times: np.ndarray
    energies: np.ndarray
    min_gaps: np.ndarray
    states: np.ndarray  # (n_times, L)

    @property
    def min_gap(self) -> float:
        return float(self.min_gaps.min())


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = np.array(vectors, dtype=complex, copy=True)
    idx = np.argmax(np.abs(out), axis=0)
    pivots = out[idx, np.arange(out.shape[1])]
    scale = np.where(np.abs(pivots) > 0, pivots / np.maximum(np.abs(pivots), 1e-300), 1.0)
    return out / scale[None, :]


def dispersion(k, c: CouplingPoint):
    """Band energies (E-, E+) = -/+ sqrt(Va^2 + J1^2 + J2^2 + 2 J1 J2 cos k).

    Requires the staggered-onsite convention Vb = -Va.
    """
    if abs(c.va + c.vb) > 1e-12:
        raise ValueError("dispersion assumes staggered onsite energies vb = -va")
    e = np.sqrt(c.va**2 + c.j1**2 + c.j2**2 + 2.0 * c.j1 * c.j2 * np.cos(k))
    return -e, e


def d_vector(k, c: CouplingPoint):
    """Bloch vector components (dx, dy, dz) = (J1 + J2 cos k, J2 sin k, Va)."""
    k = np.asarray(k, dtype=float)
    return c.j1 + c.j2 * np.cos(k), c.j2 * np.sin(k), np.broadcast_to(c.va, k.shape)


def winding_number(c: CouplingPoint, n_k: int = 4096) -> tuple[int, float]:
    """Integer winding of (dx, dy) about the origin over the Brillouin zone.

    Computed by accumulating wrapped angle increments on an n_k-point grid,
    which is exactly quantized up to accumulation rounding.  Returns
    (winding, raw accumulated value).
    """
    if abs(c.va) > 1e-12 or abs(c.vb) > 1e-12:
        raise ValueError("winding number is defined for the chiral-symmetric case va = vb = 0")
    if n_k < 8:
        raise ValueError("n_k too small")
    k = np.linspace(-np.pi, np.pi, n_k + 1)
    z = c.j1 + c.j2 * np.exp(1j * k)
    if np.min(np.abs(z)) < 1e-12:
        raise ValueError("winding undefined: the Bloch loop passes through the origin (j1 = j2)")
    theta = np.angle(z)
    inc = np.diff(theta)
    inc -= 2.0 * np.pi * np.round(inc / (2.0 * np.pi))
    raw = float(inc.sum() / (2.0 * np.pi))
    w = int(np.round(raw))
    if abs(raw - w) > 1e-3:
        raise NumericalError(f"winding grid too coarse: raw value {raw} not near an integer")
    return w, raw


def eigendecompose(h: HamiltonianMatrix | np.ndarray, max_dim: int = EIG_DIM_CAP) -> SpectrumSnapshot:
    """Full dense eigendecomposition with deterministic eigenvector gauge.

    Hermitian input goes through the symmetric solver (ascending real
    eigenvalues, orthonormal vectors); lossy input through the general
    solver, sorted by real part.
    """
    if isinstance(h, HamiltonianMatrix):
        matrix, hermitian = h.matrix, h.hermitian
    else:
        matrix = np.asarray(h)
        hermitian = bool(np.allclose(matrix, matrix.conj().T, atol=1e-12))
    if matrix.shape[0] > max_dim:
        raise ValueError(f"dimension {matrix.shape[0]} exceeds the solver cap {max_dim}")
    try:
        if hermitian:
            vals, vecs = np.linalg.eigh(matrix)
        else:
            vals, vecs = np.linalg.eig(matrix)
            order = np.argsort(vals.real, kind="stable")
            vals, vecs = vals[order], vecs[:, order]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on a {matrix.shape[0]}-dim matrix: {exc}") from exc
    return SpectrumSnapshot(vals, _fix_phase(vecs))


def analytic_edge_states(n_cells: int, j1: float, j2: float) -> EdgeStatePair:
    """Ideal left/right edge states of the even chain and their hybrid energy.

    The left state lives on a-sites with amplitudes xi^m, the right state
    mirrors it on b-sites, and the finite-size coupling gives the energy
    pair +/- |J2 xi^N (xi^2 - 1) / (xi^(2N) - 1)|, exact only in the
    large-N, well-localized regime.
    """
    if j2 <= 0:
        raise ValueError("intercell coupling must be positive")
    if not 0 <= j1 < j2:
        raise ValueError("edge states require the localized phase j1/j2 < 1")
    xi = -j1 / j2
    n = n_cells
    left = np.zeros(2 * n)
    right = np.zeros(2 * n)
    left[0::2] = xi ** np.arange(n)
    right[1::2] = xi ** (n - 1 - np.arange(n))
    left /= np.linalg.norm(left)
    right /= np.linalg.norm(right)
    overlap = -j2 * xi**n * (xi**2 - 1.0) / (xi ** (2 * n) - 1.0)
    return EdgeStatePair(left, right, abs(float(overlap)), xi)


def _gap_exponents(spec: ChainSpec) -> np.ndarray:
    """Distance (in cells) of each a-site from its reference end; -1 on b-sites."""
    exps = np.full(spec.n_sites, -1, dtype=int)
    if spec.topology is Topology.ODD_SSH:
        exps[0::2] = np.arange(spec.n_cells + 1)
    elif spec.topology is Topology.INTERFACE:
        m = np.arange(spec.n_cells + 1)
        exps[0::2] = np.minimum(m, spec.n_cells - m)
    elif spec.topology is Topology.ROUTER:
        half = spec.n_cells // 2
        for branch in range(spec.n_branches):
            base = branch * spec.n_cells
            exps[base : base + spec.n_cells : 2] = np.arange(half)
        exps[-1] = half
    else:
        raise ValueError("the even chain has no single gap state")
    return exps


def analytic_gap_state(spec: ChainSpec, j1: float, j2: float) -> np.ndarray:
    """Normalized in-gap eigenstate with amplitude xi^distance on a-sites.

    For the interface chain and router the amplitude pattern decays from
    every outer end toward the hub (or the reverse for j1 > j2); the j2=0
    limit is the state exactly localized on the hub (or the far edge for
    the odd chain).
    """
    if j1 < 0 or j2 < 0:
        raise ValueError("couplings must be non-negative")
    exps = _gap_exponents(spec)
    a_sites = exps >= 0
    vec = np.zeros(spec.n_sites)
    if j2 == 0.0:
        vec[np.argmax(exps)] = 1.0
        return vec
    ratio = j1 / j2
    e = exps[a_sites].astype(float)
    if ratio > 1.0:
        mags = ratio ** (e - e.max())
    else:
        mags = ratio**e
    vec[a_sites] = mags * (-1.0) ** exps[a_sites]
    vec /= np.linalg.norm(vec)
    piv = np.argmax(np.abs(vec))
    if vec[piv] < 0:
        vec = -vec
    return vec


def _symmetric_sector_basis(spec: ChainSpec) -> np.ndarray | None:
    """Orthonormal basis of the mirror/branch-symmetric subspace, or None.

    The drive starts from a fully symmetric state and the clean (or
    mirror-disordered) Hamiltonian commutes with the lattice symmetry, so
    only this sector is dynamically reachable.  The odd chain's bond
    pattern is not reversal-symmetric, so it has no such sector.
    """
    L = spec.n_sites
    if spec.topology is Topology.ROUTER:
        n, k = spec.n_cells, spec.n_branches
        cols = []
        for m in range(n):
            v = np.zeros(L)
            v[[b * n + m for b in range(k)]] = 1.0 / np.sqrt(k)
            cols.append(v)
        hub = np.zeros(L)
        hub[-1] = 1.0
        cols.append(hub)
        return np.column_stack(cols)
    if spec.topology is Topology.ODD_SSH:
        return None
    cols = []
    for i in range(L // 2):
        v = np.zeros(L)
        v[i] = v[L - 1 - i] = 1.0 / np.sqrt(2.0)
        cols.append(v)
    if L % 2:
        v = np.zeros(L)
        v[L // 2] = 1.0
        cols.append(v)
    return np.column_stack(cols)


def gap_tracking(
    spec: ChainSpec,
    schedule: DriveSchedule,
    t_grid: np.ndarray,
    disorder: DisorderRealization | None = None,
) -> GapTrack:
    """Follow the in-gap state along a drive by maximal eigenvector overlap.

    Seeded at the first grid time by the analytic gap state of the initial
    couplings (the bare hub vector when J2(0)=0).  Reports the followed
    state's energy and its distance to the nearest spectral neighbor at
    every time.  Whenever the lattice symmetry holds (clean or
    mirror-symmetric disorder on a symmetric topology), neighbors are taken
    inside the symmetric sector: antisymmetric levels never couple to the
    pumped state, so they do not limit adiabaticity -- in particular the
    odd partner that degenerates with the gap state at the drive endpoints
    is excluded.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    basis = _symmetric_sector_basis(spec)
    if disorder is not None and disorder.symmetry is not DisorderSymmetry.MIRROR:
        basis = None
    c0 = schedule.couplings(t_grid[0])
    seed = analytic_gap_state(spec, c0.j1, c0.j2).astype(complex)
    prev = seed if basis is None else basis.T @ seed
    energies = np.empty(len(t_grid))
    min_gaps = np.empty(len(t_grid))
    states = np.empty((len(t_grid), spec.n_sites), dtype=complex)
    for i, t in enumerate(t_grid):
        h = build_hamiltonian(spec, schedule.couplings(t), disorder).matrix
        if basis is not None:
            h = basis.T @ h @ basis
        snap = eigendecompose(HamiltonianMatrix(h, hermitian=True))
        overlaps = np.abs(prev.conj() @ snap.eigenvectors)
        idx = int(np.argmax(overlaps))
        if overlaps[idx] < 0.5:
            raise TrackingError(
                f"gap-state continuity lost at t={t} (best overlap {overlaps[idx]:.3f}); "
                "refine the time grid"
            )
        vals = snap.eigenvalues
        neighbors = []
        if idx > 0:
            neighbors.append(abs(vals[idx] - vals[idx - 1]))
        if idx < len(vals) - 1:
            neighbors.append(abs(vals[idx + 1] - vals[idx]))
        energies[i] = vals[idx].real
        min_gaps[i] = min(neighbors)
        prev = snap.eigenvectors[:, idx]
        states[i] = prev if basis is None else basis @ prev
    return GapTrack(t_grid, energies, min_gaps, states)


def adiabaticity_metric(
    spec: ChainSpec,
    schedule: DriveSchedule,
    t: float,
    disorder: DisorderRealization | None = None,
) -> float:
    """Sum over bulk states of |<m| dH/dt |gap>| / |E_m - E_gap|.

    Values well below 1 indicate the drive is adiabatic at time t.
    """
    c = schedule.couplings(t)
    if not all(np.isfinite(x) for x in (c.dj1, c.dj2, c.dva, c.dvb)):
        raise ValueError(f"drive derivative is unbounded at t={t}; evaluate at an interior time")
    snap = eigendecompose(build_hamiltonian(spec, c, disorder))
    reference = analytic_gap_state(spec, c.j1, c.j2)
    n = int(np.argmax(np.abs(reference @ snap.eigenvectors)))
    bf = sf = None
    if disorder is not None:
        bf, sf = disorder.bond_factors, disorder.site_factors
    dh = _assemble(spec, c.dj1, c.dj2, c.dva, c.dvb, bf, sf)
    couplings_to_gap = snap.eigenvectors.conj().T @ (dh @ snap.eigenvectors[:, n])
    gaps = np.abs(snap.eigenvalues - snap.eigenvalues[n])
    total = 0.0
    for m in range(len(gaps)):
        if m == n or abs(couplings_to_gap[m]) < 1e-12:
            continue  # uncoupled levels (e.g. the odd-parity partner) contribute nothing
        if gaps[m] < 1e-12:
            raise NearDegeneracyError(
                f"level {m} is degenerate with the gap state at t={t} (gap {gaps[m]:.2e})"
            )
        total += abs(couplings_to_gap[m]) / gaps[m]
    return float(total)
