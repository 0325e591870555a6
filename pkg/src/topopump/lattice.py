"""Lattice geometries and Hamiltonian builders for generalized SSH chains.

The four supported topologies are a dimerized chain with an even or odd
number of sites, a mirror-symmetric interface chain (two even chains
sharing one central a-type site), and a star-shaped router (K even chains
sharing one hub a-type site).  Every bond of a lattice carries one of two
coupling streams, J1 or J2, and every site one of two onsite streams,
Va or Vb; time-dependent drives only move the four stream values, never
the structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import TopologyError

__all__ = [
    "Topology",
    "ChainSpec",
    "CouplingPoint",
    "HamiltonianMatrix",
    "DisorderKind",
    "DisorderSymmetry",
    "DisorderRealization",
    "LossModel",
    "even_chain",
    "odd_chain",
    "interface_chain",
    "router",
    "build_ssh_hamiltonian",
    "build_interface_hamiltonian",
    "build_router_hamiltonian",
    "build_bloch_hamiltonian",
    "build_hamiltonian",
    "apply_disorder",
    "apply_loss",
    "uniform_loss",
    "asymmetric_loss",
]

HERMITICITY_TOL = 1e-12


class Topology(Enum):
    EVEN_SSH = "even"
    ODD_SSH = "odd"
    INTERFACE = "interface"
    ROUTER = "router"


@dataclass(frozen=True)
class CouplingPoint:
    """Instantaneous values (and time derivatives) of the four drive streams.

    Couplings are real and non-negative; energies are in units of the drive
    amplitude and times in its inverse.
    """

    j1: float
    j2: float
    va: float = 0.0
    vb: float = 0.0
    dj1: float = 0.0
    dj2: float = 0.0
    dva: float = 0.0
    dvb: float = 0.0

    def __post_init__(self) -> None:
        if self.j1 < 0 or self.j2 < 0:
            raise ValueError(f"couplings must be non-negative, got j1={self.j1}, j2={self.j2}")


@dataclass(frozen=True)
class ChainSpec:
    """Topology descriptor: which lattice, how many cells, how many branches.

    ``n_cells`` follows the natural count of each topology: the number of
    unit cells for the plain chains (2N or 2N+1 sites) and for the
    interface chain (2N+1 sites, N even), and the number of sites per
    branch for the router (K*N+1 sites, N even).
    """

    topology: Topology
    n_cells: int
    n_branches: int = 1

    def __post_init__(self) -> None:
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")
        t = self.topology
        if t in (Topology.EVEN_SSH, Topology.ODD_SSH, Topology.INTERFACE):
            if self.n_branches != 1:
                raise TopologyError(f"{t.value} chain has a single branch")
        if t is Topology.INTERFACE and self.n_cells % 2 != 0:
            raise TopologyError(
                "interface chain needs an even cell count so the interface lands on an a-type site"
            )
        if t is Topology.ROUTER:
            if self.n_branches < 2:
                raise TopologyError("router needs at least two branches")
            if self.n_cells % 2 != 0:
                raise TopologyError("router branches must be even-sized chains")

    @property
    def n_sites(self) -> int:
        t = self.topology
        if t is Topology.EVEN_SSH:
            return 2 * self.n_cells
        if t in (Topology.ODD_SSH, Topology.INTERFACE):
            return 2 * self.n_cells + 1
        return self.n_branches * self.n_cells + 1

    @cached_property
    def bonds(self) -> tuple[tuple[int, int, int], ...]:
        """All couplings as (site_i, site_j, stream) with stream in {1, 2}.

        Chains list bonds in site order; the router lists each branch from
        its outer end inward, ending on that branch's hub bond.
        """
        t, n = self.topology, self.n_cells
        if t is Topology.EVEN_SSH:
            roles = [1 + (i % 2) for i in range(2 * n - 1)]
            return tuple((i, i + 1, r) for i, r in enumerate(roles))
        if t is Topology.ODD_SSH:
            roles = [1 + (i % 2) for i in range(2 * n)]
            return tuple((i, i + 1, r) for i, r in enumerate(roles))
        if t is Topology.INTERFACE:
            roles = [1, 2] * (n // 2) + [2, 1] * (n // 2)
            return tuple((i, i + 1, r) for i, r in enumerate(roles))
        hub = self.n_sites - 1
        out: list[tuple[int, int, int]] = []
        for branch in range(self.n_branches):
            base = branch * n
            for m in range(n - 1):
                out.append((base + m, base + m + 1, 1 + (m % 2)))
            out.append((base + n - 1, hub, 2))
        return tuple(out)

    @cached_property
    def site_is_b(self) -> np.ndarray:
        """Boolean mask, True on b-type sites (carrying the Vb stream)."""
        L = self.n_sites
        mask = np.zeros(L, dtype=bool)
        if self.topology is Topology.ROUTER:
            for branch in range(self.n_branches):
                base = branch * self.n_cells
                mask[base + 1 : base + self.n_cells : 2] = True
        else:
            mask[1::2] = True
        return mask

    @property
    def hub_index(self) -> int | None:
        """Interface/hub site index, or None for plain chains."""
        if self.topology is Topology.INTERFACE:
            return self.n_cells
        if self.topology is Topology.ROUTER:
            return self.n_sites - 1
        return None

    @property
    def input_site(self) -> int | None:
        """Site where an excitation is injected (hub, or left edge for odd chains)."""
        if self.topology is Topology.ODD_SSH:
            return 0
        return self.hub_index

    @property
    def output_sites(self) -> tuple[int, ...]:
        t = self.topology
        if t is Topology.INTERFACE:
            return (0, self.n_sites - 1)
        if t is Topology.ROUTER:
            return tuple(branch * self.n_cells for branch in range(self.n_branches))
        if t is Topology.ODD_SSH:
            return (self.n_sites - 1,)
        return ()

    @cached_property
    def site_labels(self) -> tuple[str, ...]:
        """Human-readable name for every site index."""
        t, n = self.topology, self.n_cells
        if t is Topology.ROUTER:
            labels = []
            for branch in range(self.n_branches):
                for m in range(n):
                    kind = "a" if m % 2 == 0 else "b"
                    labels.append(f"branch{branch}/cell{m // 2 + 1}/{kind}")
            labels.append("hub")
            return tuple(labels)
        labels = []
        for i in range(self.n_sites):
            kind = "a" if i % 2 == 0 else "b"
            labels.append(f"cell{i // 2 + 1}/{kind}")
        if t is Topology.INTERFACE:
            labels[self.n_cells] = "hub"
        return tuple(labels)

    def mirror_index(self, i: int) -> int:
        """Mirror image of a site about the chain center (chains only)."""
        if self.topology is Topology.ROUTER:
            raise TopologyError("mirror of a router site is branch replication, not reversal")
        return self.n_sites - 1 - i

    def half_of_site(self, i: int) -> int | None:
        """Half-chain (0 = left, 1 = right) or branch index owning a site.

        The central/hub site belongs to neither half and maps to None.
        """
        if self.topology is Topology.ROUTER:
            return None if i == self.n_sites - 1 else i // self.n_cells
        center = (self.n_sites - 1) / 2
        if i == center:
            return None
        return 0 if i < center else 1

    def half_of_bond(self, bond_index: int) -> int:
        """Half-chain or branch index owning a bond."""
        if self.topology is Topology.ROUTER:
            return bond_index // self.n_cells
        return 0 if bond_index < len(self.bonds) / 2 else 1


def even_chain(n_cells: int) -> ChainSpec:
    return ChainSpec(Topology.EVEN_SSH, n_cells)


def odd_chain(n_cells: int) -> ChainSpec:
    return ChainSpec(Topology.ODD_SSH, n_cells)


def interface_chain(n_cells: int) -> ChainSpec:
    return ChainSpec(Topology.INTERFACE, n_cells)


def router(n_branches: int, branch_sites: int) -> ChainSpec:
    return ChainSpec(Topology.ROUTER, branch_sites, n_branches)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense Hamiltonian with an explicit hermiticity flag."""

    matrix: np.ndarray
    hermitian: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self) -> None:
        """Validate the hermiticity flag against the entries."""
        dev = np.abs(self.matrix - self.matrix.conj().T).max()
        if self.hermitian and dev > HERMITICITY_TOL:
            raise ValueError(f"matrix flagged hermitian but deviates by {dev:.3e}")


class DisorderKind(Enum):
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "off_diagonal"


class DisorderSymmetry(Enum):
    MIRROR = "mirror"
    ASYMMETRIC = "asymmetric"


@dataclass(frozen=True)
class DisorderRealization:
    """Static multiplicative factors (1 + delta) attached to sites and bonds.

    Factors multiply whatever stream value flows through the element, so a
    single realization applies at every instant of a drive.  Off-diagonal
    disorder keeps all site factors at 1 and vice versa.
    """

    kind: DisorderKind
    symmetry: DisorderSymmetry
    strength: float
    site_factors: np.ndarray
    bond_factors: np.ndarray
    seed: int
    granularity: str = "per_element"

    def validate_for(self, spec: ChainSpec) -> None:
        if self.site_factors.shape != (spec.n_sites,):
            raise ValueError(
                f"site factor table has {self.site_factors.shape[0]} entries, "
                f"lattice has {spec.n_sites} sites"
            )
        if self.bond_factors.shape != (len(spec.bonds),):
            raise ValueError(
                f"bond factor table has {self.bond_factors.shape[0]} entries, "
                f"lattice has {len(spec.bonds)} bonds"
            )


@dataclass(frozen=True)
class DisorderedCouplings:
    """Per-bond coupling values and per-site onsite energies after disorder."""

    bond_values: np.ndarray
    site_values: np.ndarray


@dataclass(frozen=True)
class LossModel:
    """Per-site decay rates entering the Hamiltonian as -i * diag(rates)."""

    gamma: float
    site_rates: np.ndarray

    def __post_init__(self) -> None:
        if self.gamma < 0 or np.any(self.site_rates < 0):
            raise ValueError("loss rates must be non-negative")


def uniform_loss(spec: ChainSpec, gamma: float) -> LossModel:
    """Equal decay rate on every site."""
    if gamma < 0:
        raise ValueError("loss rate must be non-negative")
    return LossModel(gamma, np.full(spec.n_sites, float(gamma)))


def asymmetric_loss(spec: ChainSpec, gamma: float, deltas: tuple[float, ...]) -> LossModel:
    """b-site rates gamma*(1+delta) per half-chain/branch; a-sites keep gamma.

    ``deltas`` gives one relative detuning in [-0.1, 0.1] per half (or per
    router branch).
    """
    if gamma < 0:
        raise ValueError("loss rate must be non-negative")
    n_halves = spec.n_branches if spec.topology is Topology.ROUTER else 2
    if len(deltas) != n_halves:
        raise ValueError(f"need {n_halves} asymmetry values, got {len(deltas)}")
    if any(abs(d) > 0.1 + 1e-15 for d in deltas):
        raise ValueError("loss asymmetry must lie in [-0.1, 0.1]")
    rates = np.full(spec.n_sites, float(gamma))
    for i in np.nonzero(spec.site_is_b)[0]:
        half = spec.half_of_site(int(i))
        rates[i] = gamma * (1.0 + deltas[half])
    return LossModel(gamma, rates)


def _assemble(
    spec: ChainSpec,
    j1: float,
    j2: float,
    va: float,
    vb: float,
    bond_factors: np.ndarray | None = None,
    site_factors: np.ndarray | None = None,
) -> np.ndarray:
    """Dense matrix from raw stream values (also used for dH/dt assembly)."""
    L = spec.n_sites
    h = np.zeros((L, L), dtype=complex)
    onsite = np.where(spec.site_is_b, vb, va).astype(complex)
    if site_factors is not None:
        onsite = onsite * site_factors
    h[np.arange(L), np.arange(L)] = onsite
    for idx, (i, j, role) in enumerate(spec.bonds):
        w = j1 if role == 1 else j2
        if bond_factors is not None:
            w = w * bond_factors[idx]
        h[i, j] += w
        h[j, i] += w
    return h


def build_ssh_hamiltonian(spec: ChainSpec, c: CouplingPoint) -> HamiltonianMatrix:
    """Open even/odd dimerized chain: alternating J1/J2 bonds, Va/Vb onsite."""
    if spec.topology not in (Topology.EVEN_SSH, Topology.ODD_SSH):
        raise TopologyError(f"expected a plain even/odd chain, got {spec.topology.value}")
    return HamiltonianMatrix(_assemble(spec, c.j1, c.j2, c.va, c.vb), hermitian=True)


def build_interface_hamiltonian(spec: ChainSpec, c: CouplingPoint) -> HamiltonianMatrix:
    """Mirror-symmetric chain of two even halves sharing the central a-site."""
    if spec.topology is not Topology.INTERFACE:
        raise TopologyError(f"expected an interface chain, got {spec.topology.value}")
    return HamiltonianMatrix(_assemble(spec, c.j1, c.j2, c.va, c.vb), hermitian=True)


def build_router_hamiltonian(spec: ChainSpec, c: CouplingPoint) -> HamiltonianMatrix:
    """Star of identical even chains terminating on one shared hub a-site."""
    if spec.topology is not Topology.ROUTER:
        raise TopologyError(f"expected a router, got {spec.topology.value}")
    return HamiltonianMatrix(_assemble(spec, c.j1, c.j2, c.va, c.vb), hermitian=True)


def build_bloch_hamiltonian(k: float, c: CouplingPoint) -> np.ndarray:
    """2x2 momentum-space block [[Va, J1+J2 e^{-ik}], [J1+J2 e^{ik}, Vb]]."""
    off = c.j1 + c.j2 * np.exp(-1j * k)
    return np.array([[c.va, off], [np.conj(off), c.vb]], dtype=complex)


def build_hamiltonian(
    spec: ChainSpec,
    c: CouplingPoint,
    disorder: DisorderRealization | None = None,
    loss: LossModel | None = None,
) -> HamiltonianMatrix:
    """Dense real-space Hamiltonian for any topology, with optional disorder/loss."""
    bf = sf = None
    if disorder is not None:
        disorder.validate_for(spec)
        bf, sf = disorder.bond_factors, disorder.site_factors
    h = _assemble(spec, c.j1, c.j2, c.va, c.vb, bf, sf)
    hm = HamiltonianMatrix(h, hermitian=True)
    if loss is not None:
        hm = apply_loss(hm, loss)
    return hm


def apply_disorder(
    spec: ChainSpec, c: CouplingPoint, realization: DisorderRealization
) -> DisorderedCouplings:
    """Per-bond couplings and per-site energies with disorder factors applied."""
    realization.validate_for(spec)
    bond_values = np.array(
        [
            (c.j1 if role == 1 else c.j2) * realization.bond_factors[idx]
            for idx, (_, _, role) in enumerate(spec.bonds)
        ]
    )
    site_values = np.where(spec.site_is_b, c.vb, c.va) * realization.site_factors
    return DisorderedCouplings(bond_values, site_values)


def apply_loss(h: HamiltonianMatrix, loss: LossModel) -> HamiltonianMatrix:
    """Shift the Hamiltonian to its lossy form H - i*diag(rates)."""
    if not h.hermitian:
        raise ValueError("loss is applied to the Hermitian Hamiltonian")
    if loss.site_rates.shape != (h.dim,):
        raise ValueError("loss rate table does not match the Hamiltonian dimension")
    lossless = not np.any(loss.site_rates)
    out = h.matrix.astype(complex, copy=True)
    out[np.arange(h.dim), np.arange(h.dim)] -= 1j * loss.site_rates
    return HamiltonianMatrix(out, hermitian=lossless)
