"""Driving schedules and random sampling of disorder/loss imperfections.

Three drives are provided.  The cosine drive is the trigonometric ramp
J1 = (J0/2)(1 + cos(pi t/t*)), J2 = (J0/2)(1 - cos(pi t/t*)) with
Vb = -Va = J0 sin(pi t/t*).  The exponential drive sharpens the ramp with
a tunable exponent alpha; its onsite stream is Vb = J0 sqrt(J2(2t)/J0),
evaluated from the closed form at argument 2t for all t (so Vb saturates
above J0 past t*/2).  Setting ``vb_symmetric`` instead mirrors Vb about
t*/2.  The three-step drive ramps J2 up over [0, t_op], holds both
streams, then ramps J1 down over [t* - t_op, t*]; it is meant for plain
edge pumping and carries no onsite modulation.

All schedules run the coupling ratio J1/J2 from +inf at t=0 (J2(0)=0, or
a J2_0 < J1_0 plateau for the three-step drive) to 0 at t=t* (J1(t*)=0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    ChainSpec,
    CouplingPoint,
    DisorderKind,
    DisorderRealization,
    DisorderSymmetry,
    Topology,
)

__all__ = [
    "DriveSchedule",
    "cosine_schedule",
    "exponential_schedule",
    "three_step_schedule",
    "sample_disorder",
    "derive_seed",
]

_U64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _U64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Counter-style per-realization seed: a 64-bit mix of (master, index).

    Pure function of its arguments, so ensembles are reproducible and
    order-independent under any execution schedule.
    """
    return _splitmix64((master_seed & _U64) ^ _splitmix64(index & _U64))


def _cosine(t, t_star, j0):
    c = np.cos(np.pi * t / t_star)
    j1 = 0.5 * j0 * (1.0 + c)
    j2 = 0.5 * j0 * (1.0 - c)
    vb = j0 * np.sin(np.pi * t / t_star)
    return j1, j2, -vb, vb


def _cosine_derivs(t, t_star, j0):
    s = np.sin(np.pi * t / t_star)
    dj1 = -0.5 * j0 * np.pi / t_star * s
    dvb = j0 * np.pi / t_star * np.cos(np.pi * t / t_star)
    return dj1, -dj1, -dvb, dvb


def _exponential(t, t_star, alpha, j0, vb_symmetric):
    den = 1.0 - np.exp(-alpha)
    j1 = j0 * (1.0 - np.exp(-alpha * (t_star - t) / t_star)) / den
    j2 = j0 * (1.0 - np.exp(-alpha * t / t_star)) / den
    t_arg = np.where(vb_symmetric & (np.asarray(t) > 0.5 * t_star), t_star - t, t)
    g = (1.0 - np.exp(-2.0 * alpha * t_arg / t_star)) / den
    vb = j0 * np.sqrt(np.maximum(g, 0.0))
    return j1, j2, -vb, vb


def _exponential_derivs(t, t_star, alpha, j0, vb_symmetric):
    den = 1.0 - np.exp(-alpha)
    rate = alpha / (t_star * den)
    dj1 = -j0 * rate * np.exp(-alpha * (t_star - t) / t_star)
    dj2 = j0 * rate * np.exp(-alpha * t / t_star)
    mirrored = vb_symmetric & (np.asarray(t) > 0.5 * t_star)
    t_arg = np.where(mirrored, t_star - t, t)
    g = (1.0 - np.exp(-2.0 * alpha * t_arg / t_star)) / den
    dg = 2.0 * rate * np.exp(-2.0 * alpha * t_arg / t_star)
    with np.errstate(divide="ignore"):
        dvb = np.where(g > 0.0, 0.5 * j0 * dg / np.sqrt(np.maximum(g, 1e-300)), np.inf)
    dvb = np.where(mirrored, -dvb, dvb)
    return dj1, dj2, -dvb, dvb


def _three_step(t, t_star, t_op, j1_0, j2_0):
    t = np.asarray(t, dtype=float)
    j1 = np.where(t <= t_star - t_op, j1_0, (j1_0 - j2_0) * (t_star - t) / t_op)
    j2 = np.where(t <= t_op, j2_0 + (j1_0 - j2_0) * t / t_op, j1_0)
    zero = np.zeros_like(j1)
    return j1, j2, zero, zero


def _three_step_derivs(t, t_star, t_op, j1_0, j2_0):
    t = np.asarray(t, dtype=float)
    slope = (j1_0 - j2_0) / t_op
    dj1 = np.where(t <= t_star - t_op, 0.0, -slope)
    dj2 = np.where(t <= t_op, slope, 0.0)
    zero = np.zeros_like(dj1)
    return dj1, dj2, zero, zero


@dataclass(frozen=True)
class DriveSchedule:
    """One drive protocol with its full parameter set, evaluable at any t."""

    kind: str
    t_star: float
    j0: float = 1.0
    alpha: float | None = None
    t_op: float | None = None
    j1_0: float | None = None
    j2_0: float | None = None
    vb_symmetric: bool = False

    def __post_init__(self) -> None:
        if self.t_star <= 0:
            raise ValueError("total evolution time must be positive")
        if self.j0 <= 0:
            raise ValueError("drive amplitude must be positive")
        if self.kind == "cosine":
            pass
        elif self.kind == "exponential":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("exponential drive needs alpha > 0")
        elif self.kind == "three_step":
            if self.t_op is None or not 0 < self.t_op <= self.t_star / 2:
                raise ValueError("three-step drive needs 0 < t_op <= t_star/2")
            if self.j1_0 is None or self.j2_0 is None or not self.j1_0 > self.j2_0 >= 0:
                raise ValueError("three-step drive needs j1_0 > j2_0 >= 0")
        else:
            raise ValueError(f"unknown drive kind {self.kind!r}")

    def values(self, t):
        """Stream values (j1, j2, va, vb) at time(s) t; vectorized."""
        if self.kind == "cosine":
            return _cosine(t, self.t_star, self.j0)
        if self.kind == "exponential":
            return _exponential(t, self.t_star, self.alpha, self.j0, self.vb_symmetric)
        return _three_step(t, self.t_star, self.t_op, self.j1_0, self.j2_0)

    def derivatives(self, t):
        """Stream time derivatives (dj1, dj2, dva, dvb) at time(s) t.

        The exponential onsite ramp has a sqrt kink at t=0, where its
        derivative diverges; the returned value there is +inf.
        """
        if self.kind == "cosine":
            return _cosine_derivs(t, self.t_star, self.j0)
        if self.kind == "exponential":
            return _exponential_derivs(t, self.t_star, self.alpha, self.j0, self.vb_symmetric)
        return _three_step_derivs(t, self.t_star, self.t_op, self.j1_0, self.j2_0)

    def couplings(self, t: float) -> CouplingPoint:
        """CouplingPoint at a single time, with derivatives filled in."""
        if not 0 <= t <= self.t_star:
            raise ValueError(f"t={t} outside the drive window [0, {self.t_star}]")
        j1, j2, va, vb = (float(x) for x in self.values(t))
        dj1, dj2, dva, dvb = (float(x) for x in self.derivatives(t))
        return CouplingPoint(j1, j2, va, vb, dj1, dj2, dva, dvb)

    def replace_t_star(self, t_star: float) -> "DriveSchedule":
        return DriveSchedule(
            self.kind, t_star, self.j0, self.alpha, self.t_op, self.j1_0, self.j2_0, self.vb_symmetric
        )


def cosine_schedule(t: float, j0: float, t_star: float) -> CouplingPoint:
    """Trigonometric drive evaluated at one time."""
    return DriveSchedule("cosine", t_star, j0).couplings(t)


def exponential_schedule(t: float, j0: float, t_star: float, alpha: float) -> CouplingPoint:
    """Exponential drive evaluated at one time."""
    return DriveSchedule("exponential", t_star, j0, alpha=alpha).couplings(t)


def three_step_schedule(
    t: float, t_star: float, t_op: float, j1_0: float, j2_0: float
) -> CouplingPoint:
    """Ramp-hold-ramp drive evaluated at one time."""
    return DriveSchedule("three_step", t_star, t_op=t_op, j1_0=j1_0, j2_0=j2_0).couplings(t)


def batch_evaluator(schedules):
    """Vectorize a list of same-kind schedules for the batched integrator.

    Returns (t_stars, values_fn) where values_fn maps a time vector with one
    entry per schedule to the four stream-value vectors.
    """
    kind = schedules[0].kind
    j0 = schedules[0].j0
    sym = schedules[0].vb_symmetric
    if any(s.kind != kind or s.j0 != j0 or s.vb_symmetric != sym for s in schedules):
        raise ValueError("batched schedules must share kind, amplitude, and onsite variant")
    t_stars = np.array([s.t_star for s in schedules], dtype=float)
    if kind == "cosine":
        fn = lambda t: _cosine(t, t_stars, j0)
    elif kind == "exponential":
        alphas = np.array([s.alpha for s in schedules], dtype=float)
        fn = lambda t: _exponential(t, t_stars, alphas, j0, sym)
    else:
        t_ops = np.array([s.t_op for s in schedules], dtype=float)
        j1_0 = np.array([s.j1_0 for s in schedules], dtype=float)
        j2_0 = np.array([s.j2_0 for s in schedules], dtype=float)
        fn = lambda t: _three_step(t, t_stars, t_ops, j1_0, j2_0)
    return t_stars, fn


def _mirror_free_count(n: int) -> int:
    return (n + 1) // 2


def sample_disorder(
    spec: ChainSpec,
    kind: DisorderKind,
    symmetry: DisorderSymmetry,
    strength: float,
    seed: int,
    granularity: str = "global",
) -> DisorderRealization:
    """Draw one static disorder realization, uniform on [-strength, strength].

    The default "global" granularity draws one offset per stream (one for
    J1 and one for J2 bonds, or one per onsite species), which is what
    keeps diagonal disorder harmless to the transfer; "per_element" draws
    an independent offset per site/bond and mirrors it.  Asymmetric
    realizations instead draw a single offset per half-chain/branch and
    apply it to the J2 bonds (off-diagonal) or the Vb sites (diagonal)
    only.
    """
    if strength < 0:
        raise ValueError("disorder strength must be non-negative")
    if granularity not in ("per_element", "global"):
        raise ValueError(f"unknown granularity {granularity!r}")
    rng = np.random.Generator(np.random.Philox(key=seed & _U64))
    n_sites = spec.n_sites
    n_bonds = len(spec.bonds)
    site_f = np.ones(n_sites)
    bond_f = np.ones(n_bonds)

    def draw(n: int) -> np.ndarray:
        return rng.uniform(-strength, strength, n)

    if symmetry is DisorderSymmetry.ASYMMETRIC:
        n_halves = spec.n_branches if spec.topology is Topology.ROUTER else 2
        deltas = draw(n_halves)
        if kind is DisorderKind.DIAGONAL:
            for i in np.nonzero(spec.site_is_b)[0]:
                half = spec.half_of_site(int(i))
                site_f[i] = 1.0 + deltas[half]
        else:
            for idx, (_, _, role) in enumerate(spec.bonds):
                if role == 2:
                    bond_f[idx] = 1.0 + deltas[spec.half_of_bond(idx)]
    elif granularity == "global":
        d_first, d_second = draw(2)
        if kind is DisorderKind.DIAGONAL:
            site_f = np.where(spec.site_is_b, 1.0 + d_second, 1.0 + d_first)
        else:
            roles = np.array([role for _, _, role in spec.bonds])
            bond_f = np.where(roles == 2, 1.0 + d_second, 1.0 + d_first)
    elif spec.topology is Topology.ROUTER:
        # one branch's pattern (plus the hub site) replicated to every branch
        n = spec.n_cells
        if kind is DisorderKind.DIAGONAL:
            pattern = 1.0 + draw(n + 1)
            for branch in range(spec.n_branches):
                site_f[branch * n : (branch + 1) * n] = pattern[:n]
            site_f[-1] = pattern[n]
        else:
            pattern = 1.0 + draw(n)
            bond_f = np.tile(pattern, spec.n_branches)
    else:
        if kind is DisorderKind.DIAGONAL:
            free = 1.0 + draw(_mirror_free_count(n_sites))
            for i, f in enumerate(free):
                site_f[i] = f
                site_f[spec.mirror_index(i)] = f
        else:
            free = 1.0 + draw(_mirror_free_count(n_bonds))
            for i, f in enumerate(free):
                bond_f[i] = f
                bond_f[n_bonds - 1 - i] = f

    return DisorderRealization(kind, symmetry, strength, site_f, bond_f, seed, granularity)
