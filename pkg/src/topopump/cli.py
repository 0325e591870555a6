"""Command-line front end: deterministic runs, CSV tables, run manifests.

Subcommands: spectrum, winding, evolve, sweep, ensemble, fit, router.
Every output table carries a provenance header (artifact version, config
hash, master seed) sufficient to reproduce it exactly; the per-run
manifest embeds the fully resolved configuration plus a timestamp.
Multi-point commands write one part file per completed point, so an
interrupted sweep resumes where it stopped, and a --jobs N thread pool
never changes any output byte.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .config import OPTIONS, RunConfig
from .dynamics import evolve, phase_difference
from .errors import (
    ConfigError,
    NearDegeneracyError,
    NumericalError,
    PhaseUndefinedError,
    StabilityError,
    TopologyError,
    TrackingError,
)
from .lattice import (
    ChainSpec,
    CouplingPoint,
    DisorderKind,
    DisorderSymmetry,
    build_bloch_hamiltonian,
    build_hamiltonian,
    even_chain,
    interface_chain,
    odd_chain,
    router,
)
from .protocol import DriveSchedule
from .spectral import d_vector, dispersion, eigendecompose, gap_tracking, winding_number
from .tables import ResultTable, config_hash, write_manifest

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

COMMANDS = ("spectrum", "winding", "evolve", "sweep", "ensemble", "fit", "router")


@dataclass
class RunContext:
    cfg: RunConfig
    command: str
    out: Path
    label: str
    jobs: int
    outputs: list[Path] = field(default_factory=list)

    @property
    def provenance(self) -> dict[str, str]:
        return {
            "topopump_version": __version__,
            "config_hash": config_hash(self.cfg.physics_text()),
            "master_seed": str(self.cfg["run.seed"]),
            "label": self.label,
        }

    def emit(self, name: str, table: ResultTable) -> Path:
        path = self.out / f"{self.label}_{name}.csv"
        prov = dict(self.provenance)
        prov["table"] = name
        table.write(path, prov)
        self.outputs.append(path)
        return path

    def emit_lines(self, name: str, columns: list[str], lines: list[str]) -> Path:
        path = self.out / f"{self.label}_{name}.csv"
        prov = dict(self.provenance)
        prov["table"] = name
        header = [f"# {key} = {prov[key]}" for key in sorted(prov)]
        header.append(",".join(columns))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(header + lines) + "\n")
        self.outputs.append(path)
        return path


def _make_spec(cfg: RunConfig) -> ChainSpec:
    kind = cfg["topology.kind"]
    cells = cfg["topology.cells"]
    if kind == "even":
        return even_chain(cells)
    if kind == "odd":
        return odd_chain(cells)
    if kind == "interface":
        return interface_chain(cells)
    return router(cfg["topology.branches"], cells)


def _make_schedule(cfg: RunConfig, t_star: float | None = None) -> DriveSchedule:
    kind = cfg["protocol.kind"]
    t = cfg["protocol.t_star"] if t_star is None else t_star
    if kind == "cosine":
        return DriveSchedule("cosine", t, vb_symmetric=False)
    if kind == "exponential":
        return DriveSchedule(
            "exponential", t, alpha=cfg["protocol.alpha"], vb_symmetric=cfg["protocol.vb_symmetric"]
        )
    return DriveSchedule(
        "three_step", t, t_op=cfg["protocol.t_op"], j1_0=cfg["protocol.j1_0"], j2_0=cfg["protocol.j2_0"]
    )


def _dt(cfg: RunConfig):
    return None if cfg["numerics.dt"] == 0.0 else cfg["numerics.dt"]


def _schedule_factory(cfg: RunConfig):
    return lambda t_star: _make_schedule(cfg, t_star)


def _run_points(ctx: RunContext, name: str, columns: list[str], keys, worker, key_fmt):
    """Compute rows per key with resume markers; returns formatted lines in key order."""
    parts_dir = ctx.out / f"{ctx.label}_{name}.parts"

    def compute(key) -> str:
        part = parts_dir / f"{key_fmt(key)}.part"
        if part.exists():
            return part.read_text()
        rows = worker(key)
        table = ResultTable(columns, list(rows))
        text = "".join(line + "\n" for line in table.format_rows())
        parts_dir.mkdir(parents=True, exist_ok=True)
        tmp = part.with_suffix(".tmp")
        tmp.write_text(text)
        tmp.replace(part)
        return text

    if ctx.jobs > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            texts = list(pool.map(compute, keys))
    else:
        texts = [compute(key) for key in keys]
    lines = [line for text in texts for line in text.splitlines()]
    ctx.emit_lines(name, columns, lines)
    for part in parts_dir.glob("*.part") if parts_dir.exists() else []:
        part.unlink()
    if parts_dir.exists():
        try:
            parts_dir.rmdir()
        except OSError:
            pass
    return lines


def cmd_spectrum(ctx: RunContext) -> None:
    cfg = ctx.cfg
    spec = _make_spec(cfg)

    j1s, j2s = cfg["spectrum.dispersion_j1"], cfg["spectrum.dispersion_j2"]
    if len(j1s) != len(j2s):
        raise ConfigError("spectrum.dispersion_j1 and _j2 must have equal lengths")
    ks = np.linspace(-np.pi, np.pi, cfg["spectrum.k_points"])
    disp = ResultTable(["j1[J0]", "j2[J0]", "k[rad]", "e_minus[J0]", "e_plus[J0]"])
    dvec = ResultTable(["j1[J0]", "j2[J0]", "k[rad]", "d_x[J0]", "d_y[J0]"])
    for j1, j2 in zip(j1s, j2s):
        c = CouplingPoint(j1, j2)
        lo, hi = dispersion(ks, c)
        dx, dy, _ = d_vector(ks, c)
        for i, k in enumerate(ks):
            disp.append(j1, j2, k, lo[i], hi[i])
            dvec.append(j1, j2, k, dx[i], dy[i])
    ctx.emit("dispersion", disp)
    ctx.emit("dvector", dvec)

    sweep_tab = ResultTable(["j1[J0]", "level", "energy[J0]"])
    for j1 in cfg["spectrum.sweep_j1"]:
        snap = eigendecompose(build_hamiltonian(spec, CouplingPoint(j1, cfg["spectrum.sweep_j2"])))
        for level, energy in enumerate(snap.eigenvalues.real):
            sweep_tab.append(j1, level, energy)
    ctx.emit("spectrum_vs_j1", sweep_tab)

    snap = eigendecompose(
        build_hamiltonian(spec, CouplingPoint(cfg["spectrum.profile_j1"], cfg["spectrum.sweep_j2"]))
    )
    idx = int(np.argmin(np.abs(snap.eigenvalues.real)))
    profile = ResultTable(["site", "density"])
    for site, density in enumerate(np.abs(snap.eigenvectors[:, idx]) ** 2):
        profile.append(site, density)
    ctx.emit("state_profile", profile)

    schedule = _make_schedule(cfg)
    t_grid = np.linspace(0.0, schedule.t_star, cfg["spectrum.time_samples"])
    waves = ResultTable(["t[1/J0]", "j1[J0]", "j2[J0]", "v_a[J0]", "v_b[J0]"])
    inst = ResultTable(["t[1/J0]", "level", "energy[J0]"])
    for t in t_grid:
        c = schedule.couplings(t)
        waves.append(t, c.j1, c.j2, c.va, c.vb)
        snap = eigendecompose(build_hamiltonian(spec, c))
        for level, energy in enumerate(snap.eigenvalues.real):
            inst.append(t, level, energy)
    ctx.emit("waveforms", waves)
    ctx.emit("instantaneous_spectrum", inst)

    if spec.hub_index is not None or spec.topology.value == "odd":
        track = gap_tracking(spec, schedule, t_grid)
        gap_tab = ResultTable(["t[1/J0]", "gap_energy[J0]", "min_gap[J0]"])
        prof_tab = ResultTable(["t[1/J0]", "site", "density"])
        for i, t in enumerate(t_grid):
            gap_tab.append(t, track.energies[i], track.min_gaps[i])
            for site, density in enumerate(np.abs(track.states[i]) ** 2):
                prof_tab.append(t, site, density)
        ctx.emit("gap_track", gap_tab)
        ctx.emit("gap_profile", prof_tab)

        alphas = cfg["spectrum.alpha_values"]
        if not alphas:
            raise ConfigError("spectrum.alpha_values is empty")
        sector_grid = np.linspace(0.0, 1.0, cfg["spectrum.time_samples"])
        mingap = ResultTable(["alpha", "min_gap[J0]"])
        for alpha in alphas:
            s = DriveSchedule("exponential", 1.0, alpha=alpha, vb_symmetric=cfg["protocol.vb_symmetric"])
            mingap.append(alpha, gap_tracking(spec, s, sector_grid).min_gap)
        ctx.emit("mingap_vs_alpha", mingap)


def cmd_winding(ctx: RunContext) -> None:
    cfg = ctx.cfg
    j1s, j2s = cfg["winding.j1"], cfg["winding.j2"]
    if len(j1s) != len(j2s):
        raise ConfigError("winding.j1 and winding.j2 must have equal lengths")
    table = ResultTable(["j1[J0]", "j2[J0]", "winding", "raw"])
    for j1, j2 in zip(j1s, j2s):
        w, raw = winding_number(CouplingPoint(j1, j2), cfg["numerics.n_k"])
        table.append(j1, j2, w, raw)
    ctx.emit("winding", table)


def cmd_evolve(ctx: RunContext) -> None:
    cfg = ctx.cfg
    spec = _make_spec(cfg)
    schedule = _make_schedule(cfg)
    result = evolve(spec, schedule, dt=_dt(cfg), n_frames=cfg["numerics.frames"])

    pops = ResultTable(["t[1/J0]", "site", "population"])
    for i, t in enumerate(result.times):
        for site, population in enumerate(result.populations[i]):
            pops.append(t, site, population)
    ctx.emit("populations", pops)

    norms = ResultTable(["t[1/J0]", "norm"])
    norms.extend(zip(result.times, result.norms))
    ctx.emit("norms", norms)

    final = ResultTable(["site", "re", "im", "probability", "phase[rad]"])
    for site, amp in enumerate(result.final_state):
        final.append(site, amp.real, amp.imag, abs(amp) ** 2, float(np.angle(amp)))
    ctx.emit("final_state", final)

    try:
        dphi = phase_difference(result, spec)
    except (TopologyError, PhaseUndefinedError):
        dphi = float("nan")
    end_pops = [abs(result.final_state[i]) ** 2 for i in spec.output_sites] or [float("nan")]
    summary = ResultTable(
        ["t_star[1/J0]", "fidelity", "final_norm", "phase_diff[rad]", "end_pop_min", "end_pop_max"]
    )
    summary.append(schedule.t_star, result.fidelity, result.norms[-1], dphi, min(end_pops), max(end_pops))
    ctx.emit("summary", summary)


def _stabilization_rows(curve, thresholds) -> list[tuple]:
    rows = []
    for theta in thresholds:
        rows.append((theta, experiments.stabilization_time(curve, theta)))
    return rows


def cmd_sweep(ctx: RunContext) -> None:
    cfg = ctx.cfg
    kind = cfg["sweep.kind"]
    t_grid = cfg["sweep.t_grid"]
    threshold = cfg["sweep.threshold"]
    dt = _dt(cfg)

    if kind == "fidelity":
        spec = _make_spec(cfg)
        curve = experiments.fidelity_vs_time(spec, _schedule_factory(cfg), t_grid, dt=dt)
        table = ResultTable(["t_star[1/J0]", "fidelity"])
        table.extend(zip(curve.t_grid, curve.fidelities))
        ctx.emit("fidelity_curve", table)
        thresholds = sorted({0.9, 0.99, threshold})
        stab = ResultTable(["threshold", "t_stab[1/J0]"])
        stab.extend(_stabilization_rows(curve, thresholds))
        ctx.emit("stabilization", stab)
        return

    if kind == "alpha_phase":
        spec = _make_spec(cfg)
        alphas = cfg["sweep.alpha_grid"]

        def worker(alpha):
            factory = experiments.protocol_factory(
                "exponential", alpha=alpha, vb_symmetric=cfg["protocol.vb_symmetric"]
            )
            curve = experiments.fidelity_vs_time(spec, factory, t_grid, dt=dt)
            return [(alpha, t, f) for t, f in zip(curve.t_grid, curve.fidelities)]

        lines = _run_points(
            ctx, "phase_diagram", ["alpha", "t_star[1/J0]", "fidelity"], alphas, worker,
            lambda a: f"alpha_{a:.6g}",
        )
        fid = np.array([float(line.split(",")[2]) for line in lines]).reshape(len(alphas), len(t_grid))
        diagram = experiments.PhaseDiagram(np.asarray(alphas), np.asarray(t_grid), fid)
        contours = ResultTable(["alpha", "t_090[1/J0]", "t_099[1/J0]"])
        c90 = diagram.stabilization_contour(0.9)
        c99 = diagram.stabilization_contour(0.99)
        contours.extend(zip(alphas, c90, c99))
        ctx.emit("contours", contours)
        times = diagram.stabilization_contour(threshold)
        best = int(np.argmin(times))
        optimal = ResultTable(["alpha_opt", "t_stab[1/J0]"])
        optimal.append(alphas[best], times[best])
        ctx.emit("optimal", optimal)
        return

    if kind == "size_phase":
        sizes = [int(s) for s in cfg["sweep.sizes"]]

        def worker(size):
            spec = interface_chain((size - 1) // 2)
            curve = experiments.fidelity_vs_time(spec, _schedule_factory(cfg), t_grid, dt=dt)
            return [(size, t, f) for t, f in zip(curve.t_grid, curve.fidelities)]

        lines = _run_points(
            ctx, "size_diagram", ["size", "t_star[1/J0]", "fidelity"], sizes, worker,
            lambda s: f"size_{s}",
        )
        fid = np.array([float(line.split(",")[2]) for line in lines]).reshape(len(sizes), len(t_grid))
        contours = ResultTable(["size", "t_stab[1/J0]"])
        for i, size in enumerate(sizes):
            curve = experiments.FidelityCurve(np.asarray(t_grid), fid[i], cfg["protocol.kind"])
            contours.append(size, experiments.stabilization_time(curve, threshold))
        ctx.emit("size_contours", contours)
        return

    if kind == "size_times":
        sizes = [int(s) for s in cfg["sweep.sizes"]]
        use_fit = cfg["sweep.alpha_from_fit"] and cfg["protocol.kind"] == "exponential"

        def worker(size):
            alpha_for = (
                experiments.fitted_alpha_for_size if use_fit else (lambda _l: cfg["protocol.alpha"])
            )
            points = experiments.stabilization_vs_size(
                [size], cfg["protocol.kind"], lambda _l: t_grid, alpha_for=alpha_for,
                threshold=threshold, dt=dt,
            )
            p = points[0]
            return [(p.size, p.alpha if p.alpha is not None else float("nan"), p.value)]

        _run_points(
            ctx, "stabilization_vs_size", ["size", "alpha", "t_stab[1/J0]"], sizes, worker,
            lambda s: f"size_{s}",
        )
        return

    if kind == "branch_times":
        branch_counts = [int(k) for k in cfg["sweep.branches"]]

        def worker(k):
            points = experiments.stabilization_vs_branches(
                [k], cfg["sweep.branch_sites"], t_grid, alpha=cfg["protocol.alpha"],
                kind=cfg["protocol.kind"], threshold=threshold, dt=dt,
            )
            return [(points[0].size, points[0].value)]

        _run_points(
            ctx, "stabilization_vs_branches", ["branches", "t_stab[1/J0]"], branch_counts, worker,
            lambda k: f"branches_{k}",
        )
        return

    # size_loss
    sizes = [int(s) for s in cfg["sweep.sizes"]]

    def worker(size):
        points = experiments.fidelity_vs_size_with_loss(
            [size], cfg["sweep.gamma"], cfg["protocol.kind"], dt=dt
        )
        p = points[0]
        return [(p.size, p.alpha if p.alpha is not None else float("nan"), p.value)]

    _run_points(
        ctx, "fidelity_vs_size_loss", ["size", "alpha", "fidelity"], sizes, worker,
        lambda s: f"size_{s}",
    )


def cmd_ensemble(ctx: RunContext) -> None:
    cfg = ctx.cfg
    spec = _make_spec(cfg)
    kind = cfg["ensemble.kind"]
    dt = _dt(cfg)
    seed = cfg["run.seed"]
    stats_columns = [
        "mean_fidelity", "std_fidelity", "samples",
        "mean_abs_dphi[rad]", "std_abs_dphi[rad]", "phase_defined",
    ]

    def stats_cells(st: experiments.EnsembleStats) -> tuple:
        return (
            st.mean_fidelity, st.std_fidelity, st.n_samples,
            st.mean_abs_phase, st.std_abs_phase, st.n_phase_defined,
        )

    if kind == "disorder":
        schedule = _make_schedule(cfg)
        dkind = DisorderKind(cfg["ensemble.disorder"])
        sym = DisorderSymmetry(cfg["ensemble.symmetry"])

        def worker(strength):
            st = experiments.disorder_ensemble(
                spec, schedule, dkind, sym, strength,
                n_samples=cfg["ensemble.samples"], master_seed=seed, dt=dt,
                granularity=cfg["ensemble.granularity"],
            )
            return [(strength,) + stats_cells(st)]

        _run_points(
            ctx, "disorder_stats", ["strength"] + stats_columns,
            cfg["ensemble.strengths"], worker, lambda w: f"strength_{w:.6g}",
        )
        clean = experiments.fidelity_vs_time(
            spec, _schedule_factory(cfg), [schedule.t_star], dt=dt
        )
        ref = ResultTable(["t_star[1/J0]", "fidelity"])
        ref.append(schedule.t_star, clean.fidelities[0])
        ctx.emit("clean_reference", ref)
        return

    if kind == "disorder_time":
        dkind = DisorderKind(cfg["ensemble.disorder"])
        sym = DisorderSymmetry(cfg["ensemble.symmetry"])
        strength = cfg["ensemble.strength"]
        clean_curve = experiments.fidelity_vs_time(
            spec, _schedule_factory(cfg), cfg["sweep.t_grid"], dt=dt
        )
        clean_by_t = dict(zip(clean_curve.t_grid, clean_curve.fidelities))

        def worker(t_star):
            st = experiments.disorder_ensemble(
                spec, _make_schedule(cfg, t_star), dkind, sym, strength,
                n_samples=cfg["ensemble.samples"], master_seed=seed, dt=dt,
                granularity=cfg["ensemble.granularity"],
            )
            return [(t_star,) + stats_cells(st) + (clean_by_t[t_star],)]

        _run_points(
            ctx, "disorder_vs_time", ["t_star[1/J0]"] + stats_columns + ["clean_fidelity"],
            cfg["sweep.t_grid"], worker, lambda t: f"tstar_{t:.6g}",
        )
        return

    # loss
    schedule = _make_schedule(cfg)

    def worker(gamma):
        stats = experiments.loss_sweep(
            spec, schedule, [gamma], asymmetric=cfg["ensemble.asymmetric_loss"],
            n_samples=cfg["ensemble.loss_samples"], master_seed=seed, dt=dt,
        )
        return [(gamma,) + stats_cells(stats[0])]

    _run_points(
        ctx, "loss_stats", ["gamma[J0]"] + stats_columns,
        cfg["ensemble.gammas"], worker, lambda g: f"gamma_{g:.6g}",
    )


def cmd_fit(ctx: RunContext) -> None:
    from .tables import column, read_table

    cfg = ctx.cfg
    source = cfg["fit.input"]
    if not source:
        raise ConfigError("fit.input is required")
    header, data, _ = read_table(source)
    xs = column(header, data, cfg["fit.x_column"])
    ys = column(header, data, cfg["fit.y_column"])
    keep = np.isfinite(xs) & np.isfinite(ys)
    fit = experiments.cubic_fit(xs[keep], ys[keep])
    c3, c2, c1, c0 = fit.coefficients
    table = ResultTable(["c3", "c2", "c1", "c0", "residual_rms", "n_points"])
    table.append(c3, c2, c1, c0, fit.residual_rms, int(keep.sum()))
    ctx.emit("cubic_fit", table)
    curve = ResultTable(["x", "y", "y_fit"])
    curve.extend(zip(fit.xs, fit.ys, fit.predict(fit.xs)))
    ctx.emit("fit_curve", curve)


def cmd_router(ctx: RunContext) -> None:
    ctx.cfg.set("topology.kind", "router")
    if ctx.cfg["router.task"] == "evolve":
        cmd_evolve(ctx)
    else:
        ctx.cfg.set("sweep.kind", "fidelity")
        cmd_sweep(ctx)


DISPATCH = {
    "spectrum": cmd_spectrum,
    "winding": cmd_winding,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "ensemble": cmd_ensemble,
    "fit": cmd_fit,
    "router": cmd_router,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topopump",
        description="Topological beam-splitter and router simulations on driven SSH chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", type=str, default=None, help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--seed", type=int, default=None, help="master seed (run.seed)")
        p.add_argument("--jobs", type=int, default=None, help="worker threads (run.jobs)")
        p.add_argument("--out", type=str, default=None, help="output directory (run.out)")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        cfg.set(key.strip(), value.strip())
    if args.seed is not None:
        cfg.set("run.seed", str(args.seed))
    if args.jobs is not None:
        cfg.set("run.jobs", str(args.jobs))
    if args.out is not None:
        cfg.set("run.out", args.out)
    return cfg


def _resolve_jobs(cfg: RunConfig) -> int:
    if cfg["run.jobs"] > 0:
        return cfg["run.jobs"]
    env = os.environ.get("TOPOPUMP_JOBS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"TOPOPUMP_JOBS must be an integer, got {env!r}") from exc
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        ctx = RunContext(
            cfg=cfg,
            command=args.command,
            out=Path(cfg["run.out"]),
            label=cfg["run.label"] or args.command,
            jobs=_resolve_jobs(cfg),
        )
        DISPATCH[args.command](ctx)
        manifest = {
            "version": __version__,
            "command": args.command,
            "config_hash": config_hash(cfg.physics_text()),
            "master_seed": str(cfg["run.seed"]),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": ";".join(p.name for p in ctx.outputs),
        }
        for line in cfg.to_text().strip().splitlines():
            key, _, value = line.partition(" = ")
            manifest[f"config.{key}"] = value
        write_manifest(ctx.out / f"{ctx.label}.manifest.txt", manifest)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, NumericalError, TrackingError, NearDegeneracyError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
