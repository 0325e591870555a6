"""Figure recipes: which tables feed which panels.

Every recipe names its required input tables (as written by the simulator
CLI under the documented labels) and builds one multi-panel figure.  A
recipe fails loudly when a required column is absent and is skipped by the
gallery runner when an input file is missing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .render import new_figure, save
from .tables import Table, TableError, read_table

FIDELITY_CONTOURS = (0.9, 0.99)


@dataclass(frozen=True)
class FigureRecipe:
    fig_id: str
    title: str
    inputs: dict[str, str]  # key -> table filename inside the run directory
    build: Callable[[dict[str, Table]], "object"]

    def missing_inputs(self, run_dir: Path) -> list[str]:
        return [name for name in self.inputs.values() if not (run_dir / name).exists()]

    def render(self, run_dir: Path, out_dir: Path) -> Path:
        tables = {key: read_table(run_dir / name) for key, name in self.inputs.items()}
        fig = self.build(tables)
        fig.suptitle(self.title)
        out = out_dir / f"{self.fig_id}.svg"
        save(fig, out)
        return out


def _pivot(table: Table, row_col: str, col_col: str, val_col: str):
    rows = np.unique(table.col(row_col))
    cols = np.unique(table.col(col_col))
    grid = np.full((len(rows), len(cols)), np.nan)
    ri = np.searchsorted(rows, table.col(row_col))
    ci = np.searchsorted(cols, table.col(col_col))
    grid[ri, ci] = table.col(val_col)
    return rows, cols, grid


def _heatmap_with_contours(ax, xs, ys, grid, xlabel, ylabel):
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", vmin=0.0, vmax=1.0, cmap="viridis")
    for level, color in zip(FIDELITY_CONTOURS, ("lime", "red")):
        try:
            ax.contour(xs, ys, grid, levels=[level], colors=color, linewidths=1.0)
        except ValueError:
            pass  # level outside data range
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return mesh


def build_dispersion(tables):
    disp, dvec = tables["dispersion"], tables["dvector"]
    pairs = sorted(set(zip(disp.col("j1"), disp.col("j2"))))
    fig, axes = new_figure(2, max(len(pairs), 1), width=2.4)
    axes = np.asarray(axes).reshape(2, -1)
    for i, (j1, j2) in enumerate(pairs):
        sel = (disp.col("j1") == j1) & (disp.col("j2") == j2)
        k = disp.col("k")[sel]
        axes[0, i].plot(k, disp.col("e_minus")[sel], "C0")
        axes[0, i].plot(k, disp.col("e_plus")[sel], "C1")
        axes[0, i].set_title(f"J1={j1:g}, J2={j2:g}")
        axes[0, i].set_xlabel("k")
        axes[0, i].set_ylabel("E/J0")
        sel = (dvec.col("j1") == j1) & (dvec.col("j2") == j2)
        axes[1, i].plot(dvec.col("d_x")[sel], dvec.col("d_y")[sel], "C2")
        axes[1, i].plot([0], [0], "k+", markersize=8)
        axes[1, i].set_xlabel("d_x")
        axes[1, i].set_ylabel("d_y")
        axes[1, i].set_aspect("equal")
    return fig


def build_open_chain_spectra(tables):
    fig, axes = new_figure(2, 2)
    for col, key in enumerate(("even", "odd")):
        spect = tables[f"{key}_spectrum"]
        j1, level, energy = spect.col("j1"), spect.col("level"), spect.col("energy")
        for lv in np.unique(level):
            sel = level == lv
            axes[0, col].plot(j1[sel], energy[sel], "k-", linewidth=0.4)
        axes[0, col].set_xlabel("J1/J0")
        axes[0, col].set_ylabel("E/J0")
        axes[0, col].set_title(f"{key} chain")
        prof = tables[f"{key}_profile"]
        axes[1, col].bar(prof.col("site"), prof.col("density"), color="C0")
        axes[1, col].set_xlabel("site")
        axes[1, col].set_ylabel("|psi|^2")
    return fig


def build_drive_and_spectra(tables):
    alphas = ("2", "6", "10")
    fig, axes = new_figure(2, 3)
    for i, a in enumerate(alphas):
        waves = tables[f"waves_a{a}"]
        t = waves.col("t")
        axes[0, i].plot(t, waves.col("j1"), label="J1")
        axes[0, i].plot(t, waves.col("j2"), label="J2")
        axes[0, i].plot(t, waves.col("v_b"), label="Vb")
        axes[0, i].set_title(f"alpha={a}")
        axes[0, i].set_xlabel("t/t*")
        axes[0, i].legend()
        inst = tables[f"inst_a{a}"]
        tt, level, energy = inst.col("t"), inst.col("level"), inst.col("energy")
        for lv in np.unique(level):
            sel = level == lv
            axes[1, i].plot(tt[sel], energy[sel], "k-", linewidth=0.4)
        track = tables[f"track_a{a}"]
        axes[1, i].plot(track.col("t"), track.col("gap_energy"), "m-", linewidth=1.2)
        axes[1, i].set_xlabel("t/t*")
        axes[1, i].set_ylabel("E/J0")
    return fig


def build_gap_profiles(tables):
    fig, axes = new_figure(1, 4)
    for i, a in enumerate(("2", "6", "10")):
        prof = tables[f"profile_a{a}"]
        ts, sites, grid = _pivot(prof, "t", "site", "density")
        axes[i].pcolormesh(sites, ts, grid, shading="nearest", cmap="magma")
        axes[i].set_xlabel("site")
        axes[i].set_ylabel("t/t*")
        axes[i].set_title(f"alpha={a}")
    gaps = tables["mingap"]
    axes[3].plot(gaps.col("alpha"), gaps.col("min_gap"), "o-")
    axes[3].set_xlabel("alpha")
    axes[3].set_ylabel("min gap [J0]")
    return fig


def build_transfer_overview(tables):
    fig, axes = new_figure(2, 3)
    for key, style in (("curve_cos", "C0o-"), ("curve_exp", "C1s-")):
        curve = tables[key]
        axes[0, 0].plot(curve.col("t_star"), curve.col("fidelity"), style,
                        markersize=2.5, label=key.split("_")[1])
    axes[0, 0].axhline(0.99, color="gray", linewidth=0.6)
    axes[0, 0].set_xlabel("t* [1/J0]")
    axes[0, 0].set_ylabel("fidelity")
    axes[0, 0].legend()
    for row, kind in enumerate(("cos", "exp")):
        pops = tables[f"pops_{kind}"]
        ts, sites, grid = _pivot(pops, "t", "site", "population")
        axes[row, 1].pcolormesh(sites, ts, grid, shading="nearest", cmap="magma")
        axes[row, 1].set_title(f"{kind} populations")
        axes[row, 1].set_xlabel("site")
        axes[row, 1].set_ylabel("t [1/J0]")
        final = tables[f"final_{kind}"]
        axes[row, 2].stem(final.col("site"), final.col("phase"))
        axes[row, 2].set_title(f"{kind} final phase")
        axes[row, 2].set_xlabel("site")
        axes[row, 2].set_ylabel("arg psi")
    axes[1, 0].axis("off")
    return fig


def build_alpha_curves(tables):
    diagram = tables["phase_diagram"]
    alphas, ts, grid = _pivot(diagram, "alpha", "t_star", "fidelity")
    fig, axes = new_figure(1, 1, width=4.2, height=3.0)
    for i, a in enumerate(alphas):
        axes.plot(ts, grid[i], label=f"alpha={a:g}", linewidth=0.9)
    axes.axhline(0.99, color="gray", linewidth=0.6)
    axes.set_xlabel("t* [1/J0]")
    axes.set_ylabel("fidelity")
    axes.legend(ncols=2)
    return fig


def build_alpha_phase_diagrams(tables):
    fig, axes = new_figure(2, 2)
    for i, label in enumerate(("L21", "L33")):
        diagram = tables[f"diagram_{label}"]
        alphas, ts, grid = _pivot(diagram, "alpha", "t_star", "fidelity")
        mesh = _heatmap_with_contours(axes[0, i], ts, alphas, grid, "t* [1/J0]", "alpha")
        axes[0, i].set_title(label)
        fig.colorbar(mesh, ax=axes[0, i])
    scaling = tables["scaling"]
    sizes = scaling.col("size")
    axes[1, 0].plot(sizes, scaling.col("alpha"), "o")
    axes[1, 0].set_xlabel("L")
    axes[1, 0].set_ylabel("alpha used")
    fit = tables["fit_curve"]
    axes[1, 1].plot(fit.col("x"), fit.col("y"), "o", label="measured")
    axes[1, 1].plot(fit.col("x"), fit.col("y_fit"), "-", label="cubic fit")
    axes[1, 1].set_xlabel("L")
    axes[1, 1].set_ylabel("t*_0.99 [1/J0]")
    axes[1, 1].legend()
    return fig


def build_disorder_overview(tables):
    fig, axes = new_figure(2, 2)
    panels = (("time_diag", "diagonal vs t*"), ("time_off", "off-diagonal vs t*"))
    for i, (key, title) in enumerate(panels):
        for kind, style in (("cos", "C0"), ("exp", "C1")):
            stats = tables[f"{key}_{kind}"]
            t = stats.col("t_star")
            axes[0, i].errorbar(t, stats.col("mean_fidelity"), yerr=stats.col("std_fidelity"),
                                fmt=style + "o-", markersize=2.5, linewidth=0.8, label=kind)
            axes[0, i].plot(t, stats.col("clean_fidelity"), style + "--", linewidth=0.6)
        axes[0, i].set_title(title)
        axes[0, i].set_xlabel("t* [1/J0]")
        axes[0, i].set_ylabel("mean fidelity")
        axes[0, i].legend()
    panels = (("w_diag", "diagonal vs strength"), ("w_off", "off-diagonal vs strength"))
    for i, (key, title) in enumerate(panels):
        for kind, style in (("cos", "C0"), ("exp", "C1")):
            stats = tables[f"{key}_{kind}"]
            axes[1, i].errorbar(stats.col("strength"), stats.col("mean_fidelity"),
                                yerr=stats.col("std_fidelity"), fmt=style + "o-",
                                markersize=2.5, linewidth=0.8, label=kind)
        axes[1, i].set_title(title)
        axes[1, i].set_xlabel("strength")
        axes[1, i].set_ylabel("mean fidelity")
        axes[1, i].legend()
    return fig


def build_loss_overview(tables):
    fig, axes = new_figure(1, 2, width=3.6)
    for kind, style in (("cos", "C0"), ("exp", "C1")):
        stats = tables[f"sym_{kind}"]
        axes[0].plot(stats.col("gamma"), stats.col("mean_fidelity"), style + "o-",
                     markersize=2.5, label=kind)
    axes[0].set_title("uniform loss")
    axes[0].set_xlabel("gamma [J0]")
    axes[0].set_ylabel("fidelity")
    axes[0].legend()
    twin = axes[1].twinx()
    for kind, style in (("cos", "C0"), ("exp", "C1")):
        stats = tables[f"asym_{kind}"]
        axes[1].plot(stats.col("gamma"), stats.col("mean_fidelity"), style + "o-",
                     markersize=2.5, label=f"{kind} F")
        twin.plot(stats.col("gamma"), stats.col("mean_abs_dphi"), style + "s--",
                  markersize=2.5, linewidth=0.7)
    axes[1].set_title("asymmetric loss (dashed: |dphi|)")
    axes[1].set_xlabel("gamma [J0]")
    axes[1].set_ylabel("fidelity")
    twin.set_ylabel("|dphi| [rad]")
    axes[1].legend()
    return fig


def build_size_phase_diagrams(tables):
    fig, axes = new_figure(2, 2)
    grids = {}
    for i, kind in enumerate(("cos", "exp")):
        diagram = tables[f"diagram_{kind}"]
        sizes, ts, grid = _pivot(diagram, "size", "t_star", "fidelity")
        grids[kind] = (sizes, ts, grid)
        mesh = _heatmap_with_contours(axes[0, i], ts, sizes, grid, "t* [1/J0]", "L")
        axes[0, i].set_title(kind)
        fig.colorbar(mesh, ax=axes[0, i])
    sizes, ts, gc = grids["cos"]
    _, _, ge = grids["exp"]
    region = (ge >= 0.99).astype(float) + (gc >= 0.99).astype(float)
    axes[1, 0].pcolormesh(ts, sizes, region, shading="nearest", cmap="cividis")
    axes[1, 0].set_title("regions: 0 neither / 1 exp only / 2 both")
    axes[1, 0].set_xlabel("t* [1/J0]")
    axes[1, 0].set_ylabel("L")
    for kind, style in (("cos", "C0o-"), ("exp", "C1s-")):
        scaling = tables[f"times_{kind}"]
        axes[1, 1].plot(scaling.col("size"), scaling.col("t_stab"), style, markersize=3, label=kind)
    axes[1, 1].set_xlabel("L")
    axes[1, 1].set_ylabel("t*_0.99 [1/J0]")
    axes[1, 1].legend()
    return fig


def build_size_loss(tables):
    fig, axes = new_figure(1, 1, width=4.0, height=3.0)
    for kind, style in (("cos", "C0o-"), ("exp", "C1s-")):
        rows = tables[kind]
        axes.plot(rows.col("size"), rows.col("fidelity"), style, markersize=3, label=kind)
    axes.set_xlabel("L")
    axes.set_ylabel("fidelity")
    axes.legend()
    return fig


def build_router_overview(tables):
    fig, axes = new_figure(2, 3)
    for key, style in (("curve_cos", "C0o-"), ("curve_exp", "C1s-")):
        curve = tables[key]
        axes[0, 0].plot(curve.col("t_star"), curve.col("fidelity"), style,
                        markersize=2.5, label=key.split("_")[1])
    axes[0, 0].axhline(0.99, color="gray", linewidth=0.6)
    axes[0, 0].set_xlabel("t* [1/J0]")
    axes[0, 0].set_ylabel("fidelity")
    axes[0, 0].legend()
    for row, kind in enumerate(("exp", "cos")):
        pops = tables[f"pops_{kind}"]
        ts, sites, grid = _pivot(pops, "t", "site", "population")
        axes[row, 1].pcolormesh(sites, ts, grid, shading="nearest", cmap="magma")
        axes[row, 1].set_title(f"{kind} populations")
        axes[row, 1].set_xlabel("site index")
        axes[row, 1].set_ylabel("t [1/J0]")
        final = tables[f"final_{kind}"]
        axes[row, 2].bar(final.col("site"), final.col("probability"), color="C2")
        axes[row, 2].set_title(f"{kind} final probabilities")
        axes[row, 2].set_xlabel("site index")
    axes[1, 0].axis("off")
    return fig


def build_router_scaling(tables):
    fig, axes = new_figure(1, 1, width=4.0, height=3.0)
    rows = tables["branches"]
    axes.plot(rows.col("branches"), rows.col("t_stab"), "C1o-")
    axes.set_xlabel("branches K")
    axes.set_ylabel("t*_0.99 [1/J0]")
    return fig


def build_asymmetric_disorder(tables):
    fig, axes = new_figure(2, 2)
    for i, channel in enumerate(("diag", "off")):
        twin = axes[0, i].twinx()
        for kind, style in (("cos", "C0"), ("exp", "C1")):
            stats = tables[f"{channel}_{kind}"]
            axes[0, i].plot(stats.col("strength"), stats.col("mean_fidelity"),
                            style + "o-", markersize=2.5, label=kind)
            twin.plot(stats.col("strength"), stats.col("mean_abs_dphi"), style + "s--",
                      markersize=2.5, linewidth=0.7)
        axes[0, i].set_title(f"asymmetric {channel} (dashed: |dphi|)")
        axes[0, i].set_xlabel("strength")
        axes[0, i].set_ylabel("mean fidelity")
        twin.set_ylabel("|dphi| [rad]")
        axes[0, i].legend()
        for kind, style in (("cos", "C0"), ("exp", "C1")):
            stats = tables[f"{channel}_{kind}"]
            axes[1, i].plot(stats.col("strength"), stats.col("std_abs_dphi"), style + "^-",
                            markersize=2.5, label=kind)
        axes[1, i].set_xlabel("strength")
        axes[1, i].set_ylabel("std |dphi| [rad]")
        axes[1, i].legend()
    return fig


RECIPES: tuple[FigureRecipe, ...] = (
    FigureRecipe(
        "fig02", "Bloch bands and winding loops",
        {"dispersion": "bands_dispersion.csv", "dvector": "bands_dvector.csv"},
        build_dispersion,
    ),
    FigureRecipe(
        "fig03", "Open-chain spectra and localized states",
        {
            "even_spectrum": "chain40_spectrum_vs_j1.csv",
            "even_profile": "chain40_state_profile.csv",
            "odd_spectrum": "chain41_spectrum_vs_j1.csv",
            "odd_profile": "chain41_state_profile.csv",
        },
        build_open_chain_spectra,
    ),
    FigureRecipe(
        "fig05", "Drive waveforms and instantaneous spectra",
        {
            **{f"waves_a{a}": f"drive_a{a}_waveforms.csv" for a in (2, 6, 10)},
            **{f"inst_a{a}": f"drive_a{a}_instantaneous_spectrum.csv" for a in (2, 6, 10)},
            **{f"track_a{a}": f"drive_a{a}_gap_track.csv" for a in (2, 6, 10)},
        },
        build_drive_and_spectra,
    ),
    FigureRecipe(
        "fig06", "Gap-state migration and minimum gap",
        {
            **{f"profile_a{a}": f"drive_a{a}_gap_profile.csv" for a in (2, 6, 10)},
            "mingap": "drive_a2_mingap_vs_alpha.csv",
        },
        build_gap_profiles,
    ),
    FigureRecipe(
        "fig07", "Beam-splitter transfer: curves, populations, phases",
        {
            "curve_cos": "fid_cos_fidelity_curve.csv",
            "curve_exp": "fid_exp_fidelity_curve.csv",
            "pops_cos": "evolve_cos_populations.csv",
            "pops_exp": "evolve_exp_populations.csv",
            "final_cos": "evolve_cos_final_state.csv",
            "final_exp": "evolve_exp_final_state.csv",
        },
        build_transfer_overview,
    ),
    FigureRecipe(
        "fig08", "Fidelity vs time for a family of sharpness values",
        {"phase_diagram": "phase21_phase_diagram.csv"},
        build_alpha_curves,
    ),
    FigureRecipe(
        "fig09", "Sharpness/time phase diagrams and scaling fits",
        {
            "diagram_L21": "phase21_phase_diagram.csv",
            "diagram_L33": "phase33_phase_diagram.csv",
            "scaling": "sizes_exp_stabilization_vs_size.csv",
            "fit_curve": "fitexp_fit_curve.csv",
        },
        build_alpha_phase_diagrams,
    ),
    FigureRecipe(
        "fig10", "Disorder robustness",
        {
            "time_diag_cos": "dis_time_diag_cos_disorder_vs_time.csv",
            "time_diag_exp": "dis_time_diag_exp_disorder_vs_time.csv",
            "time_off_cos": "dis_time_off_cos_disorder_vs_time.csv",
            "time_off_exp": "dis_time_off_exp_disorder_vs_time.csv",
            "w_diag_cos": "dis_w_diag_cos_disorder_stats.csv",
            "w_diag_exp": "dis_w_diag_exp_disorder_stats.csv",
            "w_off_cos": "dis_w_off_cos_disorder_stats.csv",
            "w_off_exp": "dis_w_off_exp_disorder_stats.csv",
        },
        build_disorder_overview,
    ),
    FigureRecipe(
        "fig11", "Loss robustness",
        {
            "sym_cos": "loss_cos_loss_stats.csv",
            "sym_exp": "loss_exp_loss_stats.csv",
            "asym_cos": "loss_asym_cos_loss_stats.csv",
            "asym_exp": "loss_asym_exp_loss_stats.csv",
        },
        build_loss_overview,
    ),
    FigureRecipe(
        "fig12", "Scalability in chain length",
        {
            "diagram_cos": "sizephase_cos_size_diagram.csv",
            "diagram_exp": "sizephase_exp_size_diagram.csv",
            "times_cos": "sizes_cos_stabilization_vs_size.csv",
            "times_exp": "sizes_exp_stabilization_vs_size.csv",
        },
        build_size_phase_diagrams,
    ),
    FigureRecipe(
        "fig13", "Fidelity vs chain length under fixed loss",
        {
            "cos": "sizeloss_cos_fidelity_vs_size_loss.csv",
            "exp": "sizeloss_exp_fidelity_vs_size_loss.csv",
        },
        build_size_loss,
    ),
    FigureRecipe(
        "fig15", "Four-port router transfer",
        {
            "curve_cos": "router_fid_cos_fidelity_curve.csv",
            "curve_exp": "router_fid_exp_fidelity_curve.csv",
            "pops_cos": "router_evolve_cos_populations.csv",
            "pops_exp": "router_evolve_exp_populations.csv",
            "final_cos": "router_evolve_cos_final_state.csv",
            "final_exp": "router_evolve_exp_final_state.csv",
        },
        build_router_overview,
    ),
    FigureRecipe(
        "fig16", "Router scaling with branch count",
        {"branches": "branches_stabilization_vs_branches.csv"},
        build_router_scaling,
    ),
    FigureRecipe(
        "fig18", "Asymmetric disorder: fidelity and phase mismatch",
        {
            "diag_cos": "asym_diag_cos_disorder_stats.csv",
            "diag_exp": "asym_diag_exp_disorder_stats.csv",
            "off_cos": "asym_off_cos_disorder_stats.csv",
            "off_exp": "asym_off_exp_disorder_stats.csv",
        },
        build_asymmetric_disorder,
    ),
)


def recipe_by_id(fig_id: str) -> FigureRecipe:
    for recipe in RECIPES:
        if recipe.fig_id == fig_id:
            return recipe
    raise TableError(f"unknown figure id {fig_id!r}; known: {[r.fig_id for r in RECIPES]}")


def render_all(run_dir: Path, out_dir: Path) -> tuple[list[str], list[tuple[str, list[str]]]]:
    """Render every recipe whose inputs exist; report (produced, skipped).

    Skips are (fig_id, missing file list) pairs; nothing here is fatal.
    Also writes an index page listing both groups.
    """
    produced: list[str] = []
    skipped: list[tuple[str, list[str]]] = []
    for recipe in RECIPES:
        missing = recipe.missing_inputs(run_dir)
        if missing:
            skipped.append((recipe.fig_id, missing))
            continue
        recipe.render(run_dir, out_dir)
        produced.append(recipe.fig_id)
    lines = ["<html><body>", "<h1>Figure gallery</h1>"]
    for fig_id in produced:
        lines.append(f'<h2>{fig_id}</h2><img src="{fig_id}.svg" alt="{fig_id}"/>')
    if skipped:
        lines.append("<h2>Skipped (missing inputs)</h2><ul>")
        for fig_id, missing in skipped:
            lines.append(f"<li>{fig_id}: {', '.join(missing)}</li>")
        lines.append("</ul>")
    lines.append("</body></html>")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "index.html").write_text("\n".join(lines) + "\n")
    return produced, skipped
