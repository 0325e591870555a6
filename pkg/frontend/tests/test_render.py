"""Gallery rendering from synthetic tables: coverage, determinism, errors."""

from pathlib import Path

import numpy as np
import pytest

from topofigures import RECIPES, TableError, read_table, recipe_by_id, render_all
from topofigures.cli import main


def write_table(path: Path, columns, rows):
    lines = ["# synthetic = 1", ",".join(columns)]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def stats_rows(xs):
    return [(x, 0.99 - 0.1 * x, 0.01, 20, 0.01 * (1 + x), 0.005, 20) for x in xs]


def make_complete_run(run: Path) -> None:
    ks = np.linspace(-np.pi, np.pi, 9)
    write_table(run / "bands_dispersion.csv", ["j1", "j2", "k", "e_minus", "e_plus"],
                [(j1, j2, k, -abs(np.cos(k)) - 0.2, abs(np.cos(k)) + 0.2)
                 for j1, j2 in ((1.0, 0.6), (0.6, 1.0)) for k in ks])
    write_table(run / "bands_dvector.csv", ["j1", "j2", "k", "d_x", "d_y"],
                [(j1, j2, k, j1 + j2 * np.cos(k), j2 * np.sin(k))
                 for j1, j2 in ((1.0, 0.6), (0.6, 1.0)) for k in ks])
    for chain in ("chain40", "chain41"):
        write_table(run / f"{chain}_spectrum_vs_j1.csv", ["j1", "level", "energy"],
                    [(j1, lv, (lv - 1.5) * (0.5 + j1)) for j1 in (0.0, 0.5, 1.0) for lv in range(4)])
        write_table(run / f"{chain}_state_profile.csv", ["site", "density"],
                    [(s, np.exp(-s)) for s in range(8)])
    ts = np.linspace(0.0, 1.0, 6)
    for a in (2, 6, 10):
        base = f"drive_a{a}"
        write_table(run / f"{base}_waveforms.csv", ["t", "j1", "j2", "v_a", "v_b"],
                    [(t, 1 - t, t, -t, t) for t in ts])
        write_table(run / f"{base}_instantaneous_spectrum.csv", ["t", "level", "energy"],
                    [(t, lv, lv - 2 + 0.1 * t) for t in ts for lv in range(5)])
        write_table(run / f"{base}_gap_track.csv", ["t", "gap_energy", "min_gap"],
                    [(t, -t, 0.1 + 0.01 * a) for t in ts])
        write_table(run / f"{base}_gap_profile.csv", ["t", "site", "density"],
                    [(t, s, t * s / 40.0) for t in ts for s in range(9)])
    write_table(run / "drive_a2_mingap_vs_alpha.csv", ["alpha", "min_gap"],
                [(a, 0.05 + 0.01 * a) for a in (2, 4, 6, 8, 10)])
    for label in ("fid_cos", "fid_exp", "router_fid_cos", "router_fid_exp"):
        write_table(run / f"{label}_fidelity_curve.csv", ["t_star", "fidelity"],
                    [(t, 1 - np.exp(-t / 40.0)) for t in np.arange(10.0, 200.0, 10.0)])
    for label in ("evolve_cos", "evolve_exp", "router_evolve_cos", "router_evolve_exp"):
        write_table(run / f"{label}_populations.csv", ["t", "site", "population"],
                    [(t, s, abs(np.sin(0.2 * t + s))) for t in ts * 10 for s in range(9)])
        write_table(run / f"{label}_final_state.csv", ["site", "re", "im", "probability", "phase"],
                    [(s, 0.1 * s, 0.0, 0.01 * s, 0.0) for s in range(9)])
    for label in ("phase21", "phase33"):
        write_table(run / f"{label}_phase_diagram.csv", ["alpha", "t_star", "fidelity"],
                    [(a, t, min(1.0, t / (50 + 20 * a))) for a in (2.0, 3.0, 4.0)
                     for t in np.arange(20.0, 220.0, 20.0)])
    for label in ("sizes_cos", "sizes_exp"):
        write_table(run / f"{label}_stabilization_vs_size.csv", ["size", "alpha", "t_stab"],
                    [(l, 0.2 * l, 3.0 * l) for l in (13, 17, 21, 25)])
    write_table(run / "fitexp_fit_curve.csv", ["x", "y", "y_fit"],
                [(l, 3.0 * l, 3.0 * l + 0.5) for l in (13, 17, 21, 25)])
    for channel in ("diag", "off"):
        for kind in ("cos", "exp"):
            write_table(run / f"dis_time_{channel}_{kind}_disorder_vs_time.csv",
                        ["t_star", "mean_fidelity", "std_fidelity", "samples",
                         "mean_abs_dphi", "std_abs_dphi", "phase_defined", "clean_fidelity"],
                        [(t, 0.9, 0.02, 20, 0.01, 0.002, 20, 0.95) for t in (100.0, 200.0, 300.0)])
            write_table(run / f"dis_w_{channel}_{kind}_disorder_stats.csv",
                        ["strength", "mean_fidelity", "std_fidelity", "samples",
                         "mean_abs_dphi", "std_abs_dphi", "phase_defined"],
                        stats_rows((0.1, 0.3, 0.5)))
            write_table(run / f"asym_{channel}_{kind}_disorder_stats.csv",
                        ["strength", "mean_fidelity", "std_fidelity", "samples",
                         "mean_abs_dphi", "std_abs_dphi", "phase_defined"],
                        stats_rows((0.1, 0.3, 0.5)))
    for label in ("loss_cos", "loss_exp", "loss_asym_cos", "loss_asym_exp"):
        write_table(run / f"{label}_loss_stats.csv",
                    ["gamma", "mean_fidelity", "std_fidelity", "samples",
                     "mean_abs_dphi", "std_abs_dphi", "phase_defined"],
                    stats_rows((0.0, 1e-5, 2e-5)))
    for label in ("sizephase_cos", "sizephase_exp"):
        write_table(run / f"{label}_size_diagram.csv", ["size", "t_star", "fidelity"],
                    [(l, t, min(1.0, t / (30.0 * l))) for l in (13, 17, 21)
                     for t in np.arange(100.0, 900.0, 100.0)])
    for label in ("sizeloss_cos", "sizeloss_exp"):
        write_table(run / f"{label}_fidelity_vs_size_loss.csv", ["size", "alpha", "fidelity"],
                    [(l, 0.2 * l, 1.0 - 0.01 * l) for l in (13, 17, 21, 25)])
    write_table(run / "branches_stabilization_vs_branches.csv", ["branches", "t_stab"],
                [(k, 80.0 + 5.0 * k) for k in (2, 3, 4, 5, 6)])


def test_complete_run_renders_full_gallery(tmp_path):
    run = tmp_path / "run"
    make_complete_run(run)
    produced, skipped = render_all(run, run / "figures")
    assert len(produced) >= 10
    assert not skipped
    assert sorted(produced) == sorted(r.fig_id for r in RECIPES)
    index = (run / "figures" / "index.html").read_text()
    for fig_id in produced:
        assert f"{fig_id}.svg" in index
        assert (run / "figures" / f"{fig_id}.svg").exists()


def test_rerun_is_byte_identical(tmp_path):
    run = tmp_path / "run"
    make_complete_run(run)
    render_all(run, run / "f1")
    render_all(run, run / "f2")
    for path in sorted((run / "f1").glob("*.svg")):
        assert path.read_bytes() == (run / "f2" / path.name).read_bytes(), path.name


def test_partial_run_reports_skips(tmp_path):
    run = tmp_path / "run"
    ks = np.linspace(-np.pi, np.pi, 5)
    write_table(run / "bands_dispersion.csv", ["j1", "j2", "k", "e_minus", "e_plus"],
                [(1.0, 0.6, k, -1.0, 1.0) for k in ks])
    write_table(run / "bands_dvector.csv", ["j1", "j2", "k", "d_x", "d_y"],
                [(1.0, 0.6, k, np.cos(k), np.sin(k)) for k in ks])
    produced, skipped = render_all(run, run / "figures")
    assert produced == ["fig02"]
    skipped_ids = [fig_id for fig_id, _ in skipped]
    assert "fig07" in skipped_ids
    missing = dict(skipped)["fig07"]
    assert "fid_cos_fidelity_curve.csv" in missing
    index = (run / "figures" / "index.html").read_text()
    assert "Skipped" in index


def test_missing_column_fails_loudly(tmp_path):
    run = tmp_path / "run"
    write_table(run / "branches_stabilization_vs_branches.csv", ["branches", "wrong"],
                [(2, 100.0)])
    with pytest.raises(TableError, match="t_stab"):
        recipe_by_id("fig16").render(run, run / "figures")


def test_empty_table_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# nothing\na,b\n")
    with pytest.raises(TableError, match="empty"):
        read_table(path)


class TestCli:
    def test_render_all_cli(self, tmp_path, capsys):
        run = tmp_path / "run"
        make_complete_run(run)
        assert main(["render", "--run", str(run)]) == 0
        out = capsys.readouterr().out
        assert "rendered" in out
        assert (run / "figures" / "index.html").exists()

    def test_only_single_figure(self, tmp_path):
        run = tmp_path / "run"
        make_complete_run(run)
        assert main(["render", "--run", str(run), "--only", "fig16", "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "fig16.svg").exists()

    def test_only_missing_inputs_exit_2(self, tmp_path):
        assert main(["render", "--run", str(tmp_path), "--only", "fig16"]) == 2

    def test_unknown_figure_exit_2(self, tmp_path):
        run = tmp_path / "run"
        run.mkdir()
        assert main(["render", "--run", str(run), "--only", "fig99"]) == 2

    def test_list(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "fig02" in out and "bands_dispersion.csv" in out
