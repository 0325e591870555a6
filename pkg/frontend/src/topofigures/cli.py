"""`figures render --run <dir> [--only figNN] [--out <dir>]`"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .recipes import RECIPES, recipe_by_id, render_all
from .tables import TableError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figures", description="Render figures from run tables.")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render the gallery (or one figure) from a run directory")
    render.add_argument("--run", required=True, help="directory holding the CSV result tables")
    render.add_argument("--only", default=None, metavar="figNN", help="render a single recipe")
    render.add_argument("--out", default=None, help="output directory (default: <run>/figures)")
    listing = sub.add_parser("list", help="list recipes and their input tables")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for recipe in RECIPES:
            print(f"{recipe.fig_id}: {recipe.title}")
            for name in sorted(set(recipe.inputs.values())):
                print(f"    {name}")
        return 0
    run_dir = Path(args.run)
    out_dir = Path(args.out) if args.out else run_dir / "figures"
    try:
        if args.only:
            recipe = recipe_by_id(args.only)
            missing = recipe.missing_inputs(run_dir)
            if missing:
                raise TableError(f"{recipe.fig_id}: missing inputs: {', '.join(missing)}")
            out = recipe.render(run_dir, out_dir)
            print(f"rendered {out}")
            return 0
        produced, skipped = render_all(run_dir, out_dir)
        print(f"rendered {len(produced)} figure(s) into {out_dir}")
        for fig_id, missing in skipped:
            print(f"skipped {fig_id}: missing {', '.join(missing)}")
        return 0
    except TableError as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
