"""CLI: v2xplot <figure-kind> --in <dir> [<dir> ...] --out <file>."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="v2xplot", description="Render simulator metric CSVs into figures")
    ap.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    ap.add_argument("--in", dest="input_dirs", nargs="+", required=True,
                    help="run output directories holding the metric CSVs")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--user-kind", default="cue", choices=("cue", "vue"),
                    help="population for delay-cdf")
    ap.add_argument("--scope", default="per_cue_grant",
                    choices=("per_cue_grant", "per_vue_grant", "cue_total_per_tti"),
                    help="series for rb-cdf")
    ap.add_argument("--dpi", type=int, default=120)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, input_dirs=tuple(args.input_dirs), output_path=args.out,
                      user_kind=args.user_kind, scope=args.scope, dpi=args.dpi)
    try:
        out = render(spec)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
