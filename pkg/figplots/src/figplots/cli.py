"""Command line: figplots <panel_id> <csv> <out_image>."""

from __future__ import annotations

import argparse
import sys

from .panels import RENDERERS, PanelError, plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figplots", description=__doc__)
    parser.add_argument("panel_id", choices=sorted(RENDERERS), help="panel to render")
    parser.add_argument("csv", help="results CSV produced by the simulation CLI")
    parser.add_argument("out", help="output image path (PNG)")
    args = parser.parse_args(argv)
    try:
        plot(args.csv, args.panel_id, args.out)
    except (PanelError, OSError) as exc:
        print(f"figplots: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
