"""Command line entry point: `report --in DIR --out DIR --format png|svg`."""
from __future__ import annotations

import argparse
import sys

from .figures import make_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render figures from a solver run or sweep output directory.",
    )
    parser.add_argument("--in", dest="in_dir", required=True, help="run or sweep directory")
    parser.add_argument("--out", dest="out_dir", required=True, help="figure destination")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    args = parser.parse_args(argv)

    try:
        rows = make_report(args.in_dir, args.out_dir, args.format)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(rows)} figures to {args.out_dir}")
    print(f"manifest: {args.out_dir}/manifest.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
