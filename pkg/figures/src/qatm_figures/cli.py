"""figures-render: draw the canned figures from a dataset manifest."""

from __future__ import annotations

import argparse
import sys

from .io import ParseError
from .render import render_all


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="figures-render", description=__doc__)
    parser.add_argument("--manifest", required=True, metavar="PATH",
                        help="figures_manifest.json produced by the dataset CLI")
    parser.add_argument("--out", required=True, metavar="DIR", help="image output directory")
    args = parser.parse_args(argv)
    try:
        written = render_all(args.manifest, args.out)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
