#!/usr/bin/env python3
"""Top-level runner for the edge_ann command line.

Lets you run `python Run_Edge_ANN.py <command> ...` from the repository root
without installing anything. It delegates to `edge_ann.cli.main()`.
"""

import sys
from pathlib import Path

# The package lives in a folder with a space in its name
# (`edge ann/edge_ann`), so put that parent on sys.path first.
ROOT = Path(__file__).resolve().parent
pkg_parent = ROOT / "edge ann"
if (pkg_parent / "edge_ann").exists():
    sys.path.insert(0, str(pkg_parent))

from edge_ann.cli import main


if __name__ == "__main__":
    sys.exit(main())
