"""Entry point for the sgdp command line."""

import sys
from pathlib import Path

# Ensure packages are importable when running from source
sys.path.insert(0, str(Path(__file__).resolve().parent))

from app.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
