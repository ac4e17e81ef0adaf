"""
Main entry point for the in-orbit analytics toolkit.

Runs the command-line interface, e.g.::

    python main.py plan jetson3 --output plan.json
    python main.py route jetson3 plan.json --output routing.json
    python main.py simulate jetson3 plan.json routing.json --output metrics.csv
"""

import sys
from pathlib import Path

# Add the repository root to path
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
