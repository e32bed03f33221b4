#!/usr/bin/env python3
"""
Moment Operator Lab startup script
Forwards every argument to the experiment CLI
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
