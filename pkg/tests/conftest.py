import sys
from pathlib import Path

# Prefer the in-repo sources so the suite runs without an installed package.
_src = Path(__file__).resolve().parents[1] / "src"
if str(_src) not in sys.path:
    sys.path.insert(0, str(_src))
