import sys
from pathlib import Path

# make the package importable without installation, so the combined test run
# works even when only the primary component is installed
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
