import sys
from pathlib import Path

# make reference.py importable from all test modules
sys.path.insert(0, str(Path(__file__).parent))
