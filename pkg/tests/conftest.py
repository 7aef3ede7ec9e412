import sys
from pathlib import Path

# lets test modules import the shared helpers in _data.py
sys.path.insert(0, str(Path(__file__).parent))
