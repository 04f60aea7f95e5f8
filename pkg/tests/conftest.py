"""
Shared fixtures; puts the repository root on sys.path so tests import src.*
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

