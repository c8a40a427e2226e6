import os
from ..config import SANDBOX_DIR, DATA_DIR_NAME, clear_sandbox

# must be set before lapm.eng.config is imported
os.environ.setdefault('LAPM_DATA', str(SANDBOX_DIR / DATA_DIR_NAME))
os.environ['LAPM_DEBUG'] = '1'
os.environ.setdefault('LAPM_WORKERS', '1')

import math
import numpy as np
import pytest
from lapm.eng.grid_field import Grid, Field

def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b))) / (scale if scale > 0 else 1.0)

def cosine_field(grid: Grid, k, amplitude) -> Field:
    """ amplitude * cos(xi_k . x) """
    phase = np.tensordot(np.asarray(k, dtype=float) * (2 * math.pi / grid.L), grid.coordinates, axes=1)
    amp = np.asarray(amplitude, dtype=np.complex128).reshape((-1,) + (1,) * grid.n)
    return Field(grid, amp * np.cos(phase)[None])

def sine_field(grid: Grid, k, amplitude) -> Field:
    phase = np.tensordot(np.asarray(k, dtype=float) * (2 * math.pi / grid.L), grid.coordinates, axes=1)
    amp = np.asarray(amplitude, dtype=np.complex128).reshape((-1,) + (1,) * grid.n)
    return Field(grid, amp * np.sin(phase)[None])

@pytest.fixture
def sandbox():
    d = SANDBOX_DIR / "work"
    d.mkdir(parents=True, exist_ok=True)
    yield d
    clear_sandbox()
