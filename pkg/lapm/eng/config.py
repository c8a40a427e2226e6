import os
from pathlib import Path

__default_dir = '.lapm_data'

DATA_HOME = Path(os.environ.get('LAPM_DATA', __default_dir))
if not DATA_HOME.exists():
    DATA_HOME.mkdir(parents=True)
    print(f"[init] Created data home at {DATA_HOME}")
DATA_HOME = DATA_HOME.resolve().absolute()
LOG_HOME = DATA_HOME / 'logs'
LOG_HOME.mkdir(exist_ok=True)

DEBUG_MODE = os.environ.get('LAPM_DEBUG', '0') == '1'

# threads for scipy.fft and for the per-delta sweep pool
__env_workers = os.environ.get('LAPM_WORKERS', None)
if __env_workers is not None:
    N_WORKERS = max(1, int(__env_workers))
else:
    N_WORKERS = min(4, os.cpu_count() or 1)

# |zeta - |xi_k|^2| below this counts as a lattice resonance
RESONANCE_GAP = float(os.environ.get('LAPM_RESONANCE_GAP', '1e-12'))

KRYLOV_RESTART = 50
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
NEUMANN_THRESHOLD = 0.5
MIKHLIN_STEP = 1e-4
MIKHLIN_MIN_RADIUS = 1e-3
PROBE_BANDWIDTH_FRACTION = 4        # probe fields keep |k_j| <= N // 4
HERMITIAN_TOL = 1e-12
IM_IDENTITY_SPREAD = 0.2           # allowed relative spread of the fitted c over the last half of the deltas

# periodic stand-in for decay at infinity: max |eps mu - eps_inf mu_inf| on boundary cells,
# relative to eps_inf mu_inf
MEDIUM_DECAY_THRESHOLD = float(os.environ.get('LAPM_DECAY_THRESHOLD', '1e-2'))
MIN_BUMP_WIDTH_CELLS = 6
