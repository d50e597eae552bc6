"""mirrorgame: virtual-player control and analysis for the 2D waggle-dance mirror game.

Subpackages by concern:

- hkb          coupled-oscillator model, Jacobian, RK4 simulation
- sigproc      smoothing, velocity estimation, resampling, trajectory CSV I/O
- controllers  iterative learning law, online gated variant, PD / optimal baselines
- metrics      RMSE, circular variance of relative phase, motion range, radar areas
- convergence  contraction constants, time-weighted norms, bound checking
- harness      synthetic leaders, dyad experiment runner, benchmark matching
- service      real-time session engine and line-protocol server
"""

from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateMotionError,
    DivergenceError,
    FormatError,
    InsufficientDataError,
    InvalidStateError,
    MirrorGameError,
    ParseError,
    SessionError,
    UndefinedBenchmarkError,
)
from .hkb import (
    B_MATRIX,
    C_POSITION,
    C_VELOCITY,
    DEFAULT_PARAMS,
    HkbParams,
    drift,
    jacobian,
    simulate,
    step,
)
from .trajectory import Trajectory, n_samples

__version__ = "0.1.0"
