"""Expected shot value for tennis tracking data.

Pipeline: functional encoding of shot events, a variational DP Gaussian
mixture over encodings, exact conditioning on partial observations, outcome
prediction, and Monte Carlo estimation of shot value and the derived
shot-taking / shot-selection / court-coverage metrics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
