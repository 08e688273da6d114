# modules/__init__.py
"""
HoloWorld - Learnable FHRR world models, baselines and experiment harness.
"""
__version__ = "0.1.0"

from .harness import RunOptions, RunResult, execute, run
from .training import train
from .baseline_mlp import mlp_train

__all__ = ["__version__", "RunOptions", "RunResult", "execute", "run", "train", "mlp_train"]
