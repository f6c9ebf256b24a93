from .base import IterationReport, Recorder, Status, StoppingRule, final_status
from .derivative_free import SwarmConfig, mc_run, powell_run, pso_run
from .newton import (bfgs_run, bfgs_update, cg_run, default_eta, gd_run, lbfgs_run,
                     newton_cg_direction, tnc_run, two_loop)

__all__ = [
    "IterationReport", "Recorder", "Status", "StoppingRule", "final_status",
    "SwarmConfig", "mc_run", "powell_run", "pso_run",
    "bfgs_run", "bfgs_update", "cg_run", "default_eta", "gd_run", "lbfgs_run",
    "newton_cg_direction", "tnc_run", "two_loop",
]
