"""Multi-agent navigation with safety barrier certificates and pseudo-goal perturbation."""

__version__ = "0.1.0"

from spgpnav.harness import run_experiment, sweep_radius
from spgpnav.kernels import BACKEND
from spgpnav.scenarios import build_scenario, load_scenario, save_scenario
from spgpnav.simulator import run

__all__ = ["BACKEND", "build_scenario", "load_scenario", "run", "run_experiment",
           "save_scenario", "sweep_radius", "__version__"]
