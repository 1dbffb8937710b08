"""Golden Ball: a league-based multi-population metaheuristic for routing and permutation problems."""
from ._jit import NUMBA_ENABLED
from .baselines import ALGORITHMS, GaConfig, DgaConfig, dga_run, ea_run, esa_run, ga_run, run_algorithm
from .core import (GoldenBallError, InfeasibleOffspring, InvalidMove, MalformedGenotype, Problem,
                   RngStream, RunRecord, derive_seed, neighborhood_budget)
from .engine import GbConfig, run
from .instances import load_bundled, load_tsplib, parse_instance, parse_tsplib, serialize_instance
from .operators import MoveKind
from .problems import BppInstance, CvrpInstance, NqpInstance, TspInstance, VrpbInstance
from .richvrp import AcVrpInstance, MaTspSpdInstance, generate_acvrp, generate_matspspd

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "ALGORITHMS", "GaConfig", "DgaConfig", "dga_run", "ea_run", "esa_run",
    "ga_run", "run_algorithm", "GoldenBallError", "InfeasibleOffspring", "InvalidMove",
    "MalformedGenotype", "Problem", "RngStream", "RunRecord", "derive_seed",
    "neighborhood_budget", "GbConfig", "run", "load_bundled", "load_tsplib", "parse_instance",
    "parse_tsplib", "serialize_instance", "MoveKind", "BppInstance", "CvrpInstance",
    "NqpInstance", "TspInstance", "VrpbInstance", "AcVrpInstance", "MaTspSpdInstance",
    "generate_acvrp", "generate_matspspd",
]
