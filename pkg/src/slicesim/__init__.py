"""Online network-slice provisioning simulator with three solvers."""

__version__ = "0.1.0"

from .config import Config, parse_config  # noqa: F401
from .demand import ArrivalProcess, Request, RequestQueue  # noqa: F401
from .engine import RunResult, Simulation, run  # noqa: F401
from .exact import ExactSolver, build_instance, solve_exact  # noqa: F401
from .greedy import GreedySolver, greedy_solve  # noqa: F401
from .slicing import (  # noqa: F401
    Path,
    SliceInstance,
    build_slice,
    check_bandwidth,
    check_latency,
    enumerate_feasible_paths,
    evaluate_assignment,
    jain_fairness,
    slice_cost,
)
from .topology import (  # noqa: F401
    LinkAttr,
    NetworkGraph,
    ResidualState,
    generate_random_graph,
    load_graph,
    save_graph,
)
