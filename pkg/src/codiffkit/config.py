"""Default numerical tolerances.

Every public function that compares floats takes an explicit ``tol`` keyword
whose default is read from here.
"""
from dataclasses import dataclass

GEOM_TOL = 1e-9          # geometric predicates: prune, hull membership
FW_MAX_ITER = 10_000     # conditional-gradient iteration cap
STAT_TOL = 1e-7          # stationarity memberships
ACTIVE_TOL = 1e-8        # active-vertex threshold, scaled by 1 + |F(x)|
FEAS_TOL = 1e-9          # constraint feasibility
DRIFT_TOL = 1e-7         # normalisation drift allowed inside the calculus
SELECTION_CAP = 10_000   # hyper-vertex selections enumerated per check


def active_tol(fx: float = 0.0, base: float = ACTIVE_TOL) -> float:
    """Activity threshold for offsets of a codifferential computed at ``F(x) = fx``."""
    return base * (1.0 + abs(fx))


@dataclass(frozen=True)
class Tolerances:
    geom: float = GEOM_TOL
    stat: float = STAT_TOL
    active: float = ACTIVE_TOL
    feas: float = FEAS_TOL
    fw_max_iter: int = FW_MAX_ITER
    selection_cap: int = SELECTION_CAP
