__version__ = "0.1.0"

from rhlab.config import ExperimentPlan, parse_config
from rhlab.cz import (
    CZBlock,
    CZKernelProfile,
    CZReport,
    averaging_defect,
    check_block,
    commutator,
    cz_norm,
    cz_profile,
    rho_k_split,
    telescope,
    window_decompose,
)
from rhlab.kernel import Kernel, convolve, op_norm, symbol
from rhlab.params import Params, ScaleGrid, bump, dyadic_range, validate
from rhlab.resolvent import (
    AlgebraElement,
    algebra_norm,
    algebra_product,
    asymptotics_sweep,
    fit_expansion,
    neumann_kernel,
    resolvent_kernel,
    resolvent_set_margin,
)
from rhlab.table import SweepTable, Table
from rhlab.transform import assemble, block_kernel, truncate
from rhlab.weaktype import cz_cubes, cz_decompose, maximal_truncation_norm, weak_l1, weak_sweep
