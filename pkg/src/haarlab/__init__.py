"""haarlab: numerical laboratory for the Haar system in Besov and
Triebel-Lizorkin scales on periodic dyadic grids."""

from .dyadic import (
    DyadicCube,
    boundary_shell,
    children,
    cube,
    in_u_set,
    neighbor_cubes,
    omega_child,
    parent,
)
from .grid import GridField, GridSpec, field_from_function, load_field, save_field
from .haar import (
    Enumeration,
    HaarIndex,
    MaskA,
    build_canonical_enumeration,
    check_admissible,
    dyadic_average,
    haar_coeff,
    haar_eval,
    haar_field,
    haar_frequencies,
    partial_sum,
    projection_PE,
    scaling_index,
    t_mask,
    wavelet_index,
)
from .kernels import (
    KernelBank,
    SmoothnessParams,
    build_kernel_bank,
    fourier_gradient,
    lambda_op,
    lj_lambda_j,
    local_mean,
    make_params,
    peetre_max,
    pi_op,
)
from .norms import NormReport, besov_norm, cube_functional, tl_norm
from .generators import (
    RademacherSigns,
    counterexample_gN,
    density_failure_f,
    fractal_family,
    tensor_GN,
    unc_packet,
    weierstrass_packet,
)
from .experiments import (
    OperatorSpec,
    RateFit,
    RegionVerdict,
    classify,
    identity_suite,
    nonconvergence_probe,
    op_norm_lower,
    probe_battery,
    rate_fit,
    region_scan,
)

__version__ = "0.1.0"
