"""Finite-window computations for exchangeable and quasi-exchangeable processes."""

from .core import (
    Alphabet,
    Cylinder,
    CylinderError,
    FinitePermutation,
    PartialCylinder,
    ScatteredCylinderError,
    Window,
    perm_apply_to_cylinder,
    perm_block_swap,
    perm_compose,
    perm_inverse,
    perm_transposition,
    shift_cylinder,
)
from .measures import (
    BernoulliMeasure,
    CylinderProb,
    DeterminantalMeasure,
    MarkovMeasure,
    MixtureMeasure,
    cylinder_prob,
    load_measure,
    lump_to_binary,
    measure_from_dict,
    validate_measure,
)
from .dpp import (
    SineKernel,
    ToeplitzKernel,
    dpp_inclusion_prob,
    dpp_window_config_prob,
    inclusion_exclusion_prob,
    sine_kernel_value,
)
from .sampling import sample_path
from .exchange import check_exchangeable, quasi_witness_markov, rn_ratio_table, symmetrize
from .bernoullicity import ergodic_average, independence_gap
from .definetti import MomentSequence, hankel_psd_check, moments, recover_atoms

__version__ = "0.1.0"
