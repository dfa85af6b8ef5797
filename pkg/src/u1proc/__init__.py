"""Simulation of probabilistic programmable processors for unknown U(1) rotations."""
from .analysis import (
    first_passage_oracle,
    matching_deficit_oracle,
    p_asymptotic,
    p_multicopy,
    p_preprocess,
    p_vmc,
)
from .preprocess import (
    AllocationPlan,
    BasisPermutation,
    build_allocation,
    measurement_cascade,
    q_distribution,
    synthesize_permutation,
)
from .processor import (
    ProcessorSpec,
    ProgramOperator,
    cnot_processor,
    hzb_u1_processor,
    run_processor,
    single_shot_processor,
    verify_unitarity,
)
from .programs import basic_program, copies_program, vmc_program
from .protocols import (
    ProtocolResult,
    TrialRng,
    run_hzb,
    run_multicopy_iterative,
    run_preprocess_pipeline,
    run_single_shot,
    run_vmc_iterative,
    scheme_equivalence_table,
)
from .statevec import (
    MeasurementBranch,
    StateVector,
    apply_u1,
    fidelity_up_to_global_phase,
    measure_subregister,
    tensor,
)

__version__ = "0.1.0"
