"""bellkit: analysis of bipartite measurement correlations.

Validate no-signaling, build the compatible joint distributions whose
existence it guarantees, evaluate CHSH Bell quantities in both forms,
bound how much a joint distribution of one lab's quantities must vary with
the remote setting choice, and decide local-model membership by linear
programming — plus generators for classical, super-quantum and two-qubit
quantum correlations and a seeded Monte Carlo experiment simulator.
"""

__version__ = "0.1.0"

from .core import (
    Behavior,
    BellkitError,
    EmpiricalBehavior,
    NormalizationError,
    OutcomeLabelError,
    Scenario,
    ScenarioMismatchError,
    SchemaError,
    SettingIndexError,
    ValidationReport,
    correlation_E,
    dump_behavior,
    equality_probability,
    load_behavior,
    load_empirical,
    mix,
)
from .nosignal import (
    CompatibleJoint,
    NoSignalingError,
    alice_marginal,
    bob_marginal,
    build_compatible_joint,
    check_no_signaling,
    check_no_signaling_empirical,
    verify_compatibility,
)
from .bell import (
    ChshPermutation,
    ChshReport,
    ConundrumReport,
    all_permutations,
    canonical_permutation,
    chsh_probability_form,
    chsh_S,
    conundrum_report,
    gap_lower_bound,
    max_report,
)
from .feasibility import (
    BellCertificate,
    DeterministicVertex,
    GlobalJoint,
    JointInvarianceError,
    MembershipResult,
    SignedJointResult,
    VertexCapError,
    build_global_joint,
    enumerate_vertices,
    local_membership,
    min_invariance_gap,
    min_tv_separation,
    signed_invariant_joint,
    weights_to_global_joint,
)
from .generators import (
    LHVModel,
    ModelDimensionError,
    QuantumSetup,
    dice_behavior,
    dice_demo_model,
    from_equality_probabilities,
    lhv_behavior,
    lhv_compatible_joints,
    load_lhv_model,
    maximally_correlated_state,
    noisy_pr_box,
    polarizer_lhv_model,
    pr_box,
    quantum_behavior,
    singlet_state,
    tsirelson_behavior,
    tsirelson_setup,
)
from .runner import (
    Dataset,
    analyze,
    estimate_behavior,
    report_to_json,
    report_to_text,
    simulate_runs,
    sweep,
    sweep_to_csv,
)
from .simplex import LPFailureError, LPSolution, solve_lp
