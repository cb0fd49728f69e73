"""subsetlab: exact subset-search support recovery and its surrounding toolkit.

Library layout:

- :mod:`subsetlab.design` — design covariances and the conditional-covariance
  floor (omega) of support classes,
- :mod:`subsetlab.sampler` — ground-truth instances and seeded Gaussian data,
- :mod:`subsetlab.estimators` — exact subset search (fixed and penalized
  size), information criteria, and the efficient baselines,
- :mod:`subsetlab.theory` — signal strengths, sample-size calculators, KL
  divergences, testing thresholds, chi-square tail bounds,
- :mod:`subsetlab.restricted` — restricted-eigenvalue certificates, the
  efficiency gap, and the block near-isometry check,
- :mod:`subsetlab.harness` — deterministic Monte Carlo sweeps and CSV output,
- :mod:`subsetlab.cli` — the ``subsetlab`` command.
"""

from .design import (
    Covariance,
    CovarianceTag,
    OmegaReport,
    compute_omega_known,
    compute_omega_unknown,
    conditional_covariance,
    load_covariance,
    make_equicorrelation,
    make_identity,
    make_two_by_two,
    save_matrix,
)
from .errors import (
    AsymmetricMatrixError,
    BudgetExceededError,
    ConfigError,
    EmptyDifferenceError,
    InternalConsistencyError,
    InvalidParameterError,
    MatrixFormatError,
    NoCrossingError,
    NotPositiveDefiniteError,
    SingularSupportError,
    SubsetLabError,
)
from .estimators import (
    Diagnostics,
    EstimatorSpec,
    LassoFit,
    LassoSelection,
    RssEngine,
    aic,
    bic,
    bss,
    bssu,
    build_engine,
    default_tau,
    lasso_cd,
    lasso_select,
    lasso_support,
    marginal_screening,
    omp,
    rss,
    run_estimator,
    solve_coefficients,
)
from .harness import (
    BoundsRow,
    GapSweep,
    SweepConfig,
    SweepResult,
    SweepRow,
    emit_csv,
    emit_plot_script,
    empirical_n_star,
    interpolate_n50,
    load_config,
    parse_config_text,
    read_sweep_csv,
    run_gap_experiment,
    run_phase_sweep,
    trial_seed,
    verify_bounds,
    wilson_interval,
)
from .restricted import (
    GapReport,
    ReCertificate,
    SrcReport,
    check_src,
    cone_feasible,
    evaluate_gap,
    poly_lower_bound,
    re_constant,
)
from .rng import generator, mix64, substream
from .sampler import (
    ClassParams,
    DataSet,
    MembershipReport,
    ProblemInstance,
    check_membership,
    make_beta,
    make_instance,
    read_dataset_csv,
    sample_dataset,
    write_dataset_csv,
)
from .subsets import (
    SupportSet,
    binom,
    colex_combinations,
    colex_rank,
    colex_unrank,
    combination_array,
    revolving_door_combinations,
)
from .theory import (
    BoundReport,
    FanoReport,
    FixedDesignSignals,
    SignalReport,
    TailEstimate,
    bound_lower_dimension,
    bound_lower_equicorr,
    bound_lower_unknown,
    bound_upper_generic,
    bound_upper_known,
    bound_upper_unknown,
    chisq_tail_bound,
    empirical_chisq_tail,
    empirical_kl,
    fano_threshold,
    fixed_design_deltas,
    kl_between_supports,
    log_binom,
    pairwise_delta,
    signal_delta,
)

__version__ = "0.1.0"
