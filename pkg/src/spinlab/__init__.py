"""spinlab: mean-field O(N) spin models — sampling, thermodynamics, limit laws."""

from .model import ModelParams, SpinConfiguration
from .sampler import (
    ChainState,
    ExchangeablePairSample,
    PairBatch,
    WStatistic,
    chain_rng,
    collect_pairs,
    gibbs_sweep,
    glauber_step,
    make_pair,
    run_chain,
    uniform_sphere,
    vmf_sample,
)
from .specfun import (
    BesselOrder,
    b_constant,
    bessel_i,
    bessel_ratio,
    bessel_ratio_deriv,
    sphere_area,
    tangent_second_moment,
)
from .thermo import (
    PhasePoint,
    TiltedDensity,
    free_energy,
    magnetization,
    phase_point,
    phi,
    rate_function,
    solve_fixed_point,
    supercritical_variance,
    tilted_density,
)
from .limits import (
    CriticalDensity,
    LimitLaw,
    PairPrediction,
    calibrate_c_n,
    critical_cdf,
    critical_density,
    critical_pdf,
    pair_prediction,
    stein_operator,
    stein_solve,
    w_critical,
    w_subcritical,
    w_supercritical,
)
from .runner import RunManifest, limit_check, run_manifest, stein_diagnostics

__version__ = "0.1.0"
