"""Space-time fractional diffusion by parametric subordination of random walks."""

from .errors import AccuracyError, DegenerateLawError, ParameterError, TruncationError
from .stable_laws import (
    ExtremalStableLaw,
    RngStream,
    StableLaw,
    extremal_stable_cdf,
    extremal_stable_density,
    riesz_feller_symbol,
    sample_extremal_stable,
    sample_stable,
    stable_cdf,
    stable_density,
)
from .special_functions import GridFunction, m_wright, mittag_leffler, riemann_liouville_integral
from .subordination import (
    DiffusionParams,
    GridDensity,
    directing_cdf,
    directing_density,
    green_function_cdf,
    green_function_fourier,
    parent_density,
    subordinate_cdf,
    subordinate_density,
    verify_q_via_rl_integral,
)
from .ctrw_engine import (
    CtrwSpec,
    JumpLaw,
    WaitingLaw,
    compound_poisson_density,
    ctrw_series_density,
    diffusion_limit_symbol,
    montroll_weiss,
    survival,
)
from .paths import (
    RefinementLevel,
    SamplePath,
    directing_path_from_leading,
    evaluate_path,
    leading_path,
    parent_path,
    subordinated_path,
)

__version__ = "0.1.0"
