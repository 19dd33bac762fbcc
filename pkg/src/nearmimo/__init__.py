"""Near-field XL-MIMO localization and channel estimation toolkit.

Simulates uplink reception through sub-connected planar arrays and
implements a three-stage estimator: subarray-wise sparse channel
recovery over angular dictionaries, MUSIC-refined least-squares 3D
localization, and location-aided dictionary recovery of the full MIMO
channel, together with antenna-wise and eigen-dictionary baselines and
a reproducible Monte-Carlo harness.
"""

from .channel import (
    ChannelRealization,
    PathParams,
    Scene,
    far_field_steering,
    los_channel,
    near_field_steering,
    planar_far_field_steering,
    synthesize,
)
from .dictionaries import (
    AngularDictionary,
    LocationDictionary,
    SphericalDictionary,
    build_angular,
    build_location,
    build_spherical_baseline,
)
from .doa import extract_axis_factors, music_1d, subarray_covariance
from .geometry import (
    ArrayGeometry,
    SubarrayTiling,
    build_ula,
    build_upa,
    partition,
    recover_kx,
    wave_vector,
)
from .harness import (
    ExperimentConfig,
    ResultTable,
    desk_profile,
    nmse,
    paper_profile,
    rmse,
    run_sweep,
)
from .localization import LocationEstimate, Ray, ls_intersect
from .matfile import load_matrix, save_matrix
from .pipeline import (
    ReceptionRecord,
    StageOptions,
    StageOutputs,
    run_three_stage,
    simulate_reception,
    stage1,
    stage2,
    stage3,
)
from .sensing import (
    CombinerDesign,
    PrecoderDesign,
    design_combiner,
    design_precoder_dft,
    random_combiner,
    uniform_precoder,
)
from .solvers import SblState, SparseProblem, SparseSolution, omp, sbl_em

__version__ = "0.1.0"
