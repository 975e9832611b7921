from ._tiox import (
    TioxError,
    bragg_d,
    bragg_two_theta,
    classify_phase,
    diffusion_length,
    enumerate_sublattices,
    fit_diffusion,
    fit_lifetime,
    fit_line,
    fit_voigt,
    mcia,
    predict_phase,
    rms_roughness,
    run_cli,
    saturation_scan,
    voigt,
)

__version__ = "0.1.0"
