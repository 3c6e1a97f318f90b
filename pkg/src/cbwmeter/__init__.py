"""Coupled-MZI wavemeter simulation: unitaries, netlists, fringes and estimation."""

from .estimator import (
    FisherReport,
    FitResult,
    McReport,
    ScalingReport,
    WavelengthEstimate,
    crlb,
    fisher_information,
    fit_frequency,
    fractional_wavelength_uncertainty,
    monte_carlo,
    scaling_sweep,
    wavelength_from_fit,
)
from .fringes import (
    FringeCurve,
    Interferogram,
    InterferogramParams,
    ideal_fringes,
    second_moment,
    synthesize,
)
from .netlist import (
    ChainConfig,
    NetlistError,
    NetworkSpec,
    build_cbw_chain,
    compile_network,
    parse_network,
    psi_search,
    verify_basis_preservation,
    verify_mth_power,
)
from .unitary import (
    MziParams,
    beam_splitter,
    cbw_closed_form,
    equal_up_to_global_phase,
    mzi_unitary,
    phase_plate,
)

__version__ = "0.1.0"
