"""Circuit-level toolkit for PCB-embedded Purcell filters and resonator readout."""

from .admittance import (
    NoPassbandError, PassbandMetrics, QCurve, UndefinedQError, filtering_ratio,
    normalized_q_curve, passband_metrics, q_curve, q_from_admittance,
    single_pole_filtering_ratio,
)
from .eigen import (
    FilterComparison, Mode, SweepTrace, compare_with_without_filter, eigenmodes,
    identify_modes, sweep_element,
)
from .network import (
    GROUND, DomainError, Element, FrequencyGrid, LosslessPoleWarning, Netlist,
    NetlistError, Port, assemble_admittance, port_admittance, s_parameters,
)
from .purcell import (
    CoherenceSample, PurcellBound, ReadoutChainParams, direct_coupling_qext, kappa_ext,
    purcell_bound, t1_radiative, validate_t1_against_limit,
)
from .spectro import (
    NoResonanceError, ReflectionTrace, ResonatorFit, aggregate_fits, estimate_offset,
    fit_reflection, overlay_with_simulation, synthesize_trace,
)
from .synthesis import (
    CalibrationError, PatchSpec, TilingMap, UnitCellSpec, build_no_filter_variant,
    build_tiled, build_unit_cell, calibrate_filter, default_cell, patch_frequency,
    patch_side,
)

__version__ = "0.1.0"
