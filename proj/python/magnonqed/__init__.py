"""Forward simulation and inverse fitting of hybrid spin-magnon systems.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._core import (  # noqa: F401
    BranchLabel,
    Chirality,
    CouplingExtract,
    CouplingParams,
    DegenerateFitError,
    DegenerateModeError,
    DoubleDipInit,
    Equilibrium,
    ExperimentConfig,
    ExtractError,
    FieldConfig,
    FieldSweep,
    FrequencyAxis,
    LevelSet,
    LorentzianFit,
    MagnetParams,
    ModeSolution,
    NeverStrongError,
    NoDipFoundError,
    PolaritonBranch,
    PoleError,
    SaturationParams,
    SolverError,
    SpectrumMap,
    SpectrumOptions,
    SpinEnsembleParams,
    StabilityError,
    StackingConfig,
    StackingMode,
    Trace,
    Transition,
    ValidationError,
    background_subtract,
    build_hamiltonian,
    calibrate_alpha,
    chiral_projection,
    corotating_fraction,
    effective_coupling,
    energy_levels,
    equilibrium,
    equilibrium_fraction,
    extract_coupling,
    fit_dip,
    fit_double_dip,
    linearized_modes,
    load_config,
    mode_rf_field,
    parse_config,
    polariton_branches,
    pseudo_derivative,
    qubit_gap,
    read_map_csv,
    read_map_json,
    s21,
    spectrum_map,
    stacking_spectrum,
    threshold_power,
    visibility,
    write_map_csv,
    write_map_json,
)

__version__ = "0.1.0"
