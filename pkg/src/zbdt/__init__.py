"""Binomial (BDT) and zero-rate-rail (ZBDT) short-rate lattices."""

from .calibration import (
    CalibrationError,
    StepSolution,
    calibrate_bdt,
    calibrate_zbdt,
    extract_market_view,
    ternary_variance,
)
from .derivatives import (
    EuropeanCallSpec,
    OptionQuote,
    black_price,
    implied_vol,
    option_table,
    price_call_on_lattice,
    quote_call,
)
from .lattice import (
    BdtLattice,
    PriceLattice,
    ZbdtLattice,
    ZbdtParams,
    node_yield,
    price_bond,
    price_bond_bdt,
    price_bond_zbdt,
)
from .market_data import (
    CalibrationInput,
    CsvFormat,
    YieldSeries,
    build_calibration_input,
    parse_yield_csv,
    rolling_volatility,
)
from .rootfind import SolverConfig, SolverError, solve_scalar, solve_system
from .scenarios import ScenarioConfig, ScenarioError, ScenarioReport, emit_plot_series, run_scenario

__version__ = "0.1.0"
