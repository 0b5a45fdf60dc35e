"""Bayesian bootstrap inference for dyadic and polyadic data."""

from ._polyboot import (
    BootstrapError,
    ConfigError,
    CounterfactualError,
    DataError,
    DegenerateDraw,
    DgpError,
    Error,
    Estimator,
    EvalError,
    ParamError,
    Sample,
    SingularDesign,
    SingularJacobian,
    SingularWeightMatrix,
    SolverError,
    Unsupported,
    __version__,
    fixture_names,
    load_csv,
    make_fixture,
    parse_csv,
    run_cli,
)


def cli(*args):
    """Run a command-line invocation in-process; returns (exit_code, stdout, stderr)."""
    return run_cli([str(a) for a in args])


__all__ = [
    "BootstrapError",
    "ConfigError",
    "CounterfactualError",
    "DataError",
    "DegenerateDraw",
    "DgpError",
    "Error",
    "Estimator",
    "EvalError",
    "ParamError",
    "Sample",
    "SingularDesign",
    "SingularJacobian",
    "SingularWeightMatrix",
    "SolverError",
    "Unsupported",
    "cli",
    "fixture_names",
    "load_csv",
    "make_fixture",
    "parse_csv",
    "run_cli",
]
