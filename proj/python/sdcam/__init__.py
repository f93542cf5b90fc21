"""Python bindings for the sdcam solver library."""

from ._sdcam import (
    Instance,
    InvariantViolation,
    MimoParams,
    MlpParams,
    NumericalFailure,
    QcqpParams,
    SolverConfig,
    beta_at,
    default_solver_config,
    lp_prox_objective,
    prox_lp_power,
    running_averages,
    select_subsequence,
    soft_threshold,
    suggest_delta,
)
from . import _sdcam

__all__ = [
    "Instance",
    "InvariantViolation",
    "NumericalFailure",
    "SolverConfig",
    "beta_at",
    "default_solver_config",
    "generate",
    "lp_prox_objective",
    "prox_lp_power",
    "running_averages",
    "select_subsequence",
    "soft_threshold",
    "solve",
    "suggest_delta",
]

_PARAMS = {"qcqp": QcqpParams, "mimo": MimoParams, "mlp": MlpParams}
_GENERATORS = {"qcqp": _sdcam.generate_qcqp, "mimo": _sdcam.generate_mimo, "mlp": _sdcam.generate_mlp}

# Rate-check regime matching each family's assumptions.
_REGIMES = {"qcqp": "bounded_domains", "mimo": "lipschitz_h", "mlp": "full_domain_h"}


def _set_fields(obj, fields, what):
    for key, value in fields.items():
        attr = "lambda_" if key == "lambda" else key
        if attr.startswith("_") or not hasattr(obj, attr):
            raise TypeError(f"unknown {what} field '{key}'")
        setattr(obj, attr, value)
    return obj


def generate(family, seed=0, **params):
    """Generate an instance of `family` ("qcqp", "mimo" or "mlp")."""
    if family not in _PARAMS:
        raise ValueError(f"unknown family '{family}' (expected qcqp, mimo or mlp)")
    p = _set_fields(_PARAMS[family](), params, family + " parameter")
    return _GENERATORS[family](seed, p)


def solve(instance, regime=None, **config):
    """Run the solver with the family defaults overridden by `config`.

    Returns a dict with the status, counters, final iterates, the trace as
    numpy columns, the rate constants and the rate-check report.
    """
    cfg = _set_fields(default_solver_config(instance.family), config, "solver config")
    cfg.validate()
    return _sdcam.solve(instance, cfg, regime or _REGIMES[instance.family])
