"""
Name -> constructor table for the built-in increment models.

Config files name a model and pass its parameters as keys; this module turns
that pair into an IncrementModel.
"""

from typing import Any, Callable, Dict, Mapping

from src.increments.base import IncrementModel
from src.increments.exp_diff import ExpDiff
from src.increments.gaussian import GaussianDrift
from src.increments.lattice import DiscreteLattice
from src.increments.pareto_mg1 import ParetoMG1
from src.increments.weibull import WeibullDetArrival


# model name -> (constructor, {config key: constructor argument})
MODEL_TABLE: Dict[str, tuple[Callable[..., IncrementModel], Dict[str, str]]] = {
    "pareto_mg1": (ParetoMG1, {"alpha": "alpha", "lambda": "lam", "lam": "lam"}),
    "weibull_det": (
        WeibullDetArrival,
        {"coef": "coef", "shape": "shape", "interarrival": "interarrival"},
    ),
    "exp_diff": (ExpDiff, {"mu": "mu", "lambda": "lam", "lam": "lam"}),
    "gaussian": (GaussianDrift, {"mu": "mu", "sigma": "sigma"}),
    "lattice": (DiscreteLattice, {"values": "values", "probs": "probs"}),
}

MODEL_PARAMETERS = frozenset(k for _, keys in MODEL_TABLE.values() for k in keys)


def build_model(name: str, params: Mapping[str, Any] | None = None) -> IncrementModel:
    """
    Construct a built-in model.

    Raises KeyError for an unknown model or parameter and ValueError when
    the parameters do not define a negative-drift walk.
    """
    if name not in MODEL_TABLE:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODEL_TABLE)}")
    ctor, keys = MODEL_TABLE[name]

    kwargs = {}
    for key, value in (params or {}).items():
        if key not in keys:
            raise KeyError(f"model {name!r} takes no parameter {key!r}; allowed: {sorted(keys)}")
        kwargs[keys[key]] = value
    if name == "lattice" and not {"values", "probs"} <= kwargs.keys():
        raise ValueError("lattice model needs both 'values' and 'probs'")
    return ctor(**kwargs)
