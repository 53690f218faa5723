"""Elastic-net negative binomial regression and its theory toolkit."""

from ._nbelnet import (
    TAU_MAX,
    DomainError,
    InapplicableBound,
    a_constant,
    a_tau_root,
    cameron_trivedi_test,
    compatibility_factor,
    debias,
    fit,
    honest_dimension,
    kkt_check,
    nb_hessian,
    nb_loss,
    nb_score,
    oracle_bounds_t32,
    registered_experiments,
    run_replications,
    sample_nb,
    simulate,
    stabil_constant,
    weak_cif,
)

__version__ = "0.1.0"

__all__ = [
    "TAU_MAX",
    "DomainError",
    "InapplicableBound",
    "a_constant",
    "a_tau_root",
    "cameron_trivedi_test",
    "compatibility_factor",
    "debias",
    "fit",
    "honest_dimension",
    "kkt_check",
    "nb_hessian",
    "nb_loss",
    "nb_score",
    "oracle_bounds_t32",
    "registered_experiments",
    "run_replications",
    "sample_nb",
    "simulate",
    "stabil_constant",
    "weak_cif",
]
