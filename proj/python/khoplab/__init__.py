"""Exponent solvers, protocol simulation and exact small-n diagnostics for
K-hop testing against independence."""

from khoplab._core import (
    JointPmf,
    KhoplabError,
    __version__,
    binary_markov_chain,
    conditional_entropy,
    conditional_mutual_information,
    dsbs,
    entropy,
    eta,
    eta_oracle,
    is_strongly_typical,
    kl_divergence,
    lossless_bound,
    mutual_information,
    run_config,
    wyner_ziv_rmin,
)

__all__ = [
    "JointPmf",
    "KhoplabError",
    "__version__",
    "binary_markov_chain",
    "conditional_entropy",
    "conditional_mutual_information",
    "dsbs",
    "entropy",
    "eta",
    "eta_oracle",
    "is_strongly_typical",
    "kl_divergence",
    "lossless_bound",
    "mutual_information",
    "run_config",
    "wyner_ziv_rmin",
]
