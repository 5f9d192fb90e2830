"""Mutual coherence of random overcomplete dictionaries and its reduction
by left preconditioning."""

from .coherence import CoherenceReport, mutual_coherence, pair_correlation, recovery_bound
from .matgen import Dictionary, gen_bernoulli, gen_gaussian, gen_uniform_l1, load_matrix, save_matrix
from .precondition import bez, bez_optimize, elementary_perturbation, whiten
from .recovery import omp
from .spectral import inv_sqrt_gram, svd_thin, sym_eigen

__version__ = "0.1.0"

__all__ = [
    "CoherenceReport",
    "Dictionary",
    "bez",
    "bez_optimize",
    "elementary_perturbation",
    "gen_bernoulli",
    "gen_gaussian",
    "gen_uniform_l1",
    "inv_sqrt_gram",
    "load_matrix",
    "mutual_coherence",
    "omp",
    "pair_correlation",
    "recovery_bound",
    "save_matrix",
    "svd_thin",
    "sym_eigen",
    "whiten",
]
