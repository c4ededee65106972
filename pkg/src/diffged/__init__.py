"""Graph edit distance from diffusion-sampled node matchings."""

from .diffusion import NoiseSchedule, build_schedule, ddim_subsequence
from .editpath import EditScript, derive_edit_path, edit_cost
from .extraction import greedy_extract, hungarian_extract, parallel_extract
from .graphs import GraphPair, LabeledGraph, LabelVocabulary, load_dataset, save_dataset
from .oracle import exact_ged_astar, exact_ged_bruteforce
from .solver import SolveConfig, SolveResult, diffged_solve, evaluate

__version__ = "0.1.0"
