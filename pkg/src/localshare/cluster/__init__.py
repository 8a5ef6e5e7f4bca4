"""Time-series clustering methods, each returning a :class:`ClusteringResult`."""

from .affinity import affinity_propagation, median_preference
from .dba import dba, tskmeans_dba
from .gmm import GmmModel, gmm_fit
from .hierarchy import Dendrogram, Merge, cut_height, cut_tree, hierarchical
from .kshape import kshape, shape_extraction
from .result import ClusteringResult, make_rng, relabel_by_appearance
from .som import SomGrid, som, som_assign, som_train
from .twostep import ap_sbd, two_step_ap_hc, two_step_kmeans_gmm

__all__ = [
    "ClusteringResult",
    "Dendrogram",
    "GmmModel",
    "Merge",
    "SomGrid",
    "affinity_propagation",
    "ap_sbd",
    "cut_height",
    "cut_tree",
    "dba",
    "gmm_fit",
    "hierarchical",
    "kshape",
    "make_rng",
    "median_preference",
    "relabel_by_appearance",
    "shape_extraction",
    "som",
    "som_assign",
    "som_train",
    "tskmeans_dba",
    "two_step_ap_hc",
    "two_step_kmeans_gmm",
]
