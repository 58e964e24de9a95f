"""AUC-maximizing ranking classifiers built from learned prototype points.

The main entry point is :func:`smoothrank.trainers.train_prototype_cg`, which
grows a distance-based score function one prototype at a time by column
generation over a pairwise hinge-loss linear program.
"""

from smoothrank.data import Dataset, SplitSpec, load_csv, load_keel, make_xor
from smoothrank.metrics import active_count, auc, auc_bruteforce
from smoothrank.trainers import (CgConfig, PrototypeModel, train_linear_baseline,
                                 train_prototype_cg)

__version__ = "0.1.0"

__all__ = ["Dataset", "SplitSpec", "load_csv", "load_keel", "make_xor", "auc",
           "auc_bruteforce", "active_count", "CgConfig", "PrototypeModel",
           "train_prototype_cg", "train_linear_baseline"]
