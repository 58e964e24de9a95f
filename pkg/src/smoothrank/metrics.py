"""Strict pairwise AUC and feature-usage counting."""

import numpy as np

DEFAULT_ACTIVE_THRESHOLD = 1e-3


def _check(pos, neg):
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs at least one positive and one negative score")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValueError("scores must be finite")
    return pos, neg


def auc(pos_scores, neg_scores) -> float:
    """Fraction of (positive, negative) pairs with ``pos > neg``.

    Ties count zero.  Sorting-based, O((|P| + |N|) log |N|), and identical to
    :func:`auc_bruteforce` because the pair count is an exact integer.
    """
    pos, neg = _check(pos_scores, neg_scores)
    below = np.searchsorted(np.sort(neg), pos, side="left")
    return int(below.sum()) / (pos.size * neg.size)


def auc_bruteforce(pos_scores, neg_scores) -> float:
    pos, neg = _check(pos_scores, neg_scores)
    count = 0
    for p in pos:
        for n in neg:
            if p > n:
                count += 1
    return count / (pos.size * neg.size)


def auc_of(scores, labels) -> float:
    """AUC of a score vector against labels in {+1, -1}."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    return auc(scores[labels == 1], scores[labels == -1])


def active_count(w, threshold: float = DEFAULT_ACTIVE_THRESHOLD) -> int:
    """Number of weights with ``|w_t| >= threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    w = np.asarray(w, dtype=np.float64).ravel()
    return int(np.count_nonzero(np.abs(w) >= threshold))
