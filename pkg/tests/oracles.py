"""Independent brute-force reference implementations used as test oracles.

Everything here trades efficiency for obvious correctness: exhaustive
enumeration over assignments, permutations, or arrangements.  None of it
shares code paths with the package under test.
"""

import itertools
import math

import numpy as np
from sympy.utilities.iterables import multiset_permutations


def sse_of_assignment(points: np.ndarray, labels, C: int) -> float:
    """Within-cluster sum of squared distances to cluster means."""
    labels = np.asarray(labels)
    total = 0.0
    for c in range(C):
        members = points[labels == c]
        if len(members):
            total += ((members - members.mean(axis=0)) ** 2).sum()
    return float(total)


def best_sse_partition(points: np.ndarray, C: int) -> float:
    """Minimum SSE over every assignment of n points to C clusters."""
    n = len(points)
    best = math.inf
    for labels in itertools.product(range(C), repeat=n):
        best = min(best, sse_of_assignment(points, labels, C))
    return best


def best_balanced_sse(points: np.ndarray, C: int) -> float:
    """Minimum SSE over assignments whose cluster sizes differ by at most 1."""
    n = len(points)
    q, r = divmod(n, C)
    allowed = {q, q + 1} if r else {q}
    best = math.inf
    for labels in itertools.product(range(C), repeat=n):
        sizes = np.bincount(labels, minlength=C)
        if sizes.max() - sizes.min() > 1:
            continue
        if not set(sizes.tolist()) <= allowed:
            continue
        best = min(best, sse_of_assignment(points, labels, C))
    return best


def best_assignment_total(matrix: np.ndarray, maximize: bool = True) -> float:
    """Optimal total of a square assignment problem by full enumeration."""
    C = matrix.shape[0]
    totals = (sum(matrix[i, p[i]] for i in range(C))
              for p in itertools.permutations(range(C)))
    return max(totals) if maximize else min(totals)


def min_misclustering(assignments, latents, C: int) -> float:
    """Minimum disagreement fraction over all label permutations."""
    assignments = np.asarray(assignments)
    latents = np.asarray(latents)
    best = math.inf
    for perm in itertools.permutations(range(C)):
        mapped = np.asarray(perm)[assignments]
        best = min(best, float((mapped != latents).mean()))
    return best


def mutual_information(a, b) -> float:
    """Plain MI of two labelings in nats, from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    mi = 0.0
    for u in np.unique(a):
        for v in np.unique(b):
            nij = int(((a == u) & (b == v)).sum())
            if nij == 0:
                continue
            ni = int((a == u).sum())
            nj = int((b == v).sum())
            mi += (nij / n) * math.log(n * nij / (ni * nj))
    return mi


def entropy(a) -> float:
    a = np.asarray(a)
    n = len(a)
    h = 0.0
    for u in np.unique(a):
        p = (a == u).sum() / n
        h -= p * math.log(p)
    return h


def expected_mi_by_enumeration(a, b) -> float:
    """Expected MI under the permutation model, by averaging MI over every
    distinct arrangement of one labeling (all n! permutations weight the
    distinct arrangements equally)."""
    total = 0.0
    count = 0
    for arrangement in multiset_permutations(list(b)):
        total += mutual_information(a, arrangement)
        count += 1
    return total / count


def ami_by_enumeration(a, b) -> float:
    """AMI with max-normalization, expected MI computed by enumeration."""
    if len(set(a)) == 1 and len(set(b)) == 1:
        return 1.0
    if len(set(a)) == 1 or len(set(b)) == 1:
        return 0.0
    mi = mutual_information(a, b)
    emi = expected_mi_by_enumeration(a, b)
    normalizer = max(entropy(a), entropy(b))
    # sign-preserving clamps away from zero: expectation == maximum is a
    # perfect match and must yield 1, not 0/0
    eps = np.finfo(np.float64).eps
    denominator = normalizer - emi
    denominator = min(denominator, -eps) if denominator < 0 else max(denominator, eps)
    numerator = mi - emi
    numerator = min(numerator, -eps) if numerator < 0 else max(numerator, eps)
    return numerator / denominator


def winrate_by_scan(per_trial: dict) -> dict:
    models = list(per_trial)
    n = len(next(iter(per_trial.values())))
    out = {m: 0.0 for m in models}
    for t in range(n):
        best = min(per_trial[m][t] for m in models)
        winners = [m for m in models if per_trial[m][t] == best]
        for m in winners:
            out[m] += 1.0 / len(winners) / n
    return out


def gw_best_permutation_cost(dist_x: np.ndarray, dist_y: np.ndarray):
    """Minimum square-loss distortion over hard permutation couplings, and
    the minimizing permutation."""
    n = dist_x.shape[0]
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(n)):
        p = np.asarray(perm)
        cost = float(((dist_x - dist_y[np.ix_(p, p)]) ** 2).sum()) / (n * n)
        if cost < best:
            best, best_perm = cost, perm
    return best, best_perm
