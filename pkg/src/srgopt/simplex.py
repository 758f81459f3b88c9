"""Variance-minimizing sampling distributions over a restricted simplex.

Given non-negative weights ``a`` and a floor ``eps`` in ``(0, 1/n]``, the
distribution minimizing ``sum_i a_i**2 / p_i`` over the restricted simplex
``{p : sum(p) = 1, p >= eps}`` has a waterfilling closed form: sort the
weights in decreasing order, let ``lam(i) = prefix_i / (1 - (n - i) eps)``,
and let ``rho`` be the last sorted position with ``a_(i) >= eps * lam(i)``
(the predicate is down-closed, so binary search finds it). The top ``rho``
weights get probability ``a_i / lam(rho)``; everything else sits at the
floor ``eps``.

Two routes are provided: an O(n log n) solver over a sorted copy
(:func:`solve_naive` / :func:`sample_naive`) and an O(log n) descent over a
:class:`~srgopt.tree.SamplerTree` (:func:`tree_solve` / :func:`tree_sample`)
that never materializes the distribution.

Ties between equal weights are broken by component index (higher index
sorts first), matching the tree's composite-key order, so both routes pick
identical distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RestrictedSolution",
    "SampleDraw",
    "solve_naive",
    "sample_naive",
    "probabilities",
    "tree_solve",
    "tree_sample",
    "restricted_min_value",
]


@dataclass(frozen=True)
class RestrictedSolution:
    """Lazy description of the optimal distribution.

    ``rho`` and ``lam`` pin down the waterfilling threshold; ``order`` holds
    component indices sorted by decreasing composite key. ``uniform`` marks
    the two degenerate cases (all-zero weights, or ``eps == 1/n``) where the
    answer is exactly ``1/n`` everywhere and ``rho``/``lam`` are unused.
    """

    rho: int
    lam: float
    epsilon: float
    n: int
    uniform: bool = False
    order: np.ndarray | None = None


@dataclass(frozen=True)
class SampleDraw:
    index: int
    probability: float


def _check_epsilon(epsilon, n):
    epsilon = float(epsilon)
    hi = 1.0 / n
    if not math.isfinite(epsilon) or epsilon < 0.0:
        raise ValueError(f"epsilon must be in [0, 1/n], got {epsilon!r}")
    if epsilon > hi:
        # tolerate one rounding step over 1/n from callers computing 1/(2n)*2
        if epsilon <= hi * (1.0 + 4e-16):
            return hi
        raise ValueError(f"epsilon {epsilon!r} exceeds 1/n = {hi!r}")
    return epsilon


def _check_weights(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("need a 1-d array of at least one weight")
    if not np.all(np.isfinite(a)) or np.any(a < 0.0):
        raise ValueError("weights must be finite and non-negative")
    return a


def solve_naive(a, epsilon):
    """Solve for the optimal distribution via sort + binary search.

    Runs in O(n log n). ``epsilon`` may be 0, in which case the answer is
    the unrestricted one (probability proportional to weight).
    """
    a = _check_weights(a)
    n = a.size
    eps = _check_epsilon(epsilon, n)
    if not a.any() or eps == 1.0 / n:
        return RestrictedSolution(rho=n, lam=0.0, epsilon=eps, n=n, uniform=True)
    order = np.lexsort((np.arange(n), a))[::-1]
    s = a[order]
    prefix = np.cumsum(s)
    denom = 1.0 - (n - np.arange(1, n + 1)) * eps
    # binary search for the last position whose weight clears the threshold;
    # comparisons are cross-multiplied to match the tree descent exactly
    lo, hi_, c = 1, n, 1
    while lo <= hi_:
        m = (lo + hi_) // 2
        if s[m - 1] * denom[m - 1] >= eps * prefix[m - 1]:
            c = m
            lo = m + 1
        else:
            hi_ = m - 1
    rho = c
    lam = prefix[rho - 1] / denom[rho - 1]
    return RestrictedSolution(rho=rho, lam=lam, epsilon=eps, n=n, order=order)


def probabilities(sol, a):
    """Materialize the full probability vector described by ``sol``."""
    a = _check_weights(a)
    if a.size != sol.n:
        raise ValueError("weight vector length does not match the solution")
    if sol.uniform:
        return np.full(sol.n, 1.0 / sol.n)
    p = np.full(sol.n, sol.epsilon)
    top = sol.order[: sol.rho]
    p[top] = a[top] / sol.lam
    return p


def sample_naive(sol, a, u):
    """Draw one index by inverting the explicit CDF (O(n) per draw)."""
    a = _check_weights(a)
    n = sol.n
    if sol.uniform:
        idx = min(int(u * n), n - 1)
        return SampleDraw(index=idx, probability=1.0 / n)
    s = a[sol.order]
    p_sorted = np.full(n, sol.epsilon)
    p_sorted[: sol.rho] = s[: sol.rho] / sol.lam
    cdf = np.cumsum(p_sorted)
    pos = min(int(np.searchsorted(cdf, u, side="right")), n - 1)
    return SampleDraw(index=int(sol.order[pos]), probability=float(p_sorted[pos]))


def tree_solve(tree, epsilon):
    """Find the waterfilling threshold by descending an augmented tree.

    Returns ``(w, rho, lam)`` where ``w`` is the node holding the smallest
    weight that clears the threshold (rank ``rho``). Runs in O(log n); the
    running rank / prefix-sum / normalizer triple is updated incrementally
    from subtree attributes, and the threshold comparison is cross-multiplied
    so no division happens inside the loop.

    ``w is None`` flags the degenerate uniform cases (zero total weight, or
    ``epsilon == 1/n``); ``rho``/``lam`` are then meaningless.
    """
    n = tree.n
    eps = _check_epsilon(epsilon, n)
    if tree.total() <= 0.0 or eps == 1.0 / n:
        return None, n, 0.0
    nil = tree.nil
    v = tree.root
    r = v.right.size + 1
    s = v.right.sum + v.key
    c = 1.0 - (n - r) * eps
    w = None
    w_rank, w_sum, w_norm = 0, 0.0, 1.0
    visits = 0
    while v is not nil:
        visits += 1
        if v.key * c >= eps * s:
            w, w_rank, w_sum, w_norm = v, r, s, c
            v = v.left
            if v is not nil:
                r += v.right.size + 1
                s += v.right.sum + v.key
                c = 1.0 - (n - r) * eps
        else:
            over_key = v.key
            v = v.right
            if v is not nil:
                r -= v.left.size + 1
                s -= v.left.sum + over_key
                c = 1.0 - (n - r) * eps
    tree.visits += visits
    assert w is not None, "threshold predicate must hold at rank 1"
    return w, w_rank, w_sum / w_norm


def tree_sample(tree, epsilon, u, solution=None):
    """Draw one index from the optimal distribution in O(log n).

    The unit interval splits at ``1 - (n - rho) * eps``: below the cut, the
    draw lands in the proportional region and is resolved by a prefix-sum
    search; above it, the floor region assigns each of the ``n - rho``
    smallest weights an equal slice and a rank lookup resolves the draw.
    ``solution`` may carry a previously computed ``tree_solve`` result when
    the tree has not changed since.
    """
    n = tree.n
    eps = _check_epsilon(epsilon, n)
    if solution is None:
        solution = tree_solve(tree, eps)
    w, rho, lam = solution
    if w is None:
        idx = min(int(u * n), n - 1)
        return SampleDraw(index=idx, probability=1.0 / n)
    cutoff = 1.0 - (n - rho) * eps
    if u < cutoff:
        s = lam * u
        total = tree.total()
        if s >= total:  # rounding guard at the region boundary
            s = math.nextafter(total, 0.0)
        idx = tree.select_sum(s)
        return SampleDraw(index=idx, probability=tree.key(idx) / lam)
    # rank formula clamped so rounding can never select rank <= rho
    r = n - int((u - cutoff) / eps)
    r = min(max(r, rho + 1), n)
    idx = tree.select_rank(r)
    return SampleDraw(index=idx, probability=eps)


def restricted_min_value(a, epsilon):
    """Minimum of ``sum_i a_i**2 / p_i`` over the restricted simplex."""
    a = _check_weights(a)
    n = a.size
    if not a.any():
        return 0.0
    sol = solve_naive(a, epsilon)
    if sol.uniform:
        return float(n * np.sum(a * a))
    s = a[sol.order]
    top = float(np.sum(s[: sol.rho]))
    tail_sq = float(np.sum(s[sol.rho :] ** 2))
    value = sol.lam * top
    if tail_sq > 0.0:
        value += tail_sq / sol.epsilon
    return value
