"""Seeded random instances for the algebraic identities and bounds.

Shared between the fuzz CLI command and the test suite.  Tensors are drawn
with unit norm so that all residual/slack contracts are scale-free.
"""

from __future__ import annotations

import numpy as np

from .cancellation import (
    composition_residual,
    inner_bound_slack,
    norm_bound_slack,
    permutation_relation_residual,
)
from .chaos import expand_product, moment_oracle, wick_eval_batch
from .pairings import IntervalDecomposition, PairSet, free_indices
from .tensors import SymTensor, norm, symmetrize

__all__ = [
    "random_decomposition",
    "random_tensors",
    "random_pairset",
    "random_block_permutations",
    "equivalence_case",
    "inequality_case",
]


def random_decomposition(rng, max_blocks=4, max_order=3, max_total=10, min_blocks=2):
    while True:
        blocks = rng.integers(min_blocks, max_blocks + 1)
        lengths = tuple(int(rng.integers(1, max_order + 1)) for _ in range(blocks))
        if sum(lengths) <= max_total:
            return IntervalDecomposition(lengths)


def random_tensors(rng, decomp, dim, symmetric=True, unit_norm=True):
    out = []
    for d in decomp.lengths:
        t = SymTensor(rng.standard_normal((dim,) * d))
        if symmetric:
            t = symmetrize(t)
        if unit_norm:
            scale = norm(t)
            if scale == 0.0:
                t = SymTensor(np.ones((dim,) * d))
                scale = norm(t)
            t = SymTensor(t.entries / scale, symmetric=t.symmetric)
        out.append(t)
    return out


def random_pairset(rng, decomp, size=None, attempts=50):
    """Admissible pair set drawn by random greedy pairing.

    When ``size`` is omitted a random size is targeted, backing off if the
    decomposition cannot host that many cross-block pairs.
    """
    n_total = decomp.total
    target = int(rng.integers(0, n_total // 2 + 1)) if size is None else size
    blocks = [decomp.block_of(i) for i in range(1, n_total + 1)]

    def attempt(k):
        free = list(range(1, n_total + 1))
        pairs = []
        for _ in range(k):
            candidates = [
                (m, n)
                for i, m in enumerate(free)
                for n in free[i + 1 :]
                if blocks[m - 1] != blocks[n - 1]
            ]
            if not candidates:
                return None
            m, n = candidates[rng.integers(0, len(candidates))]
            pairs.append((m, n))
            free.remove(m)
            free.remove(n)
        return PairSet(decomp, pairs)

    while target >= 0:
        for _ in range(attempts):
            got = attempt(target)
            if got is not None:
                return got
        if size is not None:
            raise ValueError(f"no admissible pair set of size {size} for {decomp.lengths}")
        target -= 1
    raise AssertionError("unreachable: the empty pair set is always admissible")


def random_block_permutations(rng, decomp):
    return [tuple(int(v) + 1 for v in rng.permutation(d)) for d in decomp.lengths]


def equivalence_case(rng, max_blocks=4, max_order=3, max_dim=3, max_total=10, pointwise_seeds=20):
    """One expansion-vs-oracle instance; returns the comparison row."""
    decomp = random_decomposition(rng, max_blocks, max_order, max_total)
    dim = int(rng.integers(2, max_dim + 1))
    tensors = random_tensors(rng, decomp, dim)
    expansion = expand_product(tensors)
    oracle = moment_oracle(tensors)
    degree0 = expansion.degree0()
    rel_gap = abs(degree0 - oracle) / max(1.0, abs(oracle))
    xis = rng.standard_normal((pointwise_seeds, dim))
    product = np.ones(pointwise_seeds)
    for t in tensors:
        product *= wick_eval_batch(t, xis)
    pointwise = float(np.max(np.abs(product - expansion.evaluate_batch(xis))))
    return {
        "lengths": list(decomp.lengths),
        "dim": dim,
        "degree0": degree0,
        "oracle": oracle,
        "relative_gap": rel_gap,
        "pointwise_max_error": pointwise,
    }


def inequality_case(rng, max_blocks=3, max_order=3, max_dim=3, max_total=10):
    """One instance of the four operator contracts; returns slacks/residuals."""
    decomp = random_decomposition(rng, max_blocks, max_order, max_total)
    dim = int(rng.integers(2, max_dim + 1))
    tensors = random_tensors(rng, decomp, dim, symmetric=False)
    pairset = random_pairset(rng, decomp)
    slack_norm = norm_bound_slack(pairset, tensors)
    tensors_b = random_tensors(rng, decomp, dim, symmetric=False)
    slack_inner = inner_bound_slack(pairset, tensors, tensors_b)
    perms = random_block_permutations(rng, decomp)
    residual_perm = permutation_relation_residual(pairset, tensors, perms)
    survivors = free_indices(pairset)
    residual_comp = None
    if survivors:
        d_next = int(rng.integers(1, max_order + 1))
        extra_decomp = IntervalDecomposition((len(survivors), d_next))
        extra = random_pairset(rng, extra_decomp)
        extra_tensor = random_tensors(rng, IntervalDecomposition((d_next,)), dim, symmetric=False)
        residual_comp = composition_residual(pairset, extra, tensors + extra_tensor)
    return {
        "lengths": list(decomp.lengths),
        "dim": dim,
        "pairs": len(pairset),
        "norm_bound_slack": slack_norm,
        "inner_bound_slack": slack_inner,
        "permutation_residual": residual_perm,
        "composition_residual": residual_comp,
    }
