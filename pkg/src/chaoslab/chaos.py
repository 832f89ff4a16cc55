"""Finite-dimensional isonormal Gaussian calculus.

The isonormal process is realized on R^d by mapping the i-th basis vector to
an independent standard Gaussian coordinate.  The order-n integral of a
symmetric tensor A evaluates as a Hermite-polynomial sum over multi-indices;
products of such integrals expand into lower-order integrals of pair-set
contractions.  A brute-force Isserlis oracle, coded independently of the
expansion path, supplies exact expectations for cross-checking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cancellation import cancel
from .pairings import IntervalDecomposition, enumerate_admissible
from .tensors import SymTensor, inner, symmetrize

__all__ = [
    "hermite_he",
    "hermite_he_coefficients",
    "GaussianSeed",
    "philox_stream",
    "wick_eval",
    "wick_eval_batch",
    "wick_eval_rank_one_sum",
    "ChaosExpansion",
    "expand_product",
    "moment_oracle",
    "covariance_identity_residual",
    "hypercontractivity_check",
    "gebelein_bound_check",
]

DEFAULT_EXPANSION_CAP = 12
DEFAULT_ORACLE_CAP = 20


# -- Hermite polynomials (probabilists') ------------------------------------


def hermite_he(n, x):
    """He_n(x) by the three-term recurrence; vectorized in ``x``."""
    x = np.asarray(x, dtype=float)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


def _hermite_table(n_max, x):
    """Stacked He_0..He_n_max of ``x``; shape (n_max + 1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for k in range(1, n_max):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


@lru_cache(maxsize=None)
def hermite_he_coefficients(n):
    """Monomial coefficients of He_n as exact integers, low degree first."""
    if n == 0:
        return (1,)
    if n == 1:
        return (0, 1)
    prev, cur = (1,), (0, 1)
    for k in range(1, n):
        shifted = (0,) + cur
        damped = tuple(-k * c for c in prev) + (0, 0)
        cur, prev = tuple(a + b for a, b in zip(shifted, damped)), cur
    return cur


# -- seeds -------------------------------------------------------------------


def philox_stream(seed, stream=0):
    """Counter-based generator; (seed, stream) fully determines the draw."""
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GaussianSeed:
    """A realization of the coordinate Gaussians, with its provenance."""

    values: np.ndarray
    seed: int = 0
    stream: int = 0
    generator: str = "philox"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("seed values must be a vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("seed values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self):
        return self.values.size

    @classmethod
    def draw(cls, dim, seed, stream=0):
        values = philox_stream(seed, stream).standard_normal(dim)
        return cls(values=values, seed=seed, stream=stream)


def _seed_values(xi):
    return np.asarray(getattr(xi, "values", xi), dtype=float)


# -- Wick evaluation ---------------------------------------------------------


@lru_cache(maxsize=512)
def _multiplicity_classes(order, dim):
    """Class labels of the d^n multi-indices and per-class coordinate counts.

    ``class_id[flat]`` groups multi-indices that are rearrangements of each
    other; ``mult[c, coord]`` counts how often ``coord`` occurs in class c.
    """
    if order == 0:
        return np.zeros(1, dtype=np.intp), np.zeros((1, dim), dtype=np.intp)
    idx = np.indices((dim,) * order).reshape(order, -1).T
    key = np.sort(idx, axis=1)
    uniq, class_id = np.unique(key, axis=0, return_inverse=True)
    mult = np.stack([(uniq == c).sum(axis=1) for c in range(dim)], axis=1)
    return class_id.astype(np.intp), mult.astype(np.intp)


def _class_sums(a):
    class_id, mult = _multiplicity_classes(a.order, a.dim)
    sums = np.bincount(class_id, weights=a.entries.ravel(order="C"), minlength=mult.shape[0])
    return sums, mult


def wick_eval(a, xi):
    """Evaluate the order-n integral of ``a`` at a coordinate realization.

    Sums A_i * prod_c He_{m_c(i)}(xi_c) over multi-indices i, with m_c(i) the
    multiplicity of coordinate c in i.  The rule depends only on the
    symmetrization of ``a``, matching the integral's invariance.
    """
    xi = _seed_values(xi)
    if xi.size != a.dim:
        raise ValueError(f"seed dim {xi.size} != tensor dim {a.dim}")
    if a.order == 0:
        return a.item()
    sums, mult = _class_sums(a)
    table = _hermite_table(a.order, xi)  # (order+1, dim)
    prods = np.prod(table[mult, np.arange(a.dim)[None, :]], axis=1)
    return float(sums @ prods)


def wick_eval_batch(a, xis):
    """Vectorized ``wick_eval`` over rows of ``xis`` (shape (num, dim))."""
    xis = np.asarray(xis, dtype=float)
    if xis.ndim == 1:
        xis = xis[None, :]
    if xis.shape[1] != a.dim:
        raise ValueError(f"seed dim {xis.shape[1]} != tensor dim {a.dim}")
    if a.order == 0:
        return np.full(xis.shape[0], a.item())
    sums, mult = _class_sums(a)
    table = _hermite_table(a.order, xis)  # (order+1, num, dim)
    prods = np.ones((mult.shape[0], xis.shape[0]))
    for coord in range(a.dim):
        prods *= table[mult[:, coord], :, coord]
    return sums @ prods


def wick_eval_rank_one_sum(weights, vectors, n, xi):
    """Evaluate the order-n integral of sum_u w_u v_u^{(x) n} directly.

    Uses W_n(v^{(x)n}) = |v|^n He_n(<v, xi>/|v|); zero vectors contribute 0.
    Matches ``wick_eval`` on the assembled dense tensor.
    """
    xi = _seed_values(xi)
    weights = np.asarray(weights, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] != weights.size:
        raise ValueError("vectors must be (len(weights), dim)")
    norms = np.linalg.norm(vectors, axis=1)
    live = norms > 0
    if not np.any(live):
        return 0.0
    z = (vectors[live] @ xi) / norms[live]
    return float(np.sum(weights[live] * norms[live] ** n * hermite_he(n, z)))


# -- product expansion -------------------------------------------------------


@dataclass
class ChaosExpansion:
    """Expansion of a product of integrals into per-degree tensors."""

    terms: dict
    lengths: tuple

    def __post_init__(self):
        n_total = sum(self.lengths)
        for degree in self.terms:
            if degree % 2 != n_total % 2:
                raise ValueError(f"degree {degree} has wrong parity for N = {n_total}")

    @property
    def total_order(self):
        return sum(self.lengths)

    def degree0(self):
        """Constant (expectation) term; 0 when absent."""
        term = self.terms.get(0)
        return 0.0 if term is None else term.item()

    def evaluate(self, xi):
        return float(sum(wick_eval(t, xi) for t in self.terms.values()))

    def evaluate_batch(self, xis):
        xis = np.asarray(xis, dtype=float)
        out = np.zeros(xis.shape[0] if xis.ndim == 2 else 1)
        for t in self.terms.values():
            out = out + wick_eval_batch(t, xis)
        return out

    def to_dict(self):
        return {
            "lengths": list(self.lengths),
            "terms": {str(k): v.to_dict() for k, v in sorted(self.terms.items())},
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        terms = {int(k): SymTensor.from_dict(v) for k, v in obj["terms"].items()}
        return cls(terms=terms, lengths=tuple(obj["lengths"]))


def expand_product(tensors, max_total_order=DEFAULT_EXPANSION_CAP, symmetrize_terms=True):
    """Expand a product of multiple integrals into single integrals.

    The product of the integrals of A_1, ..., A_l equals the sum over all
    admissible pair sets V of the integral of the V-contraction; grouping by
    |V| = k gives one tensor per degree N - 2k.  The pointwise identity

        prod_i wick_eval(A_i, xi) == sum_m wick_eval(terms[m], xi)

    holds for every realization xi.
    """
    if len(tensors) < 2:
        raise ValueError("need at least two factors")
    dims = {t.dim for t in tensors}
    if len(dims) != 1:
        raise ValueError(f"mixed dims {sorted(dims)}")
    if any(t.order < 1 for t in tensors):
        raise ValueError("factors must have order >= 1")
    decomp = IntervalDecomposition(tuple(t.order for t in tensors))
    n_total = decomp.total
    if n_total > max_total_order:
        raise ValueError(f"total order {n_total} exceeds cap {max_total_order}")
    dim = tensors[0].dim
    terms = {}
    for k in range(n_total // 2 + 1):
        acc = None
        for pairset in enumerate_admissible(decomp, k):
            piece = cancel(pairset, tensors)
            acc = piece.entries.copy() if acc is None else acc + piece.entries
        if acc is None:
            continue
        term = SymTensor(acc, dim=dim)
        terms[n_total - 2 * k] = symmetrize(term) if symmetrize_terms else term
    return ChaosExpansion(terms=terms, lengths=decomp.lengths)


# -- Isserlis oracle ----------------------------------------------------------
#
# Independent route: expand every integral into ordinary monomials of the
# Gaussian coordinates via exact Hermite coefficients, multiply the
# polynomials, and take expectations monomial-wise by recursive pairing.
# No pair-set enumeration or tensor contraction is involved.


@lru_cache(maxsize=None)
def _gaussian_monomial_expectation(powers):
    """E prod_c xi_c^{p_c} for independent standard Gaussians.

    Recursive pairing of the first remaining factor: it must pair with one of
    the p_c - 1 same-coordinate copies (cross-coordinate covariance is 0).
    """
    for c, p in enumerate(powers):
        if p > 0:
            if p == 1:
                return 0.0
            reduced = powers[:c] + (p - 2,) + powers[c + 1 :]
            return (p - 1) * _gaussian_monomial_expectation(reduced)
    return 1.0


def _wick_polynomial(a):
    """Ordinary-monomial expansion of the integral of ``a``.

    Returns a dict mapping coordinate-exponent tuples to coefficients.
    """
    if a.order == 0:
        return {(0,) * a.dim: a.item()}
    sums, mult = _class_sums(a)
    poly = {}
    for coeff, counts in zip(sums, mult):
        if coeff == 0.0:
            continue
        partial = {(0,) * a.dim: float(coeff)}
        for coord in range(a.dim):
            m = int(counts[coord])
            if m == 0:
                continue
            hcoef = hermite_he_coefficients(m)
            nxt = {}
            for expo, c in partial.items():
                for power, hc in enumerate(hcoef):
                    if hc == 0:
                        continue
                    key = expo[:coord] + (expo[coord] + power,) + expo[coord + 1 :]
                    nxt[key] = nxt.get(key, 0.0) + c * hc
            partial = nxt
        for key, c in partial.items():
            poly[key] = poly.get(key, 0.0) + c
    return poly


def _poly_product(p1, p2):
    out = {}
    for e1, c1 in p1.items():
        for e2, c2 in p2.items():
            key = tuple(a + b for a, b in zip(e1, e2))
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def moment_oracle(tensors, max_total_order=DEFAULT_ORACLE_CAP):
    """E of a product of multiple integrals, without the expansion formula.

    Exact up to float rounding; the monomial expansion is exponential in the
    total order, hence the cap.
    """
    tensors = list(tensors)
    if not tensors:
        raise ValueError("need at least one factor")
    dims = {t.dim for t in tensors}
    if len(dims) != 1:
        raise ValueError(f"mixed dims {sorted(dims)}")
    n_total = sum(t.order for t in tensors)
    if n_total > max_total_order:
        raise ValueError(f"total order {n_total} exceeds oracle cap {max_total_order}")
    poly = _wick_polynomial(tensors[0])
    for t in tensors[1:]:
        poly = _poly_product(poly, _wick_polynomial(t))
    return float(
        sum(c * _gaussian_monomial_expectation(expo) for expo, c in poly.items())
    )


def covariance_identity_residual(a, b):
    """|E[W_n(A) W_n(B)] - n! <sym A, sym B>| via the oracle."""
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} vs {b.order}")
    lhs = moment_oracle([a, b])
    rhs = math.factorial(a.order) * inner(symmetrize(a), symmetrize(b))
    return abs(lhs - rhs)


# -- statistical checks -------------------------------------------------------


@dataclass
class HypercontractivityReport:
    """Monte-Carlo check of the chaos moment-equivalence inequality."""

    q: float
    chaos_order: int
    samples: int
    seed: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    passed: bool
    generator: str = "philox"

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self):
        return json.dumps(self.to_dict())


def hypercontractivity_check(a, q, samples=100_000, seed=0):
    """Estimate both sides of E|Z|^q <= n^{q/2} (q-1)^{qn/2} (E Z^2)^{q/2}.

    Z is the integral of ``a``; both sides are Monte-Carlo estimates with
    standard errors (delta method on the right-hand side), and the contract
    is LHS <= RHS + 3 combined standard errors.
    """
    if q <= 2:
        raise ValueError(f"q must exceed 2, got {q}")
    n = a.order
    rng = philox_stream(seed)
    xis = rng.standard_normal((samples, a.dim))
    z = wick_eval_batch(a, xis)
    abs_q = np.abs(z) ** q
    lhs = float(abs_q.mean())
    lhs_se = float(abs_q.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    z2 = z**2
    m2 = float(z2.mean())
    m2_se = float(z2.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    const = n ** (q / 2) * (q - 1) ** (q * n / 2)
    if m2 > 0:
        rhs = const * m2 ** (q / 2)
        rhs_se = const * (q / 2) * m2 ** (q / 2 - 1) * m2_se
    else:
        rhs, rhs_se = 0.0, 0.0
    passed = lhs <= rhs + 3.0 * (lhs_se + rhs_se)
    return HypercontractivityReport(
        q=q,
        chaos_order=n,
        samples=samples,
        seed=seed,
        lhs=lhs,
        lhs_se=lhs_se,
        rhs=rhs,
        rhs_se=rhs_se,
        passed=passed,
    )


@dataclass
class GebeleinReport:
    """Oracle check of the conditional-correlation bound in chaos 2."""

    lhs: float
    rhs: float
    slack: float
    rho: float
    e_xi_sq: float
    e_eta_sq: float
    centered_coefficients: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self):
        return json.dumps(self.to_dict())


def gebelein_bound_check(h_xi, h_eta, g_coefficients, normalization_tol=1e-9):
    """Verify |E xi g(eta)| <= |rho| (E xi^2)^1/2 (E g(eta)^2)^1/2 exactly.

    xi is the order-2 integral of ``h_xi`` and eta the order-2 integral of
    the rank-one square of the vector ``h_eta``; g is a polynomial, centered
    here so that E g(eta) = 0.  Normalizations |h_xi|^2 = 1/2 and
    |h_eta|^4 = 1/2 (unit variances) are required.  All moments come from
    the Isserlis oracle.
    """
    if h_xi.order != 2:
        raise ValueError("h_xi must have order 2")
    h_eta = np.asarray(h_eta, dtype=float)
    if h_eta.ndim != 1 or h_eta.size != h_xi.dim:
        raise ValueError("h_eta must be a vector of the same dim as h_xi")
    nxi = float(np.vdot(h_xi.entries, h_xi.entries))
    neta = float(np.vdot(h_eta, h_eta)) ** 2
    if abs(nxi - 0.5) > normalization_tol or abs(neta - 0.5) > normalization_tol:
        raise ValueError(
            f"normalization violated: |h_xi|^2 = {nxi}, |h_eta|^4 = {neta} (need 1/2)"
        )
    coeffs = [float(c) for c in g_coefficients]
    dim = h_xi.dim
    hh = SymTensor(np.multiply.outer(h_eta, h_eta), dim=dim, symmetric=True)

    def e_eta_pow(k):
        return 1.0 if k == 0 else moment_oracle([hh] * k, max_total_order=64)

    def e_xi_eta_pow(k):
        return moment_oracle([h_xi] + [hh] * k, max_total_order=64)

    mean_g = sum(c * e_eta_pow(k) for k, c in enumerate(coeffs))
    centered = list(coeffs)
    centered[0] -= mean_g
    lhs = abs(sum(c * e_xi_eta_pow(k) for k, c in enumerate(centered)))
    e_g_sq = sum(
        c1 * c2 * e_eta_pow(k1 + k2)
        for k1, c1 in enumerate(centered)
        for k2, c2 in enumerate(centered)
    )
    e_g_sq = max(e_g_sq, 0.0)
    e_xi_sq = moment_oracle([h_xi, h_xi])
    e_eta_sq = moment_oracle([hh, hh])
    rho = e_xi_eta_pow(1) / math.sqrt(e_xi_sq * e_eta_sq)
    rhs = abs(rho) * math.sqrt(e_xi_sq) * math.sqrt(e_g_sq)
    return GebeleinReport(
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        rho=rho,
        e_xi_sq=e_xi_sq,
        e_eta_sq=e_eta_sq,
        centered_coefficients=centered,
    )
