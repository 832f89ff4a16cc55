"""Fractionally filtered product kernels, discretized on uniform grids.

The kernel at time t maps n space arguments to the integral over u of a
fractional time filter times a product of singular envelopes phi(u - x_i).
Discretization replaces space by uniform cells on [-left, T] (one Gaussian
coordinate per cell, scaled by sqrt(spacing) so grid inner products
approximate L2 ones) and the u-integral by the matching cell tiling, with all
singular factors integrated analytically over cells.  The result is a
rank-one-sum tensor family: fixed per-cell envelope vectors with
time-dependent filter weights.

Everything downstream (condition checks, coupling functionals, simulation)
works off three reductions: grid autocorrelation of the envelope (Gram of the
envelope vectors), filter weight vectors per time, and windowed Gram algebra
for partial contractions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve

from .tensors import SymTensor

__all__ = [
    "HermiteKernelSpec",
    "GridSpec",
    "KernelDiscretization",
    "DiscretizedKernel",
    "build_kernel",
    "fractional_filter",
    "filter_cell_integrals",
    "envelope_cell_averages",
    "EnvelopeCorrelation",
    "increment_coupling",
    "coupling_integral",
    "coupling_scaling_report",
    "filter_overlap_integral",
    "overlap_scaling_report",
    "upper_scaling_report",
    "lower_scaling_report",
    "truncation_report",
]


# -- analytic ingredients -----------------------------------------------------


def fractional_filter(beta1, t, u):
    """Pointwise time filter: indicator of (0, t] at beta1 = 0, else the
    normalized difference of one-sided powers ((t-u)_+^b1 - (-u)_+^b1)/b1."""
    u = np.asarray(u, dtype=float)
    if beta1 == 0.0:
        return ((u > 0) & (u <= t)).astype(float)

    # one-sided power x_+^g: 0 for x <= 0 (also for negative g, where the
    # filter has integrable singularities as x -> 0+)
    def plus_pow(x):
        with np.errstate(divide="ignore"):
            return np.where(x > 0, np.maximum(x, 1e-300) ** beta1, 0.0)

    return (plus_pow(t - u) - plus_pow(-u)) / beta1


def filter_cell_integrals(beta1, t, edges):
    """Exact integrals of the time filter over cells given by ``edges``.

    The filter has integrable singularities at u = 0 and u = t for negative
    exponents; closed-form antiderivatives make the cell integrals exact.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    if beta1 == 0.0:
        return np.clip(np.minimum(b, t), 0.0, None) - np.clip(np.minimum(a, t), 0.0, None)
    g = beta1 + 1.0
    part_t = (np.maximum(t - a, 0.0) ** g - np.maximum(t - b, 0.0) ** g) / g
    part_0 = (np.maximum(-a, 0.0) ** g - np.maximum(-b, 0.0) ** g) / g
    return (part_t - part_0) / beta1


def envelope_cell_averages(beta2, spacing, count):
    """Cell averages of the envelope x_+^(beta2/2 - 1) at separations m*spacing.

    Entry m averages the envelope over [m*spacing - spacing/2,
    m*spacing + spacing/2); the m = 0 cell integrates through the
    singularity analytically, preserving the small-separation power law.
    """
    a = beta2 / 2.0
    m = np.arange(count, dtype=float)
    hi = np.maximum(m * spacing + spacing / 2.0, 0.0)
    lo = np.maximum(m * spacing - spacing / 2.0, 0.0)
    return (hi**a - lo**a) / (a * spacing)


class EnvelopeCorrelation:
    """The envelope's autocorrelation K(w) = int phi(y) phi(y+w) dy.

    Computed by log-spaced quadrature with an analytic far tail, cached on a
    log-spaced separation grid, and evaluated by power-law (log-log linear)
    interpolation.
    """

    def __init__(self, beta2, w_min=1e-8, w_max=1e4, points=513, quad_points=4096):
        self.beta2 = beta2
        a = beta2 / 2.0
        self.w_grid = np.geomspace(w_min, w_max, points)
        values = np.empty_like(self.w_grid)
        # integrate in units of w:  K(w) = w^(beta2-1) * int z^(a-1) (1+z)^(a-1) dz
        z_edges = np.geomspace(1e-10, 1e10, quad_points + 1)
        z_mid = np.sqrt(z_edges[:-1] * z_edges[1:])
        dz = np.diff(z_edges)
        core = np.sum(z_mid ** (a - 1.0) * (1.0 + z_mid) ** (a - 1.0) * dz)
        head = z_edges[0] ** a / a  # int_0^z0 z^(a-1) dz, (1+z) ~ 1
        tail = z_edges[-1] ** (2 * a - 1.0) / (1.0 - 2 * a)  # (1+z) ~ z regime
        self._unit_value = core + head + tail
        values = self._unit_value * self.w_grid ** (beta2 - 1.0)
        self._log_w = np.log(self.w_grid)
        self._log_v = np.log(values)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        out = np.exp(np.interp(np.log(np.clip(w, self.w_grid[0], self.w_grid[-1])), self._log_w, self._log_v))
        return out if out.ndim else float(out)


# -- spec objects --------------------------------------------------------------


@dataclass(frozen=True)
class HermiteKernelSpec:
    """Parameters of a fractionally filtered product kernel.

    ``order`` is the chaos order n, ``beta1`` the filter exponent, ``beta2``
    the envelope correlation exponent, ``horizon`` the time horizon T, and
    ``scale`` the overall factor (None requests normalization to unit process
    variance at t = min(1, T); 0 gives the zero kernel).
    """

    order: int
    beta1: float
    beta2: float
    horizon: float = 1.0
    scale: float | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not 1.0 - 1.0 / self.order < self.beta2 < 1.0:
            raise ValueError(
                f"beta2 = {self.beta2} outside (1 - 1/n, 1) = ({1 - 1/self.order}, 1)"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha = {self.alpha} outside (0, 1)")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def alpha(self):
        return self.beta1 + 0.5 * self.order * (self.beta2 - 1.0) + 1.0

    @classmethod
    def fbm(cls, alpha, beta2=None, horizon=1.0, scale=None):
        """Order-1 spec with the given increment-scaling exponent.

        For alpha > 0.55 the compact-support filter (beta1 = 0) is used;
        otherwise a negative filter exponent with a mildly singular envelope.
        """
        if beta2 is None:
            beta2 = 2.0 * alpha - 1.0 if alpha > 0.55 else 0.8
        beta1 = alpha - 0.5 * (beta2 + 1.0)
        if abs(beta1) < 1e-12:
            beta1 = 0.0
        return cls(order=1, beta1=beta1, beta2=beta2, horizon=horizon, scale=scale)

    @classmethod
    def hermite(cls, order, alpha, horizon=1.0, scale=None):
        """Order-n Hermite spec: compact filter, envelope tied to alpha."""
        if order < 2:
            raise ValueError("hermite() is for order >= 2; use fbm() for order 1")
        beta2 = 1.0 - 2.0 * (1.0 - alpha) / order
        return cls(order=order, beta1=0.0, beta2=beta2, horizon=horizon, scale=scale)

    def to_dict(self):
        return {
            "order": self.order,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "horizon": self.horizon,
            "scale": self.scale,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class GridSpec:
    """Uniform discretization: space domain [-left, horizon] split into
    ``cells`` equal cells, time grid of ``steps`` steps on [0, horizon]."""

    left: float
    cells: int
    steps: int

    def __post_init__(self):
        if self.left <= 0 or self.cells < 2 or self.steps < 1:
            raise ValueError(f"invalid grid {self}")

    def spacing(self, horizon):
        return (self.left + horizon) / self.cells

    def validate(self, horizon):
        h = self.spacing(horizon)
        time_cells = round(horizon / h)
        if abs(time_cells * h - horizon) > 1e-9 * horizon:
            raise ValueError("horizon is not an integer number of cells")
        if time_cells % self.steps:
            raise ValueError(
                f"time step must be a whole number of cells ({time_cells} cells per horizon, {self.steps} steps)"
            )
        return h, time_cells

    @classmethod
    def build(cls, spec, steps, left_units=None, per_step=1, node_budget=4_000_000):
        """Grid with one u-cell per ``1/per_step`` time step and a left tail.

        ``left_units`` is the truncation depth in units of the horizon; when
        omitted a default is chosen from the kernel's tail decay (heavier
        tails get more, capped by the node budget).
        """
        if left_units is None:
            p = tail_decay_exponent(spec)
            # aim at ~1e-3 relative tail assuming an O(1) constant
            left_units = min(max(4.0, 1e3 ** (1.0 / p)), 300.0)
        time_cells = steps * per_step
        h = spec.horizon / time_cells
        left_cells = int(math.ceil(left_units * spec.horizon / h))
        left_cells = min(left_cells, max(node_budget - time_cells, time_cells))
        return cls(left=left_cells * h, cells=left_cells + time_cells, steps=steps)


def tail_decay_exponent(spec):
    """Decay exponent p of the relative left-tail mass ~ (L/T)^-p."""
    if spec.beta1 == 0.0:
        return 1.0 - spec.beta2
    return 2.0 - 2.0 * spec.alpha


# -- discretization ------------------------------------------------------------


class KernelDiscretization:
    """Shared envelope vectors plus per-time filter weights on one grid.

    The order-n kernel tensor at time t is sum_u w_u(t) phi_u^{(x)n} with
    phi_u the (fixed) envelope vector of u-cell u and w_u(t) the exact cell
    integral of the time filter times the overall scale.
    """

    def __init__(self, spec, grid):
        self.spec = spec
        self.grid = grid
        self.h, self.time_cells = grid.validate(spec.horizon)
        self.cells = grid.cells
        self.left_cells = self.cells - self.time_cells
        self.per_step = self.time_cells // grid.steps
        self.edges = -grid.left + self.h * np.arange(self.cells + 1)
        self.envelope = envelope_cell_averages(spec.beta2, self.h, self.cells)
        # ||phi_u||^2 = h * sum_{m<=u} envelope[m]^2
        self.envelope_norm_sq = self.h * np.cumsum(self.envelope**2)
        self._autocorr = None
        self._scale = None

    # weights -----------------------------------------------------------------

    @property
    def scale(self):
        if self._scale is None:
            if self.spec.scale is not None:
                self._scale = float(self.spec.scale)
            else:
                t_ref = min(1.0, self.spec.horizon)
                raw = self.norm_sq(self._raw_weights(t_ref), exact=True)
                var = math.factorial(self.spec.order) * raw
                if var <= 0:
                    raise ValueError("cannot normalize a degenerate kernel")
                self._scale = 1.0 / math.sqrt(var)
        return self._scale

    def _raw_weights(self, t):
        return filter_cell_integrals(self.spec.beta1, t, self.edges)

    def weights(self, t):
        """Filter weight vector of the kernel at time t (scale applied)."""
        if not 0.0 <= t <= self.spec.horizon + 1e-12:
            raise ValueError(f"t = {t} outside [0, {self.spec.horizon}]")
        return self.scale * self._raw_weights(t)

    def increment_weights(self, x, s):
        """Weights of the increment kernel between times x and x + s."""
        if s <= 0 or x < 0 or x + s > self.spec.horizon + 1e-12:
            raise ValueError(f"invalid increment window x = {x}, s = {s}")
        return self.scale * (self._raw_weights(x + s) - self._raw_weights(x))

    # Gram reductions ----------------------------------------------------------

    @property
    def autocorr(self):
        """Stationary envelope Gram: entry m is h * sum_j env[j] env[j+m]."""
        if self._autocorr is None:
            acf = fftconvolve(self.envelope, self.envelope[::-1])
            self._autocorr = self.h * acf[self.cells - 1 :]
        return self._autocorr

    def pair_inner(self, wa, wb):
        """<A, B> for two weight vectors, via the stationary Gram."""
        n = self.spec.order
        sa = np.flatnonzero(wa)
        sb = np.flatnonzero(wb)
        if sa.size == 0 or sb.size == 0:
            return 0.0
        a = wa[sa[0] : sa[-1] + 1]
        b = wb[sb[0] : sb[-1] + 1]
        cross = fftconvolve(a, b[::-1])
        offsets = sa[0] - sb[0] + np.arange(-(b.size - 1), a.size)
        return float(np.sum(cross * self.autocorr[np.abs(offsets)] ** n))

    def norm_sq(self, w, exact=False):
        """||A||^2 for a weight vector.

        The stationary Gram ignores that cells near the left edge see a
        shorter envelope; ``exact=True`` subtracts the exact deficit (suffix
        sums of the envelope autocorrelation), affordable when the weights
        are compactly supported.
        """
        if not exact:
            return self.pair_inner(w, w)
        support = np.flatnonzero(np.abs(w) > 0)
        if support.size == 0:
            return 0.0
        lo, hi = support[0], support[-1]
        if self.spec.order == 1:
            # exact for any support: profile_i = sum_u w_u env[u - i]
            profile = fftconvolve(w, self.envelope[::-1])[self.cells - 1 :]
            return float(self.h * np.sum(profile**2))
        span = hi - lo + 1
        if span > 65536:
            raise ValueError(f"exact norm: support span {span} too large")
        n = self.spec.order
        env = self.envelope
        total = 0.0
        for m in range(span):
            u = np.arange(lo, hi + 1 - m)
            ww = w[u] * w[u + m]
            # gram(u, u+m) = autocorr[m] - h * sum_{i > u, i <= cells-1-m} env_i env_{i+m}
            i_hi = self.cells - 1 - m
            if lo + 1 <= i_hi:
                seg = env[lo + 1 : i_hi + 1] * env[lo + 1 + m : i_hi + 1 + m]
                suffix = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
                tail = suffix[np.minimum(u - lo, seg.size)]
            else:
                tail = 0.0
            gram = self.autocorr[m] - self.h * tail
            factor = 1.0 if m == 0 else 2.0
            total += factor * float(np.sum(ww * gram**n))
        return total

    def increment_norm(self, x, s):
        """||A_{x+s} - A_x|| via the stationary Gram."""
        return math.sqrt(max(self.norm_sq(self.increment_weights(x, s)), 0.0))

    def contraction_norm_sq(self, wa, wb, j, window_cap=4096):
        """||A (x)_j B||^2 for weight vectors wa, wb and 0 <= j <= n.

        The rank-one structure collapses the contraction to a four-index
        Gram sum; for 0 < j < n it is evaluated as two window matmuls, which
        requires compact weight supports.
        """
        n = self.spec.order
        if not 0 <= j <= n:
            raise ValueError(f"j = {j} outside 0..{n}")
        if j == 0:
            return self.norm_sq(wa) * self.norm_sq(wb)
        if j == n:
            return self.pair_inner(wa, wb) ** 2
        sa = np.flatnonzero(np.abs(wa) > 0)
        sb = np.flatnonzero(np.abs(wb) > 0)
        if sa.size == 0 or sb.size == 0:
            return 0.0
        ia = np.arange(sa[0], sa[-1] + 1)
        ib = np.arange(sb[0], sb[-1] + 1)
        if ia.size > window_cap or ib.size > window_cap:
            raise ValueError(
                f"middle contractions need compact filter support "
                f"(windows {ia.size} x {ib.size} exceed cap {window_cap}); "
                f"only available for beta1 = 0 kernels at this resolution"
            )
        gram_ab = self.autocorr[np.abs(ia[:, None] - ib[None, :])]
        gram_aa = self.autocorr[np.abs(ia[:, None] - ia[None, :])]
        gram_bb = self.autocorr[np.abs(ib[:, None] - ib[None, :])]
        cross = wa[ia][:, None] * gram_ab**j * wb[ib][None, :]
        mixed = gram_aa ** (n - j) @ cross @ gram_bb ** (n - j)
        return float(np.sum(cross * mixed))

    # dense assembly -----------------------------------------------------------

    def dense_from_weights(self, w, cap=200_000):
        """Dense order-n tensor over the cell grid (slow; cross-check path)."""
        n = self.spec.order
        if self.cells**n > cap:
            raise ValueError(f"dense tensor would have {self.cells**n} entries (cap {cap})")
        shift = np.zeros((self.cells, self.cells))
        for u in range(self.cells):
            shift[u, : u + 1] = self.envelope[u::-1]
        shift *= math.sqrt(self.h)
        operands = [w] + [shift] * n
        letters = "ijklmn"[:n]
        spec_str = "u," + ",".join("u" + c for c in letters) + "->" + letters
        return SymTensor(np.einsum(spec_str, *operands, optimize=True), dim=self.cells)

    def rank_one_vectors(self):
        """Envelope vectors as rows (small grids; feeds the Wick fast path)."""
        shift = np.zeros((self.cells, self.cells))
        for u in range(self.cells):
            shift[u, : u + 1] = self.envelope[u::-1]
        return shift * math.sqrt(self.h)

    def at(self, t):
        return DiscretizedKernel(self, t)

    def refined(self, factor=2):
        """Same spec and domain, ``factor`` times as many cells (same scale
        resolution convention, re-normalized on the finer grid)."""
        grid = GridSpec(left=self.grid.left, cells=self.grid.cells * factor, steps=self.grid.steps)
        return KernelDiscretization(self.spec, grid)


@dataclass
class DiscretizedKernel:
    """The kernel at one time point: shared vectors plus its weight vector."""

    family: KernelDiscretization
    t: float

    @property
    def weights(self):
        return self.family.weights(self.t)

    def dense_tensor(self, cap=200_000):
        return self.family.dense_from_weights(self.weights, cap=cap)

    def norm(self):
        return math.sqrt(max(self.family.norm_sq(self.weights), 0.0))


def build_kernel(spec, grid, t):
    """Discretized kernel at time t (grid time point)."""
    family = KernelDiscretization(spec, grid)
    dt = spec.horizon / grid.steps
    if abs(t / dt - round(t / dt)) > 1e-9:
        raise ValueError(f"t = {t} is not a grid time point")
    return family.at(t)


# -- coupling functionals ------------------------------------------------------


def increment_coupling(kd, s, t, x, y):
    """Weighted combination of increment contraction norms at (x, s), (y, t).

    The first piece is the squared norm of the single-slot contraction scaled
    by (st)^-2a; the remaining piece sums the j = 2..n contraction norms
    scaled by (st)^-a.  At order 1 only the first piece exists.
    """
    spec = kd.spec
    if x < 0 or y < 0 or s <= 0 or t <= 0 or x + s > spec.horizon + 1e-12 or y + t > spec.horizon + 1e-12:
        raise ValueError("increment windows must lie inside [0, horizon]")
    a = spec.alpha
    wa = kd.increment_weights(x, s)
    wb = kd.increment_weights(y, t)
    first = s ** (-2 * a) * t ** (-2 * a) * kd.contraction_norm_sq(wa, wb, 1)
    rest = 0.0
    for j in range(2, spec.order + 1):
        rest += math.sqrt(max(kd.contraction_norm_sq(wa, wb, j), 0.0))
    return first + s**-a * t**-a * rest


def coupling_integral(kd, s, t, resolution=16, max_offsets=257):
    """Double integral of the increment coupling over admissible (x, y).

    The discretized coupling depends on x and y only through x - y (the
    stationary Gram is translation invariant), so the double integral
    collapses to a single integral against the overlap length.
    """
    T = kd.spec.horizon
    h = kd.h
    stride = max(1, round(min(s, t) / (resolution * h)))
    while (2 * T - s - t) / (stride * h) > max_offsets - 1:
        stride *= 2
    step = stride * h
    # symmetric offset range so that swapping (s, t) mirrors the quadrature
    k_neg = math.floor((T - t) / step)
    k_pos = math.floor((T - s) / step)
    total = 0.0
    for k in range(-k_neg, k_pos + 1):
        delta = k * step
        x, y = (delta, 0.0) if delta >= 0 else (0.0, -delta)
        length = min(T - s, T - t + delta) - max(0.0, delta)
        if length <= 0:
            continue
        total += increment_coupling(kd, s, t, x, y) * length * step
    return total


@dataclass
class ScalingFitReport:
    """Log-log slope fit of a positive functional against dyadic scales."""

    levels: list
    scales: list
    values: list
    slope: float
    intercept: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self):
        return json.dumps(self.to_dict())


def _loglog_fit(scales, values):
    xs = np.log(np.asarray(scales))
    ys = np.log(np.asarray(values))
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def coupling_scaling_report(kd, levels=range(2, 8), resolution=16):
    """Fit F(s, s) ~ s^(2 eps) over dyadic s; eps > 0 supports the summability
    condition the regularity theorem needs."""
    T = kd.spec.horizon
    levels = [int(j) for j in levels]
    scales = [T * 2.0**-j for j in levels]
    values = [coupling_integral(kd, s, s, resolution=resolution) for s in scales]
    slope, intercept = _loglog_fit(scales, values)
    return ScalingFitReport(
        levels=levels, scales=scales, values=values, slope=slope, intercept=intercept
    )


# -- condition checks ----------------------------------------------------------


@dataclass
class UpperScalingReport:
    """Sweep of s^-alpha ||A_{x,s}|| over dyadic scales (upper bound check)."""

    kappa: float
    worst_x: float
    worst_s: float
    level_sups: dict
    refinement_drift: float | None
    diverging: bool
    passed: bool

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["level_sups"] = {str(k): v for k, v in self.level_sups.items()}
        return out

    def to_json(self):
        return json.dumps(self.to_dict())


def _scaling_sweep(increment_norm, alpha, T, levels, x_count):
    level_stats = {}
    for j in levels:
        s = T * 2.0**-j
        xs = np.linspace(0.0, T - s, x_count)
        vals = [increment_norm(x, s) * s**-alpha for x in xs]
        level_stats[j] = (max(vals), min(vals), xs[int(np.argmax(vals))], xs[int(np.argmin(vals))])
    return level_stats


def upper_scaling_report(
    kd, alpha=None, levels=range(1, 8), x_count=17, refined=None, drift_tol=0.10, trend_tol=1.5
):
    """Estimate the constant in ||A_{x,s}|| <= kappa s^alpha over a dyadic sweep.

    ``refined`` (a finer discretization of the same spec) measures grid
    sensitivity; a monotone blow-up or collapse of the per-level sups flags a
    mismatched exponent.
    """
    alpha = kd.spec.alpha if alpha is None else alpha
    T = kd.spec.horizon
    stats = _scaling_sweep(kd.increment_norm, alpha, T, levels, x_count)
    sups = {j: v[0] for j, v in stats.items()}
    worst_j = max(sups, key=sups.get)
    kappa = sups[worst_j]
    js = sorted(sups)
    lo, hi = sups[js[0]], sups[js[-1]]
    if kappa <= 0:
        diverging = False
    else:
        ratio = hi / lo if lo > 0 else math.inf
        diverging = ratio > trend_tol or ratio < 1.0 / trend_tol
    drift = None
    if refined is not None:
        stats2 = _scaling_sweep(refined.increment_norm, alpha, T, levels, x_count)
        kappa2 = max(v[0] for v in stats2.values())
        drift = abs(kappa2 - kappa) / kappa if kappa > 0 else 0.0
    passed = math.isfinite(kappa) and not diverging and (drift is None or drift < drift_tol)
    return UpperScalingReport(
        kappa=kappa,
        worst_x=stats[worst_j][2],
        worst_s=T * 2.0**-worst_j,
        level_sups=sups,
        refinement_drift=drift,
        diverging=diverging,
        passed=passed,
    )


@dataclass
class LowerScalingReport:
    """Infimum of s^-alpha ||A_{x,s}|| at the finest resolvable scales."""

    kappa_prime: float
    level_infs: dict
    stability: float
    passed: bool

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["level_infs"] = {str(k): v for k, v in self.level_infs.items()}
        return out

    def to_json(self):
        return json.dumps(self.to_dict())


def lower_scaling_report(kd, alpha=None, levels=None, x_count=33, min_kappa=1e-6, stability_tol=0.25):
    """Estimate the lower scaling constant at the two finest dyadic scales."""
    alpha = kd.spec.alpha if alpha is None else alpha
    T = kd.spec.horizon
    if levels is None:
        # finest dyadic level still containing a few u-cells
        j_max = int(math.floor(math.log2(kd.time_cells / 4))) if kd.time_cells >= 8 else 1
        levels = [j_max - 1, j_max]
    stats = _scaling_sweep(kd.increment_norm, alpha, T, levels, x_count)
    infs = {j: v[1] for j, v in stats.items()}
    vals = [infs[j] for j in sorted(infs)]
    kappa_prime = vals[-1]
    top = max(vals)
    stability = abs(vals[-1] - vals[0]) / top if top > 0 else 0.0
    passed = kappa_prime > min_kappa and stability < stability_tol
    return LowerScalingReport(
        kappa_prime=kappa_prime, level_infs=infs, stability=stability, passed=passed
    )


# -- filter overlap integral (coarse bookkeeping bound) -------------------------


def _filter_quad_edges(beta1, s, count_core=256, count_tail=128, tail_factor=1e4):
    """u-cell edges for filter quadrature: linear core, log tail to the left.

    Edges include 0 and s so the filter keeps one sign per cell.
    """
    core = np.linspace(-2.0 * s, s, count_core + 1)
    core = np.unique(np.concatenate((core, [0.0, s])))
    if beta1 == 0.0:
        return core
    tail = -s * np.geomspace(2.0, tail_factor ** (1.0 / max(1.0 - beta1, 1e-9)), count_tail + 1)[::-1]
    return np.concatenate((tail[:-1], core))


def filter_overlap_integral(spec, s, t):
    """Double integral of |filter_s| |filter_t| against the capped separation
    power |u - v|^(0 inside 1, n(beta2-1) outside)."""
    if s <= 0 or t <= 0:
        raise ValueError("s and t must be positive")
    exponent = spec.order * (spec.beta2 - 1.0)
    edges_u = _filter_quad_edges(spec.beta1, t)
    edges_v = _filter_quad_edges(spec.beta1, s)
    ku = np.abs(filter_cell_integrals(spec.beta1, t, edges_u))
    kv = np.abs(filter_cell_integrals(spec.beta1, s, edges_v))
    mid_u = 0.5 * (edges_u[:-1] + edges_u[1:])
    mid_v = 0.5 * (edges_v[:-1] + edges_v[1:])
    sep = np.abs(mid_u[:, None] - mid_v[None, :])
    weight = np.where(sep < 1.0, 1.0, np.maximum(sep, 1e-300) ** exponent)
    return float(ku @ weight @ kv)


def overlap_scaling_report(spec, levels=range(1, 7)):
    """Dyadic scaling of the overlap integral; the coarse bound predicts
    exponent 1 + min(beta1, 0) per variable (so twice that on the diagonal)."""
    T = spec.horizon
    levels = [int(j) for j in levels]
    scales = [T * 2.0**-j for j in levels]
    diag = [filter_overlap_integral(spec, s, s) for s in scales]
    slope_diag, intercept = _loglog_fit(scales, diag)
    t0 = T / 2.0
    col = [filter_overlap_integral(spec, s, t0) for s in scales]
    slope_s, _ = _loglog_fit(scales, col)
    return {
        "diagonal": ScalingFitReport(
            levels=levels, scales=scales, values=diag, slope=slope_diag, intercept=intercept
        ),
        "slope_per_variable": float(slope_s),
        "predicted_per_variable": 1.0 + min(spec.beta1, 0.0),
    }


# -- truncation bookkeeping ------------------------------------------------------


def truncation_report(spec, left_units, probe_cells=2048, t_ref=None):
    """Estimated relative left-tail mass of ||A_t||^2 lost to truncation.

    Measures the norm gain from doubling the domain on a coarse probe grid
    and extrapolates the geometric tail with the kernel's decay exponent.
    """
    t_ref = min(1.0, spec.horizon) if t_ref is None else t_ref
    p = tail_decay_exponent(spec)
    probe = replace(spec, scale=1.0)

    def norm_at(lu):
        cells_per_T = max(64, int(probe_cells / (lu + 1)))
        grid = GridSpec.build(probe, steps=cells_per_T, left_units=lu, node_budget=10_000_000)
        kd = KernelDiscretization(probe, grid)
        return kd.norm_sq(kd.weights(t_ref), exact=(probe.beta1 == 0.0 or probe.order == 1))

    n1 = norm_at(left_units)
    n2 = norm_at(2.0 * left_units)
    gain = max(n2 - n1, 0.0)
    tail = gain / (1.0 - 2.0**-p) / n2 if n2 > 0 else 0.0
    return {
        "left_units": float(left_units),
        "decay_exponent": p,
        "norm_sq": n1,
        "norm_sq_doubled": n2,
        "relative_tail": tail,
    }
