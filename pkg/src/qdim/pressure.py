"""Two-parameter topological pressure and the temperature function.

P(q, t) is the exponential growth rate of the word sums

    sum over |w| = n of  ||exp(S_w(F))||^q * ||phi_w'||^t .

Symbol-constant families on similarity systems are multiplicative: the
depth-n sum is the n-th power of the single-symbol sum, so P is exact
at every depth.  General systems are summed over a truncated word tree
with vectorized per-word sup norms; the per-word arrays do not depend
on (q, t), so root finding in either variable reuses them.

The temperature function beta(q) is the unique zero of t -> P(q, t),
found by bisection (P is strictly decreasing in t).  The quantization
dimension of order r solves beta(q_r) = r * q_r and equals
kappa_r = r * q_r / (1 - q_r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import BracketError, DegenerateSystemError
from .ifs import FiniteAlphabet, GeometricTail, IfsSystem, InfiniteAlphabet, PowerLawTail
from .potentials import (ConstantLogWeights, FiniteWeights, PotentialFamily,
                         f_value, is_symbol_constant, symbol_log_weight)

_WORD_BUDGET = 4_000_000  # refuse word trees beyond this many leaves

# default |P| tolerances: closed-form vs tree-summed estimates
_TOL_CLOSED = 1e-12
_TOL_TREE = 1e-6


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class PressureEstimate:
    q: float
    t: float
    truncation: int | None          # None means the untruncated alphabet
    depth_values: tuple[tuple[int, float], ...]
    value: float
    error: float                    # depth-extrapolation drift
    finite: bool
    tail_bound: float = 0.0         # single-symbol mass beyond the truncation


@dataclass(frozen=True)
class ThetaResult:
    q: float
    theta: float                    # -inf for finite alphabets
    method: str


@dataclass(frozen=True)
class TemperatureSample:
    qs: tuple[float, ...]
    betas: tuple[float, ...]
    convexity_defect: float         # max(0, -min second difference)


@dataclass(frozen=True)
class QdimSolution:
    r: float
    q_r: float
    kappa_r: float
    D_r: float
    truncation: int | None
    trace: tuple[tuple[float, float], ...]
    degenerate: bool = False


@dataclass(frozen=True)
class SweepEntry:
    M: int
    kappa: float
    degenerate: bool


@dataclass(frozen=True)
class SweepResult:
    r: float
    entries: tuple[SweepEntry, ...]
    kappa_ref: float | None
    final_gap: float | None


@dataclass(frozen=True)
class FigureData:
    r: float
    qs: tuple[float, ...]
    betas: tuple[float, ...]
    line: tuple[float, ...]
    alphas: tuple[float, ...]
    f_alphas: tuple[float, ...]
    q_r: float
    intersection: tuple[float, float]
    intercept: float

    def rows(self):
        for row in zip(self.qs, self.betas, self.line, self.alphas, self.f_alphas):
            yield row


# ---------------------------------------------------------------------------
# closed forms for multiplicative systems


def is_multiplicative(system: IfsSystem, family: PotentialFamily) -> bool:
    """Symbol-constant potentials on similarity maps: word sums factor exactly."""
    if not is_symbol_constant(family, system):
        return False
    if isinstance(system.alphabet, InfiniteAlphabet):
        return system.geometric_ratio is not None
    from .ifs import Similarity1D
    return all(isinstance(m, Similarity1D) for m in system.alphabet.maps)


def _single_symbol_logsum(system: IfsSystem, family: PotentialFamily, q: float,
                          t: float, M: int | None) -> float:
    """log sum_i ||e^{f_i}||^q * ||phi_i'||^t with geometric closed forms.

    Returns +inf when the untruncated series diverges.
    """
    if isinstance(system.alphabet, FiniteAlphabet):
        n = system.alphabet.size if M is None else min(M, system.alphabet.size)
        terms = [
            q * symbol_log_weight(family, system, i)
            + t * math.log(system.map(i).deriv_sup)
            for i in range(1, n + 1)
        ]
        return float(logsumexp(terms))

    rho = system.geometric_ratio
    if rho is None:
        raise ValueError("closed-form sums need geometric similarity structure")
    log_rho = math.log(rho)
    if isinstance(family, ConstantLogWeights):
        w = family.weights
        if isinstance(w, FiniteWeights):
            raise ValueError("finite weight table on an infinite alphabet")
        # log p_i = log(1-w) + (i-1) log w;  log ratio_i = i log rho
        A = q * (math.log1p(-w.ratio) - math.log(w.ratio) - family.shift)
        B = q * math.log(w.ratio) + t * log_rho
    else:
        A = -q * family.shift
        B = q * family.s_exp * log_rho + t * log_rho
    # sum_{i=1..M} e^{A + B i}
    if M is None:
        if B >= 0.0:
            return math.inf
        return A + B - math.log1p(-math.exp(B))
    if abs(B) < 1e-300:
        return A + math.log(M)
    if B > 0:
        return A + B * M + math.log1p(-math.exp(-B * M)) - math.log1p(-math.exp(-B))
    return A + B + math.log1p(-math.exp(B * M)) - math.log1p(-math.exp(B))


# ---------------------------------------------------------------------------
# word-tree sup arrays (general systems)


@lru_cache(maxsize=6)
def _tree_sup_arrays(system: IfsSystem, family: PotentialFamily, M: int,
                     depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-word sup arrays at a fixed depth over the truncated alphabet.

    Returns (B, D) with B[w] = log||exp(S_w(F))|| and
    D[w] = log||phi_w'||, both as grid maxima.  Words are built by
    prepending symbols, which keeps every update a single vectorized
    pass: for w -> i+w,

        values_{iw} = phi_i(values_w)
        logderiv_{iw} = log|phi_i'(values_w)| + logderiv_w
        birkhoff_{iw} = f_i(values_w) + birkhoff_w .
    """
    if M ** depth > _WORD_BUDGET:
        raise ValueError(
            f"word tree M={M}, depth={depth} exceeds the budget; "
            "lower the depth or the truncation"
        )
    grid = np.array(system.grid, dtype=float)
    vals = grid[None, :].copy()
    logd = np.zeros_like(vals)
    bsum = np.zeros_like(vals)
    maps = [system.map(i) for i in range(1, M + 1)]
    for _ in range(depth):
        new_vals, new_logd, new_bsum = [], [], []
        for i, m in enumerate(maps, start=1):
            new_vals.append(m.value(vals))
            new_logd.append(np.log(m.abs_deriv(vals)) + logd)
            new_bsum.append(f_value(family, system, i, vals) + bsum)
        vals = np.concatenate(new_vals, axis=0)
        logd = np.concatenate(new_logd, axis=0)
        bsum = np.concatenate(new_bsum, axis=0)
    B = bsum.max(axis=1)
    D = logd.max(axis=1)
    B.flags.writeable = False
    D.flags.writeable = False
    return B, D


def truncation_tail_bound(system: IfsSystem, family: PotentialFamily, q: float,
                          t: float, M: int) -> float:
    """Upper bound for sum over i > M of ||e^{f_i}||^q ||phi_i'||^t.

    Separates the alphabet-truncation error from the depth error; it is
    reported alongside tree estimates, never folded into the sums.
    Returns +inf when the tail diverges at this (q, t).
    """
    if isinstance(system.alphabet, FiniteAlphabet):
        return 0.0
    tail = system.alphabet.tail
    if isinstance(family, ConstantLogWeights):
        w = family.weights
        if isinstance(w, FiniteWeights):
            raise ValueError("finite weight table on an infinite alphabet")
        scale = q * (math.log1p(-w.ratio) - math.log(w.ratio) - family.shift)
        if isinstance(tail, GeometricTail):
            a = math.exp(q * math.log(w.ratio) + t * math.log(tail.base))
            if a >= 1.0:
                return math.inf
            return math.exp(scale) * tail.coef ** t * a ** (M + 1) / (1.0 - a)
        # geometric weights against a power-law derivative tail
        if q <= 0.0 and t * tail.power <= 1.0:
            return math.inf
        ws = np.arange(M + 1, M + 1002, dtype=float)
        head = float(np.sum(np.exp(q * np.log1p(-w.ratio) + q * (ws - 1) * math.log(w.ratio))
                            * (tail.coef * ws ** -tail.power) ** t))
        return head  # geometrically dominated; the first 1000 terms bracket it
    expo = q * family.s_exp + t
    scale = math.exp(q * (family.g_sup - family.shift))
    if isinstance(tail, GeometricTail):
        a = tail.base ** expo
        if a >= 1.0:
            return math.inf
        return scale * tail.coef ** expo * a ** (M + 1) / (1.0 - a)
    p_eff = tail.power * expo
    if p_eff <= 1.0:
        return math.inf
    return scale * tail.coef ** expo * M ** (1.0 - p_eff) / (p_eff - 1.0)


def _resolve_truncation(system: IfsSystem, truncation: int | None) -> int:
    if isinstance(system.alphabet, FiniteAlphabet):
        return system.alphabet.size if truncation is None else min(truncation, system.alphabet.size)
    if truncation is None:
        raise ValueError("tree sums over an infinite alphabet need a truncation")
    return truncation


def _tree_depths(M: int, depths: tuple[int, int] | None) -> tuple[int, int]:
    if depths is not None:
        n1, n2 = depths
        if not 1 <= n1 < n2:
            raise ValueError("depths must satisfy 1 <= n1 < n2")
        return n1, n2
    n2 = max(2, int(math.log(16384) / math.log(max(M, 2))))
    return max(1, n2 // 2), n2


def pressure_word_sum(system: IfsSystem, family: PotentialFamily, q: float, t: float,
                      depth: int, truncation: int | None = None) -> float:
    """(1/n) log sum over depth-n words of ||exp S_w||^q ||phi_w'||^t.

    Multiplicative systems use the exact single-symbol identity (the
    value is depth-independent); everything else runs the word tree.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if is_multiplicative(system, family):
        return _single_symbol_logsum(system, family, q, t, truncation)
    M = _resolve_truncation(system, truncation)
    B, D = _tree_sup_arrays(system, family, M, depth)
    return float(logsumexp(q * B + t * D)) / depth


def estimate_pressure(system: IfsSystem, family: PotentialFamily, q: float, t: float,
                      depths: tuple[int, int] | None = None,
                      truncation: int | None = None) -> PressureEstimate:
    """Depth-extrapolated pressure estimate.

    With a_n = n * P_n, the telescoped value (a_{n2} - a_{n1})/(n2 - n1)
    cancels the constant offset of the subadditive sequence; the error
    indicator is the drift between the raw top depth and the telescoped
    value.
    """
    if is_multiplicative(system, family):
        v = pressure_word_sum(system, family, q, t, 1, truncation)
        tail = 0.0
        if truncation is not None and isinstance(system.alphabet, InfiniteAlphabet):
            tail = truncation_tail_bound(system, family, q, t, truncation)
        return PressureEstimate(q, t, truncation, ((1, v),), v, 0.0,
                                math.isfinite(v), tail)
    M = _resolve_truncation(system, truncation)
    n1, n2 = _tree_depths(M, depths)
    p1 = pressure_word_sum(system, family, q, t, n1, M)
    p2 = pressure_word_sum(system, family, q, t, n2, M)
    value = (n2 * p2 - n1 * p1) / (n2 - n1)
    tail = 0.0
    if isinstance(system.alphabet, InfiniteAlphabet):
        tail = truncation_tail_bound(system, family, q, t, M)
    return PressureEstimate(q, t, M, ((n1, p1), (n2, p2)), value,
                            abs(value - p2), math.isfinite(value), tail)


# ---------------------------------------------------------------------------
# finiteness threshold


def theta_of_q(system: IfsSystem, family: PotentialFamily, q: float) -> ThetaResult:
    """theta(q): infimum of t for which the pressure series stays finite.

    Finite alphabets are unbounded below (theta = -inf).  Infinite
    alphabets are resolved from the tail descriptors.
    """
    if isinstance(system.alphabet, FiniteAlphabet):
        return ThetaResult(q, -math.inf, "closed-form")
    tail = system.alphabet.tail
    if isinstance(family, ConstantLogWeights):
        w = family.weights
        if isinstance(w, FiniteWeights):
            raise ValueError("finite weight table on an infinite alphabet")
        if isinstance(tail, GeometricTail):
            # converges iff w^q * base^t < 1, i.e. t > -q log w / log base
            theta = -q * math.log(w.ratio) / math.log(tail.base)
            return ThetaResult(q, theta, "closed-form")
        # geometric weights beat any power-law derivative tail once q > 0
        theta = 1.0 / tail.power if q == 0.0 else -math.inf
        return ThetaResult(q, theta, "tail-descriptor")
    if isinstance(tail, PowerLawTail):
        return ThetaResult(q, 1.0 / tail.power - q * family.s_exp, "tail-descriptor")
    return ThetaResult(q, -q * family.s_exp, "closed-form")


# ---------------------------------------------------------------------------
# root finding


def _pressure_callable(system: IfsSystem, family: PotentialFamily, q: float,
                       truncation: int | None,
                       depths: tuple[int, int] | None) -> tuple[Callable[[float], float], float]:
    """(t -> pressure estimate, |P| tolerance default) for a fixed q."""
    if is_multiplicative(system, family):
        return (lambda t: _single_symbol_logsum(system, family, q, t, truncation),
                _TOL_CLOSED)
    M = _resolve_truncation(system, truncation)
    n1, n2 = _tree_depths(M, depths)
    B1, D1 = _tree_sup_arrays(system, family, M, n1)
    B2, D2 = _tree_sup_arrays(system, family, M, n2)

    def est(t: float) -> float:
        a1 = float(logsumexp(q * B1 + t * D1))
        a2 = float(logsumexp(q * B2 + t * D2))
        return (a2 - a1) / (n2 - n1)

    return est, _TOL_TREE


def _bisect_decreasing(fn: Callable[[float], float], lo: float, hi: float,
                       tol_f: float, max_iter: int = 300,
                       trace: list | None = None) -> float:
    """Bisection for a strictly decreasing fn with fn(lo) > 0 > fn(hi)."""
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        v = fn(mid)
        if trace is not None:
            trace.append((mid, v))
        if math.isfinite(v) and abs(v) <= tol_f:
            return mid
        if v > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 5e-16 * max(1.0, abs(hi)):
            return 0.5 * (lo + hi)
    return mid


def beta_of_q(system: IfsSystem, family: PotentialFamily, q: float,
              truncation: int | None = None, tolerance: float | None = None,
              depths: tuple[int, int] | None = None) -> float:
    """The temperature function: the unique t with P(q, t) = 0.

    Exploits strict decrease of t -> P(q, t); the returned t satisfies
    |P(q, t)| <= tolerance.  Raises BracketError when no sign change
    exists (irregular or degenerate truncations are reported, never
    extrapolated over).
    """
    fn, tol_default = _pressure_callable(system, family, q, truncation, depths)
    tol = tol_default if tolerance is None else tolerance

    # truncated series converge for every t, so the finiteness threshold
    # constrains the bracket only for untruncated infinite sums
    theta = -math.inf
    if truncation is None and isinstance(system.alphabet, InfiniteAlphabet):
        theta = theta_of_q(system, family, q).theta
    if math.isfinite(theta):
        lo = theta + 1e-6
        # regularity probe: P must become positive and finite just above theta
        probes = [lo, theta + 0.05, theta + 0.1]
        if not any(math.isfinite(fn(u)) and fn(u) > 0 for u in probes):
            raise BracketError(
                f"pressure never positive just above theta({q})={theta}; "
                "system looks irregular at this truncation"
            )
        while not math.isfinite(fn(lo)):
            lo = 0.5 * (lo + theta + 0.2)
    else:
        lo = 0.0
        step = 1.0
        while fn(lo) <= 0.0:
            lo -= step
            step *= 2.0
            if lo < -1e4:
                raise BracketError("no positive pressure found walking t downward")

    hi = max(25.0, lo + 1.0)
    while fn(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e4:
            raise BracketError("pressure does not become negative for large t")

    return _bisect_decreasing(fn, lo, hi, tol)


def hausdorff_dim(system: IfsSystem, family: PotentialFamily,
                  truncation: int | None = None, tolerance: float | None = None,
                  depths: tuple[int, int] | None = None) -> float:
    """Root of t -> P(0, t); coincides with beta(0) for regular systems."""
    return beta_of_q(system, family, 0.0, truncation, tolerance, depths)


def temperature_curve(system: IfsSystem, family: PotentialFamily,
                      q_grid: Sequence[float] | None = None,
                      truncation: int | None = None, tolerance: float | None = None,
                      depths: tuple[int, int] | None = None) -> TemperatureSample:
    qs = np.linspace(0.0, 1.0, 21) if q_grid is None else np.asarray(q_grid, float)
    betas = [beta_of_q(system, family, float(q), truncation, tolerance, depths) for q in qs]
    b = np.asarray(betas)
    defect = 0.0
    if len(b) >= 3:
        second = np.diff(b, 2)
        defect = max(0.0, float(-second.min()))
    return TemperatureSample(tuple(map(float, qs)), tuple(map(float, betas)), defect)


def solve_quantization_dim(system: IfsSystem, family: PotentialFamily, r: float,
                           truncation: int | None = None,
                           tolerance: float | None = None,
                           depths: tuple[int, int] | None = None) -> QdimSolution:
    """Solve beta(q_r) = r * q_r and return (q_r, kappa_r, D_r).

    h(q) = beta(q) - r q is strictly decreasing with h(0) = beta(0) > 0,
    so bisection in q is unconditionally safe.  kappa_r = r q_r/(1-q_r)
    and D_r = kappa_r = beta(q_r)/(1-q_r).
    """
    if r <= 0:
        raise ValueError("the order r must be positive")

    def beta(q: float) -> float:
        return beta_of_q(system, family, q, truncation, tolerance, depths)

    beta0 = beta(1e-12)
    if beta0 <= 1e-9:
        raise DegenerateSystemError(
            f"beta(0) = {beta0:.3g} <= 0: the (truncated) limit set carries no dimension"
        )

    def h(q: float) -> float:
        return beta(q) - r * q

    lo, hi = 1e-6, 1.0 - 1e-6
    if h(lo) <= 0:
        raise BracketError("h(q) not positive at the left bracket")
    if h(hi) >= 0:
        raise BracketError("h(q) not negative at the right bracket")

    tol = tolerance
    if tol is None:
        tol = _TOL_CLOSED if is_multiplicative(system, family) else _TOL_TREE
    trace: list[tuple[float, float]] = []
    q_r = _bisect_decreasing(h, lo, hi, tol, trace=trace)
    kappa = r * q_r / (1.0 - q_r)
    check = beta(q_r) - r * q_r
    if not abs(check) <= max(tol * 10, 1e-9):
        raise BracketError(f"fixed-point residual {check:.3g} above tolerance")
    return QdimSolution(r=r, q_r=q_r, kappa_r=kappa, D_r=kappa,
                        truncation=truncation, trace=tuple(trace))


def truncation_sweep(system: IfsSystem, family: PotentialFamily, r: float,
                     M_list: Sequence[int], tolerance: float | None = None,
                     depths: tuple[int, int] | None = None) -> SweepResult:
    """kappa_{r,M} across truncations, with the full-system reference when closed-form.

    Truncations whose beta_M(0) <= 0 (single-map limit sets are points)
    come back as kappa = 0 with a degenerate flag.
    """
    entries = []
    for M in M_list:
        if M < 1:
            raise ValueError("truncations must be >= 1")
        try:
            sol = solve_quantization_dim(system, family, r, truncation=int(M),
                                         tolerance=tolerance, depths=depths)
            entries.append(SweepEntry(int(M), sol.kappa_r, False))
        except DegenerateSystemError:
            entries.append(SweepEntry(int(M), 0.0, True))
    kappa_ref = None
    gap = None
    if is_multiplicative(system, family) or isinstance(system.alphabet, FiniteAlphabet):
        ref = solve_quantization_dim(system, family, r, truncation=None,
                                     tolerance=tolerance, depths=depths)
        kappa_ref = ref.kappa_r
        gap = kappa_ref - entries[-1].kappa if entries else None
    return SweepResult(r, tuple(entries), kappa_ref, gap)


def legendre_and_figure_data(system: IfsSystem, family: PotentialFamily, r: float,
                             q_grid: Sequence[float] | None = None,
                             truncation: int | None = None,
                             tolerance: float | None = None,
                             depths: tuple[int, int] | None = None) -> FigureData:
    """Temperature curve, the y = r q chord, and the discrete Legendre transform.

    The line through the intersection (q_r, r q_r) and (1, 0) meets the
    vertical axis at the quantization dimension; the spectrum is
    f(alpha) = inf over the grid of (q alpha + beta(q)) with alpha
    ranging over the negated slopes of beta.
    """
    qs = np.linspace(0.0, 1.0, 21) if q_grid is None else np.asarray(q_grid, float)
    if len(qs) < 3:
        raise ValueError("q grid too coarse")
    betas = np.array([beta_of_q(system, family, float(q), truncation, tolerance, depths)
                      for q in qs])
    sol = solve_quantization_dim(system, family, r, truncation, tolerance, depths)
    q_r = sol.q_r
    intercept = r * q_r / (1.0 - q_r)

    slopes = -np.diff(betas) / np.diff(qs)
    a_min, a_max = float(slopes.min()), float(slopes.max())
    if a_max - a_min < 1e-9:
        alphas = np.full(len(qs), 0.5 * (a_min + a_max))
    else:
        alphas = np.linspace(a_min, a_max, len(qs))
    f_alphas = np.array([np.min(qs * a + betas) for a in alphas])

    return FigureData(
        r=r,
        qs=tuple(map(float, qs)),
        betas=tuple(map(float, betas)),
        line=tuple(float(r * q) for q in qs),
        alphas=tuple(map(float, alphas)),
        f_alphas=tuple(map(float, f_alphas)),
        q_r=q_r,
        intersection=(q_r, r * q_r),
        intercept=intercept,
    )
