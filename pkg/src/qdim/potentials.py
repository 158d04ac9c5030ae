"""Summable potential families over an IFS alphabet.

Two families are shipped.  ``ConstantLogWeights`` assigns f_i = log p_i
(the self-similar / Bernoulli case).  ``DerivativeFamily`` assigns
f_i(x) = g(x) + s_exp * log|phi_i'(x)|, the standard summable class on
hereditarily regular systems.  Arbitrary potentials enter through the
same evaluation-oracle interface by supplying g.

Families carry a normalization ``shift``: the effective potential is
f_i - shift, chosen so the topological pressure of the family vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import NonSummableError
from .ifs import GeometricTail, IfsSystem, InfiniteAlphabet, Similarity1D, Word

# ---------------------------------------------------------------------------
# weight tables


@dataclass(frozen=True)
class FiniteWeights:
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values or any(v <= 0 for v in self.values):
            raise ValueError("weights must be positive")

    def log_p(self, i: int) -> float:
        return math.log(self.values[i - 1])

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class GeometricWeights:
    """p_i = (1 - ratio) * ratio**(i-1); sums to one over the full alphabet."""

    ratio: float

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("weight ratio must lie in (0, 1)")

    def log_p(self, i: int) -> float:
        return math.log1p(-self.ratio) + (i - 1) * math.log(self.ratio)

    @property
    def size(self) -> None:
        return None

    def tail_mass(self, M: int) -> float:
        # sum_{i > M} p_i
        return self.ratio ** M


@dataclass(frozen=True)
class ConstantLogWeights:
    """Potential family f_i = log p_i (x-independent)."""

    weights: FiniteWeights | GeometricWeights
    shift: float = 0.0
    shift_error: float = 0.0


@dataclass(frozen=True)
class DerivativeFamily:
    """Potential family f_i(x) = g(x) + s_exp * log|phi_i'(x)|.

    ``g=None`` means the zero function.  ``g_sup`` bounds sup|g| and
    feeds tail estimates; ``ratio_c`` optionally pins the Birkhoff ratio
    constant when g is nonzero (otherwise a sampled estimate is used,
    which can only falsify).
    """

    s_exp: float
    g: Callable | None = None
    g_sup: float = 0.0
    ratio_c: float | None = None
    shift: float = 0.0
    shift_error: float = 0.0

    def __post_init__(self):
        if self.s_exp <= 0:
            raise ValueError("derivative exponent must be positive")


PotentialFamily = ConstantLogWeights | DerivativeFamily


@dataclass(frozen=True)
class HolderCertificate:
    holder_order: float
    v_beta: float
    v_n: tuple[float, ...]


@dataclass(frozen=True)
class RatioConstant:
    """sup over sampled (word, x, y) of exp(S_w(x) - S_w(y)); falsify-only."""

    C: float
    structural: float | None = None

    def bound(self) -> float:
        return self.structural if self.structural is not None else self.C


@dataclass(frozen=True)
class SummabilityReport:
    tail_sum: float
    certificate: HolderCertificate
    ratio: RatioConstant


# ---------------------------------------------------------------------------
# families as functions on symbols


def log_weight_family(weights: Sequence[float]) -> ConstantLogWeights:
    return ConstantLogWeights(FiniteWeights(tuple(float(w) for w in weights)))


def geometric_weight_family(ratio: float) -> ConstantLogWeights:
    return ConstantLogWeights(GeometricWeights(float(ratio)))


def derivative_family(s_exp: float, g: Callable | None = None, *,
                      g_sup: float = 0.0, ratio_c: float | None = None) -> DerivativeFamily:
    return DerivativeFamily(float(s_exp), g, g_sup, ratio_c)


def f_value(family: PotentialFamily, system: IfsSystem, i: int, x):
    """Shift-adjusted potential f_i(x); broadcasts over numpy arrays."""
    if isinstance(family, ConstantLogWeights):
        return family.weights.log_p(i) - family.shift + 0.0 * x
    m = system.map(i)
    base = 0.0 if family.g is None else family.g(x)
    return base + family.s_exp * np.log(m.abs_deriv(x)) - family.shift


def single_exp_sup(family: PotentialFamily, system: IfsSystem, i: int) -> float:
    """||e^{f_i}|| over the domain (grid estimate for nonconstant g)."""
    if isinstance(family, ConstantLogWeights):
        return math.exp(family.weights.log_p(i) - family.shift)
    return float(np.exp(np.max(f_value(family, system, i, system.grid))))


def is_symbol_constant(family: PotentialFamily, system: IfsSystem) -> bool:
    """True when every f_i is constant on the domain (exact sup norms)."""
    if isinstance(family, ConstantLogWeights):
        return True
    if family.g is not None:
        return False
    if isinstance(system.alphabet, InfiniteAlphabet):
        return system.geometric_ratio is not None
    return all(isinstance(m, Similarity1D) for m in system.alphabet.maps)


def symbol_log_weight(family: PotentialFamily, system: IfsSystem, i: int) -> float:
    """log||e^{f_i}|| for symbol-constant families (exact)."""
    if isinstance(family, ConstantLogWeights):
        return family.weights.log_p(i) - family.shift
    return family.s_exp * math.log(system.map(i).deriv_sup) - family.shift


def ratio_bound(family: PotentialFamily, system: IfsSystem) -> float:
    """The Birkhoff ratio constant C: exp(S_w(x))/exp(S_w(y)) <= C.

    Constant families have C = 1 exactly.  For f_i = s*log|phi_i'| the
    distortion property gives C = K**s_exp.  A nonzero g needs a
    user-supplied ratio_c (a sampled diagnostic otherwise).
    """
    if isinstance(family, ConstantLogWeights):
        return 1.0
    if family.g is None:
        return system.K ** family.s_exp
    if family.ratio_c is not None:
        return family.ratio_c
    return _sampled_ratio(family, system)


def _sampled_ratio(family: PotentialFamily, system: IfsSystem, depth: int = 5,
                   samples: int = 300, seed: int = 1) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_sym = system.size or 8
    grid = system.grid
    worst = 1.0
    for _ in range(samples):
        length = int(rng.integers(1, depth + 1))
        word = tuple(int(v) + 1 for v in rng.integers(0, n_sym, size=length))
        s = _birkhoff_grid(family, system, word, grid)
        worst = max(worst, float(np.exp(s.max() - s.min())))
    return worst


# ---------------------------------------------------------------------------
# Birkhoff sums


def _birkhoff_grid(family: PotentialFamily, system: IfsSystem, word: Word,
                   x: np.ndarray) -> np.ndarray:
    """S_w(F) evaluated on an array of points, via the suffix orbit."""
    total = np.zeros_like(np.asarray(x, dtype=float))
    y = np.asarray(x, dtype=float)
    for sym in reversed(word):
        total = total + f_value(family, system, sym, y)
        y = system.map(sym).value(y)
    return total


def birkhoff_sum(family: PotentialFamily, system: IfsSystem, word: Sequence[int],
                 x: float) -> float:
    """S_w(F)(x) = sum_j f_{w_j}(phi_{suffix after j}(x))."""
    w = system.check_word(word)
    if not w:
        raise ValueError("Birkhoff sums need a nonempty word")
    a, b = system.domain
    if not (a - 1e-12 <= x <= b + 1e-12):
        raise ValueError(f"x={x} outside the domain [{a}, {b}]")
    return float(_birkhoff_grid(family, system, w, np.asarray(float(x))))


def sup_norm_exp_birkhoff(family: PotentialFamily, system: IfsSystem,
                          word: Sequence[int]) -> tuple[float, float]:
    """||exp(S_w(F))|| with a two-sided error factor.

    Symbol-constant families are exact with factor 1.  Otherwise the
    grid maximum is reported; the ratio constant makes it two-sided:
    norm <= sup <= norm * error_factor.
    """
    w = system.check_word(word)
    if not w:
        raise ValueError("sup norms need a nonempty word")
    if is_symbol_constant(family, system):
        return math.exp(sum(symbol_log_weight(family, system, i) for i in w)), 1.0
    vals = _birkhoff_grid(family, system, w, system.grid)
    norm = float(np.exp(vals.max()))
    if system.sup_grid_exact and family.g is None:
        return norm, 1.0
    return norm, ratio_bound(family, system)


# ---------------------------------------------------------------------------
# summability / Hoelder diagnostics


def _tail_exp_sum(family: PotentialFamily, system: IfsSystem,
                  enumerate_to: int = 10_000) -> float:
    """sum_i ||e^{f_i}|| via partial enumeration plus an integral tail bracket."""
    alphabet = system.alphabet
    if not isinstance(alphabet, InfiniteAlphabet):
        return sum(single_exp_sup(family, system, i) for i in range(1, alphabet.size + 1))

    if isinstance(family, ConstantLogWeights):
        w = family.weights
        if isinstance(w, FiniteWeights):
            raise ValueError("finite weight table on an infinite alphabet")
        return math.exp(-family.shift)  # geometric weights sum to one

    tail = alphabet.tail
    s = family.s_exp
    scale = math.exp(family.g_sup - family.shift)
    if isinstance(tail, GeometricTail):
        base = tail.base ** s
        head = sum(single_exp_sup(family, system, i) for i in range(1, 64))
        rest = scale * tail.coef ** s * base ** 64 / (1.0 - base)
        return head + rest
    # power law: ||e^{f_i}|| ~ coef**s * i**(-power*s)
    expo = tail.power * s
    if expo <= 1.0:
        raise NonSummableError(
            f"derivative family diverges: tail exponent {tail.power}*{s} <= 1"
        )
    n0 = max(enumerate_to, tail.start)
    exact_to = 256
    head = sum(single_exp_sup(family, system, i) for i in range(1, exact_to + 1))
    i = np.arange(exact_to + 1, n0 + 1, dtype=float)
    head += scale * tail.coef ** s * float(np.sum(i ** (-expo)))
    # integral bracket for the remainder; report the midpoint
    up = scale * tail.coef ** s * n0 ** (1.0 - expo) / (expo - 1.0)
    lo = scale * tail.coef ** s * (n0 + 1) ** (1.0 - expo) / (expo - 1.0)
    return head + 0.5 * (up + lo)


def summability_and_holder(family: PotentialFamily, system: IfsSystem,
                           sample_depth: int = 6, *, pairs: int | None = None,
                           holder_order: float | None = None,
                           seed: int = 0) -> SummabilityReport:
    """Summability tail sum plus sampled Hoelder-variation and ratio diagnostics.

    The variation numbers v_n and the ratio constant C are estimated on
    random word/point pairs; sampling can only falsify the family's
    claims, never certify them.
    """
    tail_sum = _tail_exp_sum(family, system)

    if pairs is None:
        pairs = 10_000 // max(sample_depth, 1)  # ~1e4 sampled pairs overall
    if holder_order is None:
        holder_order = -math.log(system.s) if system.s < 1.0 else 0.35

    if isinstance(family, ConstantLogWeights):
        v_n = tuple(0.0 for _ in range(1, sample_depth + 1))
        return SummabilityReport(
            tail_sum,
            HolderCertificate(holder_order, 0.0, v_n),
            RatioConstant(1.0, structural=1.0),
        )

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_sym = system.size or 16
    grid = system.grid
    v_n: list[float] = []
    worst_ratio = 1.0
    for n in range(1, sample_depth + 1):
        v = 0.0
        for _ in range(pairs):
            word = tuple(int(t) + 1 for t in rng.integers(0, n_sym, size=n))
            first = word[0]
            if n == 1:
                pts = grid
            else:
                pts = grid.copy()
                for sym in reversed(word[1:]):
                    pts = system.map(sym).value(pts)
            fv = f_value(family, system, first, pts)
            v = max(v, float(fv.max() - fv.min()) * math.exp(holder_order * (n - 1)))
            s = _birkhoff_grid(family, system, word, grid)
            worst_ratio = max(worst_ratio, float(np.exp(s.max() - s.min())))
        v_n.append(v)
    structural = system.K ** family.s_exp if family.g is None else family.ratio_c
    return SummabilityReport(
        tail_sum,
        HolderCertificate(holder_order, max(v_n), tuple(v_n)),
        RatioConstant(worst_ratio, structural=structural),
    )


# ---------------------------------------------------------------------------
# pressure normalization


def normalize_pressure(family: PotentialFamily, system: IfsSystem, depth: int = 8,
                       truncation: int | None = None) -> PotentialFamily:
    """Return a family whose shift makes the estimated pressure vanish.

    Symbol-constant families have the exact closed form
    shift = log sum_i ||e^{f_i}||.  Otherwise word sums at depths
    {4, 6, 8} are Aitken-extrapolated and the residual spread is kept on
    the returned family as shift_error.
    """
    _tail_exp_sum(family, system)  # raises if non-summable

    if is_symbol_constant(family, system):
        # exact closed form: shift = log sum_i e^{f_i} (unshifted)
        if isinstance(family, ConstantLogWeights) and isinstance(family.weights, GeometricWeights):
            return replace(family, shift=0.0, shift_error=0.0)
        if isinstance(system.alphabet, InfiniteAlphabet):
            u = system.geometric_ratio ** family.s_exp
            if truncation is None:
                total = u / (1.0 - u)
            else:
                total = u * (1.0 - u ** truncation) / (1.0 - u)
            return replace(family, shift=math.log(total), shift_error=0.0)
        raw = [symbol_log_weight(family, system, i) + family.shift
               for i in range(1, system.size + 1)]
        return replace(family, shift=math.log(math.fsum(math.exp(v) for v in raw)),
                       shift_error=0.0)

    from .pressure import pressure_word_sum  # cycle kept local on purpose

    M = truncation or system.size or 20
    depths = sorted({max(2, depth // 2), max(3, 3 * depth // 4), depth})
    vals = [pressure_word_sum(system, family, 1.0, 0.0, n, truncation=M) for n in depths]
    est = vals[-1]
    if len(vals) == 3:
        d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
        if abs(d2 - d1) > 1e-15:
            est = vals[2] - d2 * d2 / (d2 - d1)
    err = abs(est - vals[-1]) + abs(vals[-1] - vals[-2])
    return replace(family, shift=family.shift + est, shift_error=err)
