"""Distance from uniform after shuffling, for full and partial orderings.

The quantity of interest is the total variation distance between the
deck distribution after an `a`-way shuffle and the uniform distribution
on all arrangements.  Only terms where uniform exceeds the shuffle
probability contribute:

    TVD = sum over arrangements X of max(0, 1/N - P(X))

where N is the number of distinct arrangements.  A scenario fixes one
side of the transition: either the starting order is known and the
distribution is over results (fixed source), or only the chance of
reaching one distinguished order matters (fixed target, by symmetry of
the sum over the other side).

For decks of distinct cards the sum collapses to a closed form over
descent counts.  For small repeated-label decks it is summed exactly.
Beyond that, sampling arrangements uniformly gives the estimator

    Y = (1/k) * sum over k sampled arrangements of max(0, 1 - N * P(X))

which is unbiased and concentrates at rate 1/sqrt(k): the chance that
|Y - TVD| exceeds alpha/sqrt(k) is below 4/alpha^4.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .approx import descent_moments, normal_coefficient_estimate, tail_extrapolate
from .deck import (
    Deck,
    arrangement_count,
    deck_text,
    enumerate_arrangements,
    parse_deck,
    sample_uniform_rearrangement,
    transition_cardinality,
)
from .descentpoly import (
    descent_polynomial_family,
    eulerian_row,
    exact_descent_polynomial,
    mc_descent_histogram,
    probability_from_coefficients,
)
from .errors import CapExceededError
from .rng import PURPOSE_TVD, STREAMS, KahanSum, quotas, substream

# Deviation bounds for the sampling estimator: (alpha, P(exceed) bound).
ALPHA_TABLE: tuple[tuple[float, float], ...] = (
    (math.sqrt(10.0), 0.04),
    (10.0 * math.sqrt(10.0), 4e-6),
)

FIXED_SOURCE = "fixed-source"
FIXED_TARGET = "fixed-target"


@dataclass(frozen=True)
class Scenario:
    """A named mixing question: one anchored deck plus which side it anchors."""

    name: str
    kind: str
    anchor: Deck

    def __post_init__(self) -> None:
        if self.kind not in (FIXED_SOURCE, FIXED_TARGET):
            raise ValueError(f"unknown scenario kind {self.kind!r}")

    @property
    def arrangements(self) -> int:
        return arrangement_count(self.anchor)

    def pair(self, counterpart: Deck) -> tuple[Deck, Deck]:
        """(source, target) for one sampled counterpart arrangement."""
        if self.kind == FIXED_SOURCE:
            return self.anchor, counterpart
        return counterpart, self.anchor


_REGISTRY: dict[str, tuple[str, str]] = {
    "BayerDiaconis": (",".join(str(i) for i in range(1, 53)), FIXED_SOURCE),
    "Blackjack1": (",".join(f"{v}^4" for v in range(1, 14)), FIXED_SOURCE),
    "Blackjack2": (
        "(" + ",".join(str(v) for v in range(1, 14)) + ")^4",
        FIXED_SOURCE,
    ),
    "Bridge1": ("N^13,E^13,S^13,W^13", FIXED_TARGET),
    "Bridge2": ("(N,E,S,W)^13", FIXED_TARGET),
    "RedBlack1": ("R^26,B^26", FIXED_SOURCE),
    "RedBlack2": ("(R,B)^26", FIXED_SOURCE),
    "AliceBob1": ("R^26,B^26", FIXED_TARGET),
    "AliceBob2": ("(R,B)^26", FIXED_TARGET),
}


def scenario_names() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def scenario(name: str) -> Scenario:
    """Look up a named scenario (case-insensitive)."""
    for key, (expr, kind) in _REGISTRY.items():
        if key.lower() == name.lower():
            return Scenario(key, kind, parse_deck(expr))
    raise KeyError(
        f"unknown scenario {name!r}; known: {', '.join(_REGISTRY)}"
    )


def custom_scenario(deck: Deck | str, kind: str, name: str | None = None) -> Scenario:
    if isinstance(deck, str):
        deck = parse_deck(deck)
    # Deck expressions contain commas; keep generated names CSV-safe.
    default = "custom-" + deck_text(deck).replace(",", "+")
    return Scenario(name or default, kind, deck)


# ---------------------------------------------------------------------------
# Exact routes


def riffles_to_packets(shuffles: int) -> int:
    """Packet count equivalent to `shuffles` successive riffles."""
    if shuffles < 0:
        raise ValueError("shuffle count must be nonnegative")
    return 2**shuffles


def bayer_diaconis_tvd(n: int, shuffles: int) -> Fraction:
    """Exact distance from uniform for `n` distinct cards after
    `shuffles` riffles, via the closed form over descent counts."""
    if n < 1:
        raise ValueError("need at least one card")
    a = riffles_to_packets(shuffles)
    row = eulerian_row(n)
    fact = math.factorial(n)
    denom = a**n
    total = Fraction(0)
    uniform = Fraction(1, fact)
    for d in range(n):
        p = Fraction(math.comb(a + n - d - 1, n), denom)
        if uniform > p:
            total += row[d] * (uniform - p)
    return total


def exact_tvd_small(
    s: Scenario,
    a: int,
    arrangement_cap: int = 10**6,
    transition_cap: int = 10**8,
) -> Fraction:
    """Sum the distance exactly over every arrangement.

    Uses a single permutation sweep when the anchor is small enough,
    falling back to per-arrangement enumeration.  Raises
    `CapExceededError` when the arrangement count exceeds
    `arrangement_cap` or a transition set exceeds `transition_cap`.
    """
    if a < 1:
        raise ValueError("packet count must be at least 1")
    count = s.arrangements
    if count > arrangement_cap:
        raise CapExceededError(
            f"scenario has {count} arrangements, above the cap of {arrangement_cap}"
        )
    uniform = Fraction(1, count)
    total = Fraction(0)
    n = s.anchor.n
    role = "source" if s.kind == FIXED_SOURCE else "target"
    if n <= 10 and math.factorial(n) <= transition_cap:
        family = descent_polynomial_family(s.anchor, role=role, cap=transition_cap)
        if len(family.codes) != count:
            raise ArithmeticError(
                "sweep row count disagrees with arrangement count; this is a bug"
            )
        denom = a**n
        for r in range(len(family.codes)):
            num = 0
            for d in range(n):
                c = int(family.counts[r, d])
                if c:
                    num += c * math.comb(a + n - d - 1, n)
            p = Fraction(num, denom)
            if uniform > p:
                total += uniform - p
        return total
    for counterpart in enumerate_arrangements(s.anchor, cap=arrangement_cap):
        d1, d2 = s.pair(counterpart)
        p = exact_descent_polynomial(d1, d2, cap=transition_cap).probability(a)
        if uniform > p:
            total += uniform - p
    return total


# ---------------------------------------------------------------------------
# Sampling estimator


@dataclass(frozen=True)
class TvdEstimate:
    """Result of the sampling estimator.

    `alpha_bounds` lists (alpha, halfwidth, chance) rows: the estimate is
    within `halfwidth` of the true distance except with the stated chance.
    """

    scenario: str
    method: str
    a: int
    value: float
    k: int
    seed: int
    alpha_bounds: tuple[tuple[float, float, float], ...]
    hist_samples: int | None = None


def _alpha_bounds(k: int) -> tuple[tuple[float, float, float], ...]:
    return tuple(
        (alpha, alpha / math.sqrt(k), bound) for alpha, bound in ALPHA_TABLE
    )


def _deck_fingerprint(deck: Deck) -> int:
    digest = hashlib.sha256(deck_text(deck).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class _ExactBackend:
    """Per-arrangement terms from exact transition polynomials."""

    name = "mc-exact-backend"

    def __init__(self, s: Scenario, a: int, transition_cap: int):
        self.s = s
        self.a = a
        self.cap = transition_cap
        self.uniform_scale = s.arrangements

    def term(self, counterpart: Deck) -> float:
        d1, d2 = self.s.pair(counterpart)
        p = exact_descent_polynomial(d1, d2, cap=self.cap).probability(self.a)
        val = 1 - self.uniform_scale * p
        return float(val) if val > 0 else 0.0


class _HistogramBackend:
    """Per-arrangement terms from sampled histograms, optionally patched
    with a tail fit where the histogram is unreliable."""

    name = "mc-histogram"

    def __init__(
        self,
        s: Scenario,
        a: int,
        seed: int,
        hist_samples: int,
        extrapolate: bool,
        fit_degree: int,
        min_count: int,
        window: tuple[int, int] | None,
        cache_dir: str | Path | None,
        threads: int,
    ):
        self.s = s
        self.a = a
        self.seed = seed
        self.hist_samples = hist_samples
        self.extrapolate = extrapolate
        self.fit_degree = fit_degree
        self.min_count = min_count
        self.window = window
        self.cache_dir = cache_dir
        self.threads = threads

    def term(self, counterpart: Deck) -> float:
        d1, d2 = self.s.pair(counterpart)
        hist_seed = (_deck_fingerprint(counterpart) ^ self.seed) & (
            (1 << 63) - 1
        )
        hist = mc_descent_histogram(
            d1,
            d2,
            samples=self.hist_samples,
            seed=hist_seed,
            cache_dir=self.cache_dir,
            threads=self.threads,
        )
        n = hist.n
        estimates = hist.coefficient_estimates()
        if self.extrapolate:
            fit = tail_extrapolate(
                hist,
                degree=self.fit_degree,
                min_count=self.min_count,
                window=self.window,
            )
            lo, hi = fit.window
            p = 0.0
            denom = float(self.a) ** n
            for d in range(n):
                solid = lo <= d <= hi or hist.counts[d] >= self.min_count
                c = float(estimates[d]) if solid else fit.predict(d)
                if c:
                    p += c * math.comb(self.a + n - d - 1, n) / denom
            val = 1 - self.s.arrangements * p
            return val if val > 0 else 0.0
        p_exact = probability_from_coefficients(
            [e for e in estimates], self.a
        )
        val = 1 - self.s.arrangements * p_exact
        return float(val) if val > 0 else 0.0


class _NormalBackend:
    """Per-arrangement terms from moment-matched normal curves."""

    name = "normal"

    def __init__(self, s: Scenario, a: int):
        self.s = s
        self.a = a

    def term(self, counterpart: Deck) -> float:
        d1, d2 = self.s.pair(counterpart)
        moments = descent_moments(d1, d2)
        m = transition_cardinality(d1, d2)
        n = d1.n
        if moments.variance == 0:
            d = int(moments.mean)
            if moments.mean != d:
                raise ArithmeticError(
                    "deterministic descent count is not an integer; this is a bug"
                )
            p = Fraction(m * math.comb(self.a + n - d - 1, n), self.a**n)
            val = 1 - self.s.arrangements * p
            return float(val) if val > 0 else 0.0
        denom = float(self.a) ** n
        p = 0.0
        for d in range(n):
            c = normal_coefficient_estimate(d, moments, m)
            if c:
                p += c * math.comb(self.a + n - d - 1, n) / denom
        val = 1 - self.s.arrangements * p
        return val if val > 0 else 0.0


BACKENDS = ("exact-oracle", "mc-histogram", "normal-approx")


def mc_tvd(
    s: Scenario,
    a: int,
    k: int,
    seed: int,
    backend: str = "exact-oracle",
    transition_cap: int = 10**8,
    hist_samples: int = 10**6,
    extrapolate: bool = False,
    fit_degree: int = 4,
    min_count: int = 400,
    window: tuple[int, int] | None = None,
    cache_dir: str | Path | None = None,
    threads: int = 1,
) -> TvdEstimate:
    """Estimate the distance from uniform by sampling `k` arrangements.

    The estimator averages max(0, 1 - N * P(arrangement)) over uniform
    arrangement draws, where P comes from the chosen backend:

    - "exact-oracle": exact transition polynomials (small decks only);
    - "mc-histogram": sampled histograms of size `hist_samples`, with an
      optional log-scale tail fit when `extrapolate` is set;
    - "normal-approx": moment-matched normal curves.

    Sampling is split over fixed logical streams and merged in stream
    order, so the value depends only on the arguments, not on `threads`.
    Repeated arrangements reuse their first term, and histogram seeds are
    derived from the arrangement itself, so reuse is consistent.
    """
    if k < 1:
        raise ValueError("sample count must be positive")
    if backend == "exact-oracle":
        impl = _ExactBackend(s, a, transition_cap)
    elif backend == "mc-histogram":
        impl = _HistogramBackend(
            s,
            a,
            seed,
            hist_samples,
            extrapolate,
            fit_degree,
            min_count,
            window,
            cache_dir,
            threads,
        )
    elif backend == "normal-approx":
        impl = _NormalBackend(s, a)
    else:
        raise ValueError(f"unknown backend {backend!r}; known: {BACKENDS}")
    memo: dict[tuple[int, ...], float] = {}

    def stream_sum(idx: int, quota: int) -> KahanSum:
        acc = KahanSum()
        if quota == 0:
            return acc
        gen = substream(seed, PURPOSE_TVD, idx)
        for _ in range(quota):
            counterpart = sample_uniform_rearrangement(s.anchor, gen)
            key = counterpart.cards
            val = memo.get(key)
            if val is None:
                val = impl.term(counterpart)
                memo[key] = val
            acc.add(val)
        return acc

    per_stream = quotas(k, STREAMS)
    sums: list[KahanSum]
    if threads > 1 and backend != "mc-histogram":
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sums = list(pool.map(stream_sum, range(STREAMS), per_stream))
    else:
        sums = [stream_sum(i, q) for i, q in enumerate(per_stream)]
    total = KahanSum()
    for part in sums:
        total.add(part.total)
    return TvdEstimate(
        scenario=s.name,
        method=impl.name,
        a=a,
        value=total.total / k,
        k=k,
        seed=seed,
        alpha_bounds=_alpha_bounds(k),
        hist_samples=hist_samples if backend == "mc-histogram" else None,
    )
