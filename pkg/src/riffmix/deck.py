"""Decks with repeated labels, and the position maps between them.

A deck is an ordered sequence of labels.  Labels are interned strings;
internally every card is a small integer id so that hot loops can work
on integer tuples and numpy arrays.

A rearrangement of one deck into another is described by a permutation
`p` acting on positions: the card at source position `i` travels to
target position `p(i)`.  The set of permutations that carry deck `d1`
onto deck `d2` card-for-card is what the rest of the library sums over;
its size is the product of factorials of the label counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import CapExceededError, DeckParseError, SignatureMismatchError
from .rng import PURPOSE_TRANSITION_SAMPLE, substream

# ---------------------------------------------------------------------------
# Label interning

_TOKEN_TO_ID: dict[str, int] = {}
_ID_TO_TOKEN: list[str] = []


def label_id(token: str) -> int:
    """Intern `token` and return its integer id."""
    lid = _TOKEN_TO_ID.get(token)
    if lid is None:
        lid = len(_ID_TO_TOKEN)
        _TOKEN_TO_ID[token] = lid
        _ID_TO_TOKEN.append(token)
    return lid


def label_token(lid: int) -> str:
    """Inverse of `label_id`."""
    if not 0 <= lid < len(_ID_TO_TOKEN):
        raise ValueError(
            f"unknown label id {lid}; deck cards must be ids returned by "
            "label_id or produced by parse_deck"
        )
    return _ID_TO_TOKEN[lid]


# ---------------------------------------------------------------------------
# Core types


@dataclass(frozen=True)
class Deck:
    """An ordered sequence of cards, stored as interned label ids."""

    cards: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.cards)

    @cached_property
    def counts(self) -> dict[int, int]:
        """Label id -> multiplicity, keyed in first-appearance order."""
        out: dict[int, int] = {}
        for c in self.cards:
            out[c] = out.get(c, 0) + 1
        return out

    @cached_property
    def signature(self) -> tuple[tuple[int, int], ...]:
        """Sorted (label id, count) pairs; equal iff same multiset of cards."""
        return tuple(sorted(self.counts.items()))

    def tokens(self) -> tuple[str, ...]:
        return tuple(label_token(c) for c in self.cards)

    def __str__(self) -> str:
        return deck_text(self)


@dataclass(frozen=True)
class Permutation:
    """A bijection on positions 1..n, stored as the tuple of images."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.images)
        seen = [False] * n
        for j in self.images:
            if not 1 <= j <= n or seen[j - 1]:
                raise ValueError(f"not a bijection on 1..{n}: {self.images}")
            seen[j - 1] = True

    @property
    def n(self) -> int:
        return len(self.images)

    def __str__(self) -> str:
        return ",".join(str(j) for j in self.images)


@dataclass(frozen=True)
class TransitionSet:
    """All permutations carrying `source` onto `target`, in a fixed order.

    Ordering: labels are taken in first-appearance order of the source
    deck; for each label the bijections from its source slots to its
    (sorted) target positions run in lexicographic order; the first
    label's bijection varies slowest.
    """

    source: Deck
    target: Deck
    cardinality: int
    permutations: tuple[Permutation, ...]

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.permutations)

    def __len__(self) -> int:
        return len(self.permutations)


# ---------------------------------------------------------------------------
# Parsing and printing

_DELIMS = set(",^()")


def parse_deck(text: str) -> Deck:
    """Parse a deck expression.

    Grammar: a comma-separated list of terms; a term is a label token or
    a parenthesized group of tokens, optionally followed by `^count`.
    `1,1,2,2`, `1^2,2^2`, `(R,B)^26`, and `A^3` are all valid.  Spaces
    around delimiters are ignored.  Tokens may not contain commas,
    carets, parentheses, or whitespace.
    """
    cards: list[int] = []
    i = 0
    n = len(text)

    def skip_ws(k: int) -> int:
        while k < n and text[k].isspace():
            k += 1
        return k

    def read_token(k: int) -> tuple[str, int]:
        start = k
        while k < n and not text[k].isspace() and text[k] not in _DELIMS:
            k += 1
        if k == start:
            raise DeckParseError("expected a label token", start)
        return text[start:k], k

    while True:
        i = skip_ws(i)
        group: list[str]
        if i < n and text[i] == "(":
            i = skip_ws(i + 1)
            group = []
            while True:
                tok, i = read_token(i)
                group.append(tok)
                i = skip_ws(i)
                if i < n and text[i] == ",":
                    i = skip_ws(i + 1)
                    continue
                if i < n and text[i] == ")":
                    i += 1
                    break
                raise DeckParseError("expected ',' or ')' in group", i)
        else:
            tok, i = read_token(i)
            group = [tok]
        count = 1
        i = skip_ws(i)
        if i < n and text[i] == "^":
            i = skip_ws(i + 1)
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i == start:
                raise DeckParseError("expected a count after '^'", start)
            count = int(text[start:i])
            if count < 1:
                raise DeckParseError("count must be at least 1", start)
        ids = [label_id(t) for t in group]
        for _ in range(count):
            cards.extend(ids)
        i = skip_ws(i)
        if i == n:
            break
        if text[i] != ",":
            raise DeckParseError(f"unexpected character {text[i]!r}", i)
        i += 1
        if skip_ws(i) == n:
            raise DeckParseError("trailing comma", i - 1)
    if not cards:
        raise DeckParseError("empty deck expression", 0)
    return Deck(tuple(cards))


def deck_text(deck: Deck) -> str:
    """Canonical expression for `deck`: run-length encoded, comma separated."""
    parts: list[str] = []
    i = 0
    cards = deck.cards
    while i < len(cards):
        j = i
        while j < len(cards) and cards[j] == cards[i]:
            j += 1
        tok = label_token(cards[i])
        parts.append(tok if j - i == 1 else f"{tok}^{j - i}")
        i = j
    return ",".join(parts)


# ---------------------------------------------------------------------------
# Permutation algebra


def descents(p: Permutation) -> int:
    """Number of positions i with p(i) > p(i+1)."""
    im = p.images
    return sum(1 for i in range(len(im) - 1) if im[i] > im[i + 1])


def apply(p: Permutation, deck: Deck) -> Deck:
    """Rearrange `deck` by sending the card at position i to position p(i)."""
    if p.n != deck.n:
        raise ValueError(f"length mismatch: permutation {p.n}, deck {deck.n}")
    out = [0] * deck.n
    for i, card in enumerate(deck.cards):
        out[p.images[i] - 1] = card
    return Deck(tuple(out))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * p.n
    for i, j in enumerate(p.images):
        inv[j - 1] = i + 1
    return Permutation(tuple(inv))


def compose(first: Permutation, then: Permutation) -> Permutation:
    """The permutation equivalent to applying `first`, then `then`."""
    if first.n != then.n:
        raise ValueError("length mismatch")
    return Permutation(tuple(then.images[j - 1] for j in first.images))


def identity(n: int) -> Permutation:
    return Permutation(tuple(range(1, n + 1)))


# ---------------------------------------------------------------------------
# Transition sets


def is_transition(p: Permutation, source: Deck, target: Deck) -> bool:
    """Does `p` carry `source` onto `target` card-for-card?"""
    if p.n != source.n or source.n != target.n:
        return False
    cards = source.cards
    tgt = target.cards
    return all(cards[i] == tgt[p.images[i] - 1] for i in range(p.n))


def _check_same_multiset(source: Deck, target: Deck) -> None:
    if source.signature != target.signature:
        raise SignatureMismatchError(
            f"decks do not hold the same cards: {deck_text(source)} vs {deck_text(target)}"
        )


def transition_cardinality(source: Deck, target: Deck) -> int:
    """Number of permutations carrying `source` onto `target`."""
    _check_same_multiset(source, target)
    out = 1
    for c in source.counts.values():
        out *= math.factorial(c)
    return out


def label_positions(deck: Deck) -> dict[int, tuple[int, ...]]:
    """Label id -> sorted 1-based positions, keyed in first-appearance order."""
    out: dict[int, list[int]] = {}
    for i, c in enumerate(deck.cards):
        out.setdefault(c, []).append(i + 1)
    return {c: tuple(v) for c, v in out.items()}


def enumerate_transitions(
    source: Deck, target: Deck, cap: int = 10**8
) -> TransitionSet:
    """Materialize every permutation carrying `source` onto `target`.

    Raises `CapExceededError` when the transition count exceeds `cap`.
    The ordering is documented on `TransitionSet`.
    """
    card = transition_cardinality(source, target)
    if card > cap:
        raise CapExceededError(
            f"transition set has {card} elements, above the cap of {cap}"
        )
    src_pos = label_positions(source)
    tgt_pos = label_positions(target)
    labels = list(src_pos)
    # For each label, all bijections from its source slots (in order) to
    # its target positions, as image tuples in lexicographic order.
    per_label = [
        sorted(itertools.permutations(tgt_pos[lab])) for lab in labels
    ]
    perms: list[Permutation] = []
    n = source.n
    for choice in itertools.product(*per_label):
        images = [0] * n
        for lab, assignment in zip(labels, choice):
            for slot, j in zip(src_pos[lab], assignment):
                images[slot - 1] = j
        perms.append(Permutation(tuple(images)))
    return TransitionSet(source, target, card, tuple(perms))


def sample_uniform_transition(
    source: Deck, target: Deck, gen: np.random.Generator | int
) -> Permutation:
    """Draw uniformly from the permutations carrying `source` onto `target`."""
    _check_same_multiset(source, target)
    if isinstance(gen, (int, np.integer)):
        gen = substream(int(gen), PURPOSE_TRANSITION_SAMPLE)
    src_pos = label_positions(source)
    tgt_pos = label_positions(target)
    images = [0] * source.n
    for lab, slots in src_pos.items():
        targets = tgt_pos[lab]
        order = gen.permutation(len(targets))
        for slot, t in zip(slots, order):
            images[slot - 1] = targets[t]
    return Permutation(tuple(images))


# ---------------------------------------------------------------------------
# Arrangements of a multiset


def arrangement_count(deck: Deck) -> int:
    """Number of distinct orderings of the deck's cards."""
    out = math.factorial(deck.n)
    for c in deck.counts.values():
        out //= math.factorial(c)
    return out


def enumerate_arrangements(deck: Deck, cap: int = 10**7) -> Iterator[Deck]:
    """Yield every distinct ordering of the deck's cards.

    Order is lexicographic in label ids.  Raises `CapExceededError` when
    the arrangement count exceeds `cap`.
    """
    total = arrangement_count(deck)
    if total > cap:
        raise CapExceededError(
            f"deck has {total} arrangements, above the cap of {cap}"
        )

    def rec(counts: dict[int, int], prefix: list[int], left: int):
        if left == 0:
            yield Deck(tuple(prefix))
            return
        for lab in sorted(counts):
            if counts[lab] == 0:
                continue
            counts[lab] -= 1
            prefix.append(lab)
            yield from rec(counts, prefix, left - 1)
            prefix.pop()
            counts[lab] += 1

    yield from rec(dict(deck.counts), [], deck.n)


def sample_uniform_rearrangement(
    deck: Deck, gen: np.random.Generator | int
) -> Deck:
    """Draw uniformly from the distinct orderings of the deck's cards."""
    if isinstance(gen, (int, np.integer)):
        gen = substream(int(gen), PURPOSE_TRANSITION_SAMPLE)
    cards = np.asarray(deck.cards, dtype=np.int64)
    return Deck(tuple(int(c) for c in cards[gen.permutation(deck.n)]))
