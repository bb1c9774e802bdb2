"""Words in the surface group generators.

Letters are small integers ``0..7``.  Code ``k`` for ``k < 4`` is a
generator and ``k + 4`` its inverse, so ``inverse(k) == (k + 4) % 8``.
Generator ``k`` is also the side-pairing that carries the fundamental
octagon across side ``k``, which is why geodesic tracking can emit
letters directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

LABELS = ("a1", "b1", "a2", "b2", "A1", "B1", "A2", "B2")
GENERATORS = LABELS[:4]
_LABEL_TO_CODE = {label: code for code, label in enumerate(LABELS)}
_TOKEN = re.compile(r"\s*([abAB])([12])(\^-1)?\s*")


def inverse_letter(code: int) -> int:
    return (code + 4) % 8


def free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for c in letters:
        if out and out[-1] == inverse_letter(c):
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def is_reduced(letters: Sequence[int]) -> bool:
    return all(letters[i + 1] != inverse_letter(letters[i]) for i in range(len(letters) - 1))


def is_cyclically_reduced(letters: Sequence[int]) -> bool:
    if not is_reduced(letters):
        return False
    return len(letters) < 2 or letters[0] != inverse_letter(letters[-1])


def cyclic_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    w = free_reduce(letters)
    lo, hi = 0, len(w)
    while hi - lo > 1 and w[lo] == inverse_letter(w[hi - 1]):
        lo += 1
        hi -= 1
    return w[lo:hi]


def min_rotation(letters: Sequence[int]) -> tuple[int, ...]:
    """Lexicographically smallest cyclic rotation."""
    w = tuple(letters)
    if not w:
        return w
    return min(w[k:] + w[:k] for k in range(len(w)))


@dataclass(frozen=True)
class Word:
    """A freely reduced word over ``a1, b1, a2, b2`` and their inverses.

    Construction reduces the letters, so ``Word((0, 4))`` is the empty word.
    """

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(c) for c in self.letters)
        if any(c < 0 or c > 7 for c in letters):
            raise ValueError(f"letter codes must lie in 0..7, got {letters}")
        object.__setattr__(self, "letters", free_reduce(letters))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse ``"a1 b1 A1 B1"``, ``"a1b1A1B1"`` or ``"a1 b1^-1"``."""
        text = text.strip()
        if text in ("", "e", "1"):
            return cls()
        pos = 0
        letters = []
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ValueError(f"cannot parse word {text!r} at position {pos}")
            label = m.group(1) + m.group(2)
            code = _LABEL_TO_CODE[label]
            if m.group(3):
                code = inverse_letter(code)
            letters.append(code)
            pos = m.end()
        return cls(tuple(letters))

    def __str__(self) -> str:
        return " ".join(LABELS[c] for c in self.letters) if self.letters else "e"

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.letters * n)

    def inverse(self) -> "Word":
        return Word(tuple(inverse_letter(c) for c in reversed(self.letters)))

    def conjugate(self, by: "Word") -> "Word":
        """``by * self * by^-1``."""
        return by * self * by.inverse()

    def cyclic_reduction(self) -> "Word":
        return Word(cyclic_reduce(self.letters))

    def canonical(self) -> "Word":
        """Minimal rotation of the cyclic reduction; a free-group conjugacy invariant."""
        return Word(min_rotation(cyclic_reduce(self.letters)))


def commutator(u: Word, v: Word) -> Word:
    return u * v * u.inverse() * v.inverse()


def reduced_words(max_length: int, min_length: int = 1) -> Iterator[Word]:
    """Depth-first enumeration of freely reduced words."""

    def walk(prefix: tuple[int, ...]):
        if len(prefix) >= min_length:
            yield Word(prefix)
        if len(prefix) == max_length:
            return
        for c in range(8):
            if prefix and c == inverse_letter(prefix[-1]):
                continue
            yield from walk(prefix + (c,))

    if min_length == 0:
        yield Word()
    for c in range(8):
        if max_length >= 1:
            yield from walk((c,))


# Defining relation of the genus-two group for the octagon pairing used here:
# its image under any representation is the identity.
RELATOR = Word.parse("a1 b2 A2 b1 A1 B2 a2 B1")

# A symplectic basis whose commutator product is exactly RELATOR.
# alpha1/beta1 span one handle, alpha2/beta2 the other; [a1, b2] separates them.
SYMPLECTIC_BASIS = (
    Word.parse("a1"),
    Word.parse("b2"),
    Word.parse("b2 a1 B1"),
    Word.parse("b1 A2"),
)
SEPARATING_CURVE = commutator(SYMPLECTIC_BASIS[0], SYMPLECTIC_BASIS[1])
