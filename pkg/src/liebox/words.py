"""Words, permutations and the sign coefficients driving commutator expansions.

A word is a tuple of letters from ``{1..m}``; a permutation of ``{1..l}`` is a
tuple of 1-based images ``p`` acting on words by ``apply_perm(p, w)[j] =
w[p[j]-1]``.  The coefficient ``pi(p)`` is defined by the recursion that keeps
a permutation only when it fixes the first or the last position at every
level, with a sign flip whenever the last position is the fixed one.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import permutations

DEFAULT_MAX_ORDER = 8

Word = tuple
Perm = tuple


def check_word(w, alphabet=None):
    """Validate a word; returns it as a tuple of ints."""
    w = tuple(int(a) for a in w)
    if not w:
        raise ValueError("word must be nonempty")
    if any(a < 1 for a in w):
        raise ValueError(f"letters must be >= 1, got {w}")
    if alphabet is not None and any(a > alphabet for a in w):
        raise ValueError(f"letter out of alphabet range 1..{alphabet}: {w}")
    return w


def check_perm(p):
    """Validate a permutation given as a tuple of 1-based images."""
    p = tuple(int(a) for a in p)
    if sorted(p) != list(range(1, len(p) + 1)):
        raise ValueError(f"not a permutation of 1..{len(p)}: {p}")
    return p


def apply_perm(p, w):
    """Apply permutation ``p`` to word ``w``: result j-th letter is w[p_j - 1]."""
    if len(p) != len(w):
        raise ValueError(f"length mismatch: |perm|={len(p)}, |word|={len(w)}")
    return tuple(w[i - 1] for i in p)


@lru_cache(maxsize=None)
def pi_coefficient(sigma, max_order=DEFAULT_MAX_ORDER):
    """Coefficient in {-1, 0, +1} of the permutation ``sigma``.

    Recursion on the order l: value 1 at l=1; for l > 1 the permutation must
    fix position 1 (sign kept) or position l (sign flipped), and recurses on
    the remaining positions; every other permutation gets 0.
    """
    sigma = check_perm(sigma)
    ell = len(sigma)
    if not 1 <= ell <= max_order:
        raise ValueError(f"order {ell} outside 1..{max_order}")
    if ell == 1:
        return 1
    rest_args = {"max_order": max_order} if max_order != DEFAULT_MAX_ORDER else {}
    if sigma[0] == 1:
        return pi_coefficient(tuple(a - 1 for a in sigma[1:]), **rest_args)
    if sigma[-1] == 1:
        return -pi_coefficient(tuple(a - 1 for a in sigma[:-1]), **rest_args)
    return 0


@lru_cache(maxsize=None)
def pi_support(ell, max_order=DEFAULT_MAX_ORDER):
    """All permutations with nonzero coefficient, as ``((perm, sign), ...)``.

    Built by the same recursion instead of scanning all l! permutations, so
    the result has exactly 2**(l-1) entries.  Order is fixed by the recursion
    (first-position branch before last-position branch), deterministically.
    """
    if not 1 <= ell <= max_order:
        raise ValueError(f"order {ell} outside 1..{max_order}")
    if ell == 1:
        return (((1,), 1),)
    out = []
    for p, s in pi_support(ell - 1, max_order):
        shifted = tuple(a + 1 for a in p)
        out.append(((1,) + shifted, s))
        out.append((shifted + (1,), -s))
    return tuple(out)


class PiTable:
    """Complete coefficient table for one order, in lexicographic perm order."""

    def __init__(self, ell, max_order=DEFAULT_MAX_ORDER):
        if not 1 <= ell <= max_order:
            raise ValueError(f"order {ell} outside 1..{max_order}")
        self.order = ell
        support = dict(pi_support(ell, max_order))
        self.entries = {
            p: support.get(p, 0) for p in permutations(range(1, ell + 1))
        }

    @property
    def nonzero(self):
        return {p: v for p, v in self.entries.items() if v != 0}

    def __getitem__(self, perm):
        return self.entries[check_perm(perm)]

    def __len__(self):
        return len(self.entries)

    def rows(self):
        """(permutation string, coefficient) rows for report emission."""
        return [
            ("".join(str(a) for a in p), v) for p, v in self.entries.items()
        ]


def pi_table(ell, max_order=DEFAULT_MAX_ORDER):
    return PiTable(ell, max_order)


def pi_weighted_words(w, max_order=DEFAULT_MAX_ORDER):
    """Pairs (permuted word, sign) over the nonzero support for ``w``."""
    w = check_word(w)
    return [(apply_perm(p, w), s) for p, s in pi_support(len(w), max_order)]


def reversal_sign(ell):
    """Sign relating a coefficient to the one of the reversed permutation."""
    return (-1) ** (ell + 1)


def as_fraction(x):
    """Parse exact rational input: Fraction, int, or 'a/b' string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected exact rational, got {type(x).__name__}")
