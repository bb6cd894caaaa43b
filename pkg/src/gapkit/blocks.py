"""Cut an ordered prime stream into gap blocks carrying prefix statistics.

A block covers gap indices ``n0 .. n0 + len - 1`` and stores ``len + 1``
primes, so ``p_n`` and ``p_{n+1}`` are both at hand.  B prefixes are stored
shifted by one: position i holds ``B_{n0+i-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .stats import (
    DEFAULT_EXACT_UNTIL,
    UNIT_ROUNDOFF,
    CompensatedSum,
    RunningAggregate,
    ScaledRational,
)

EXACT_BLOCK = 512


@dataclass
class GapBlock:
    n0: int
    p: np.ndarray
    bf: np.ndarray | None = None
    bf_err: np.ndarray | None = None
    b_exact: list[ScaledRational] | None = None
    s_exact: list[ScaledRational] | None = None
    max_before: int = 0

    def __len__(self) -> int:
        return len(self.p) - 1

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n0, self.n0 + len(self), dtype=np.int64)

    @property
    def p_n(self) -> np.ndarray:
        return self.p[:-1]

    @property
    def p_next(self) -> np.ndarray:
        return self.p[1:]

    @property
    def g(self) -> np.ndarray:
        return np.diff(self.p)

    @property
    def n1(self) -> int:
        """Last gap index in the block."""
        return self.n0 + len(self) - 1

    def select(self, lo: int, hi: int) -> tuple[int, int]:
        """Slice bounds of the block positions whose index lies in [lo, hi]."""
        a = min(max(lo - self.n0, 0), len(self))
        b = min(max(hi - self.n0 + 1, 0), len(self))
        return a, max(a, b)


def _err_bound(values: np.ndarray, first_index: int) -> np.ndarray:
    # B_m is a sum of max(m - 1, 0) terms; see CompensatedSum.err
    u = UNIT_ROUNDOFF
    terms = np.maximum(np.arange(first_index, first_index + len(values), dtype=np.float64) - 1.0, 0.0)
    return (5 * u + 4 * terms * u * u) * np.abs(values)


class BlockFolder:
    """Sequential fold of primes into GapBlocks.

    ``with_b`` turns on the B prefixes; the exact lists are attached while the
    block's indices stay within ``exact_until``.
    """

    def __init__(self, with_b: bool = True, exact_until: int = DEFAULT_EXACT_UNTIL, block_size: int = 1 << 18):
        self.with_b = with_b
        self.agg = RunningAggregate(exact_until=exact_until)
        self.s_exact = ScaledRational()
        self.max_gap = 0
        self.block_size = block_size

    @property
    def exact_until(self) -> int:
        return self.agg.exact_until

    def feed(self, primes: np.ndarray) -> Iterator[GapBlock]:
        """Fold the next run of primes (continuing after ``agg.p_next``)."""
        if not len(primes):
            return
        if self.agg.n == 0 and self.agg.p_next == 2 and int(primes[0]) == 2:
            primes = primes[1:]
        pos = 0
        while pos < len(primes):
            n0 = self.agg.n + 1
            size = self.block_size
            if self.with_b and self.agg.b_exact is not None and n0 <= self.exact_until:
                size = min(size, EXACT_BLOCK, self.exact_until - n0 + 1)
            chunk = primes[pos : pos + size]
            pos += len(chunk)
            yield self._block(n0, np.concatenate(([self.agg.p_next], chunk)).astype(np.int64))

    def _block(self, n0: int, p: np.ndarray) -> GapBlock:
        block = GapBlock(n0, p, max_before=self.max_gap)
        g = np.diff(p)
        if len(g):
            self.max_gap = max(self.max_gap, int(g.max()))
        agg = self.agg
        b_exact = agg.b_exact
        if self.with_b:
            if b_exact is not None and n0 <= agg.exact_until:
                block.b_exact, block.s_exact = self._fold_exact(n0, p)
                b_exact = block.b_exact[-1]
            else:
                b_exact = None
            block.bf = self._fold_float(n0, g)
            block.bf_err = _err_bound(block.bf, n0 - 1)
        else:
            b_exact = None
        self.agg = RunningAggregate(
            n=n0 + len(g) - 1,
            p_next=int(p[-1]),
            b_exact=b_exact,
            b_float=self.agg.b_float,
            exact_until=agg.exact_until,
        )
        return block

    def _fold_exact(self, n0: int, p: np.ndarray) -> tuple[list[ScaledRational], list[ScaledRational]]:
        b = self.agg.b_exact
        s = self.s_exact
        bs, ss = [b], [s]
        pl = p.tolist()
        for i in range(len(pl) - 1):
            n = n0 + i
            if n >= 2:
                b = b.add(pl[i + 1] - pl[i], n - 1)
                s = s.add(pl[i + 1] - 2, n * (n - 1))
            bs.append(b)
            ss.append(s)
        self.s_exact = s
        return bs, ss

    def _fold_float(self, n0: int, g: np.ndarray) -> np.ndarray:
        acc = self.agg.b_float
        s, c, terms = acc.s, acc.c, acc.terms
        out = [s + c]
        n = n0
        for gi in g.tolist():
            if n >= 2:
                x = gi / (n - 1)
                t = s + x
                if abs(s) >= abs(x):
                    c += (s - t) + x
                else:
                    c += (x - t) + s
                s = t
                terms += 1
            out.append(s + c)
            n += 1
        self.agg = RunningAggregate(
            n=self.agg.n, p_next=self.agg.p_next, b_exact=self.agg.b_exact,
            b_float=CompensatedSum(s, c, terms), exact_until=self.agg.exact_until,
        )
        return np.array(out, dtype=np.float64)


def gap_blocks(
    primes: np.ndarray | Iterable[np.ndarray],
    with_b: bool = True,
    exact_until: int = DEFAULT_EXACT_UNTIL,
    upto: int | None = None,
    block_size: int = 1 << 18,
) -> Iterator[GapBlock]:
    """Blocks over gap indices 1..upto (or as far as the primes reach)."""
    folder = BlockFolder(with_b, exact_until, block_size)
    chunks = [primes] if isinstance(primes, np.ndarray) else primes
    taken = 0  # stream starts at p_1 = 2
    for chunk in chunks:
        if upto is not None:
            chunk = chunk[: upto + 1 - taken]
        taken += len(chunk)
        yield from folder.feed(chunk)
        if upto is not None and taken >= upto + 1:
            return
