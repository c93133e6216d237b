"""Order-book snapshots and one-sided liquidity profiles on the tick grid."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CrossedBook,
    DegenerateProjection,
    EmptySide,
    MixedK,
    MixedSides,
    ValidationError,
)

SIDES = ("bid", "ask")
DEFAULT_K = 50
DEFAULT_T = 10


def _side(side):
    if side not in SIDES:
        raise ValidationError(f"side must be one of {SIDES}, got {side!r}")
    return side


@dataclass(frozen=True)
class BookSnapshot:
    """One observation instant after venue aggregation.

    ``bids`` are sorted by descending price, ``asks`` by ascending price;
    each level is a ``(price, size)`` pair.
    """

    timestamp: int
    bids: tuple
    asks: tuple
    tick_size: float

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple((float(p), float(s)) for p, s in self.bids))
        object.__setattr__(self, "asks", tuple((float(p), float(s)) for p, s in self.asks))
        if not (np.isfinite(self.tick_size) and self.tick_size > 0):
            raise ValidationError("tick_size must be positive")
        for name, levels, sign in (("bids", self.bids, -1), ("asks", self.asks, 1)):
            prices = [p for p, _ in levels]
            sizes = [s for _, s in levels]
            if any(not np.isfinite(s) or s < 0 for s in sizes):
                raise ValidationError(f"{name}: sizes must be finite and >= 0")
            if any(not np.isfinite(p) for p in prices):
                raise ValidationError(f"{name}: prices must be finite")
            steps = np.diff(prices) * sign
            if np.any(steps <= 0):
                raise ValidationError(f"{name}: prices must be strictly monotone")
        if self.bids and self.asks and self.bids[0][0] >= self.asks[0][0]:
            raise CrossedBook(self.timestamp,
                              f"best bid {self.bids[0][0]} >= best ask {self.asks[0][0]}")

    def levels(self, side):
        return self.bids if _side(side) == "bid" else self.asks


@dataclass
class SideProfile:
    """Liquidity ``q[x-1]`` at tick distance ``x = 1..K``."""

    side: str
    q: np.ndarray

    @property
    def K(self):
        return self.q.size


@dataclass
class CumulativeProfile:
    side: str
    S: np.ndarray

    @property
    def K(self):
        return self.S.size


def mid_price(snap):
    if not snap.bids or not snap.asks:
        raise EmptySide(f"snapshot {snap.timestamp} has an empty side")
    return 0.5 * (snap.bids[0][0] + snap.asks[0][0])


def imbalance_split(values, weights):
    """Index ``k`` of the split between sorted ``values[k]`` and ``values[k+1]``
    minimising |weight below - weight above|; ties go to the highest split.

    ``values`` must be sorted and distinct.
    """
    total = weights.sum()
    below = np.cumsum(weights)[:-1]
    imbalance = np.abs(2.0 * below - total)
    best = imbalance.min()
    return int(np.flatnonzero(imbalance <= best)[-1])


def imbalance_mid(snap):
    """Point where the signed size imbalance of the book changes sign.

    Diagnostic companion of :func:`mid_price`; levels of both sides are pooled
    and the split is placed between consecutive price levels.
    """
    levels = sorted(snap.bids + snap.asks)
    if len(levels) < 2:
        raise EmptySide(f"snapshot {snap.timestamp} has fewer than two levels")
    prices = np.array([p for p, _ in levels])
    sizes = np.array([s for _, s in levels])
    k = imbalance_split(prices, sizes)
    return 0.5 * (prices[k] + prices[k + 1])


def projection_to_snapshot(proj, tick_size, size_rule="unit", degree=None, timestamp=0):
    """Synthetic book from projected coordinates.

    Vertices are pooled by coordinate value with size 1 (``unit``) or their
    degree (``degree``).  The bid/ask boundary is the signed-imbalance split of
    the pooled sizes, so the best bid and best ask are the coordinates that
    bracket it and the book's mid is their midpoint.  Prices are the
    coordinates themselves; tick rounding happens in :func:`bin_side`.
    """
    coords = np.asarray(proj.coords if hasattr(proj, "coords") else proj, dtype=float)
    if size_rule == "unit":
        w = np.ones_like(coords)
    elif size_rule == "degree":
        if degree is None:
            raise ValidationError("size_rule='degree' needs vertex degrees")
        w = np.asarray(degree, dtype=float)
    else:
        raise ValidationError(f"unknown size_rule {size_rule!r}")
    values, inverse = np.unique(coords, return_inverse=True)
    if values.size < 2:
        raise DegenerateProjection("all projected coordinates are equal")
    sizes = np.bincount(inverse, weights=w, minlength=values.size)
    k = imbalance_split(values, sizes)
    bids = list(zip(values[k::-1], sizes[k::-1]))
    asks = list(zip(values[k + 1:], sizes[k + 1:]))
    return BookSnapshot(int(timestamp), tuple(bids), tuple(asks), float(tick_size))


def tick_distance(price, mid, tick_size):
    """Integer tick distance, rounding halves to even."""
    return np.rint(np.abs(np.asarray(price, dtype=float) - mid) / tick_size).astype(np.int64)


def bin_side(snap, side, K=DEFAULT_K, mid=None):
    """One-sided profile on bins ``x = 1..K``; bin 0 and bins beyond K are dropped."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    levels = snap.levels(side)
    q = np.zeros(int(K))
    if not levels:
        return SideProfile(side, q)
    if mid is None:
        mid = mid_price(snap)
    prices = np.array([p for p, _ in levels])
    sizes = np.array([s for _, s in levels])
    x = tick_distance(prices, mid, snap.tick_size)
    keep = (x >= 1) & (x <= K) & (sizes > 0)
    q += np.bincount(x[keep] - 1, weights=sizes[keep], minlength=int(K))
    return SideProfile(side, q)


def cumulate(profile):
    return CumulativeProfile(profile.side, np.cumsum(profile.q))


def difference(cum):
    """Inverse of :func:`cumulate`."""
    return SideProfile(cum.side, np.diff(cum.S, prepend=0.0))


def _check_family(profiles, attr):
    if not profiles:
        raise ValidationError("need at least one profile")
    sides = {p.side for p in profiles}
    if len(sides) > 1:
        raise MixedSides(f"profiles mix sides {sorted(sides)}")
    ks = {getattr(p, attr).size for p in profiles}
    if len(ks) > 1:
        raise MixedK(f"profiles mix lengths {sorted(ks)}")


def window_average(profiles):
    """Element-wise mean of the profiles of one window.

    Works for both cumulative and binned profiles and returns the same type
    as its input.
    """
    profiles = list(profiles)
    attr = "S" if isinstance(profiles[0], CumulativeProfile) else "q"
    _check_family(profiles, attr)
    mean = np.mean([getattr(p, attr) for p in profiles], axis=0)
    return type(profiles[0])(profiles[0].side, mean)


def split_windows(items, T=DEFAULT_T):
    """Consecutive chunks of ``T`` items; the last chunk may be shorter."""
    if T < 1:
        raise ValidationError("T must be >= 1")
    items = list(items)
    return [items[k:k + T] for k in range(0, len(items), T)]


def detect_plateau(cum, min_run=2, atol=0.0):
    """Maximal runs of zero increments in a cumulative profile.

    Returns ``(start, length)`` pairs where ``start`` is the 0-based index of
    the first entry of ``S`` equal to its predecessor and ``length`` counts the
    zero increments in the run.
    """
    S = cum.S if hasattr(cum, "S") else np.asarray(cum, dtype=float)
    flat = np.abs(np.diff(S)) <= atol
    runs = []
    k = 0
    while k < flat.size:
        if flat[k]:
            start = k
            while k < flat.size and flat[k]:
                k += 1
            if k - start >= min_run:
                runs.append((start + 1, k - start))
        else:
            k += 1
    return runs


def write_profile_csv(path, q, S):
    rows = ["x,q,S\n"] + [f"{x},{qv:.17g},{sv:.17g}\n"
                          for x, (qv, sv) in enumerate(zip(q, S), start=1)]
    Path(path).write_text("".join(rows))
