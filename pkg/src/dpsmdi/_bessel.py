"""Internal modified Bessel function of the first kind, order zero.

The production key-rate path must not depend on an external
special-function library, and the interference parameters it sees are
small (x well below 1 in any realistic sweep), so a plain power series
carries the whole working range. The large-argument expansion is kept
so the function stays accurate if someone feeds it big arguments.
"""

from __future__ import annotations

import math

_SERIES_LIMIT = 20.0


def modified_bessel_i0(x: float) -> float:
    """I0(x) to near machine precision for any finite real x.

    Power series (all terms positive, no cancellation) up to |x| = 20;
    beyond that the asymptotic expansion e^x/sqrt(2 pi x) * sum, truncated
    at its smallest term, whose size is far below 1e-12 relative there.
    """
    ax = abs(x)
    if math.isnan(ax):
        return ax
    if ax <= _SERIES_LIMIT:
        quarter_sq = 0.25 * ax * ax
        term = 1.0
        total = 1.0
        k = 1
        while True:
            term *= quarter_sq / (k * k)
            total += term
            if term <= total * 1e-17:
                return total
            k += 1
    # a_k = ((2k-1)!!)^2 / (k! (8x)^k), summed while decreasing
    scale = math.exp(ax) / math.sqrt(2.0 * math.pi * ax)
    term = 1.0
    total = 1.0
    k = 1
    while True:
        factor = (2 * k - 1) ** 2 / (8.0 * k * ax)
        if factor >= 1.0:  # series started diverging: stop at smallest term
            return scale * total
        term *= factor
        total += term
        if term <= total * 1e-17:
            return scale * total
        k += 1
