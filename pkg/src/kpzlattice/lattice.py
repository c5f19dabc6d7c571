"""Full-grid storage helpers and the row-by-row growth engine.

Fields are stored as arrays of shape ``(*batch, tmax+1, 2*xmax+1)`` with
column ``x + xmax``.  Only one sublattice is ever populated (``x+t`` even
for surfaces, odd for difference-type fields such as K and Y); every other
entry, and every site outside the light cone of the noise box, is NaN.
"""
from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .errors import BoundsError

__all__ = ["update_slices", "grow_rows", "parity_mask", "column", "check_site"]


def update_slices(xmax: int, t: int):
    """Column slices (sites, left parents, right parents) for the even sites at time t.

    Only sites with ``|x| + t <= xmax`` are produced, since beyond that the
    backward light cone leaves the noise box.
    """
    lo = t + (xmax % 2)
    hi = 2 * xmax - t - (xmax % 2)
    if hi < lo:
        return None
    return slice(lo, hi + 1, 2), slice(lo - 1, hi, 2), slice(lo + 1, hi + 2, 2)


def parity_mask(xmax: int, tmax: int, parity: int = 0) -> np.ndarray:
    x = np.arange(-xmax, xmax + 1)
    t = np.arange(tmax + 1)[:, None]
    return (x[None, :] + t) % 2 == parity


def column(xmax: int, x: int) -> int:
    if abs(x) > xmax:
        raise BoundsError(f"x = {x} outside |x| <= {xmax}")
    return x + xmax


def check_site(xmax: int, tmax: int, x: int, t: int):
    if not 0 <= t <= tmax or abs(x) > xmax:
        raise BoundsError(f"site ({x}, {t}) outside the stored window |x| <= {xmax}, 0 <= t <= {tmax}")


def grow_rows(
    update: Callable,
    noise: Callable,
    xmax: int,
    tmax: int,
    batch_shape: tuple = (),
    initial=0.0,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(t, row)`` for t = 0..tmax of an even-sublattice recursion.

    ``update(a, b, y, t, sites)`` returns new heights from left parents ``a``,
    right parents ``b`` and noise ``y``; ``noise(t, sites)`` returns the
    noise on a column slice.  ``initial`` is a scalar or a full row.
    """
    width = 2 * xmax + 1
    row = np.full(batch_shape + (width,), np.nan)
    even0 = (np.arange(-xmax, xmax + 1) % 2) == 0
    row[..., even0] = np.broadcast_to(np.asarray(initial, dtype=float), batch_shape + (width,))[..., even0]
    yield 0, row
    for t in range(1, tmax + 1):
        nxt = np.full(batch_shape + (width,), np.nan)
        sl = update_slices(xmax, t)
        if sl is not None:
            sites, left, right = sl
            nxt[..., sites] = update(row[..., left], row[..., right], noise(t, sites), t, sites)
        row = nxt
        yield t, row
