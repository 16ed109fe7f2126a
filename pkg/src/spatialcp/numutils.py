"""Small numerical helpers used by several modules."""

import numpy as np


def softplus(x):
    """Overflow-safe log(1 + e^x), elementwise.

    Exact at the extremes: softplus(+inf) = +inf, softplus(-inf) = 0,
    and no intermediate overflow for |x| up to the float64 range.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0)
    # exp(-|x|) <= 1, so log1p never overflows; |x| = inf gives log1p(0) = 0.
    with np.errstate(invalid="ignore"):
        tail = np.log1p(np.exp(-np.abs(x)))
    tail = np.where(np.isfinite(x), tail, 0.0)
    return out + tail


def concat_ranges(starts, ends):
    """Concatenate the integer ranges [starts[i], ends[i]) into one array.

    Vectorized equivalent of
    ``np.concatenate([np.arange(s, e) for s, e in zip(starts, ends)])``.
    """
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    lens = ends - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    step = np.ones(total, dtype=np.int64)
    step[0] = starts[0]
    cs = np.cumsum(lens)
    step[cs[:-1]] = starts[1:] - ends[:-1] + 1
    return np.cumsum(step)
