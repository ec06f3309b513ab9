"""Walker/Vose alias tables for O(1) categorical draws."""
import numpy as np


class AliasTable:
    """Alias table over ``len(weights)`` outcomes.

    Weights need not be normalised; ``log_weights=True`` accepts
    log-values so that tiny masses do not underflow before normalisation.
    """

    def __init__(self, weights, log_weights=False):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("alias table needs a non-empty 1-d weight vector")
        if log_weights:
            w = np.exp(w - w.max())
        if np.any(w < 0) or not np.isfinite(w).all():
            raise ValueError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights sum to zero")
        k = w.size
        prob = w * (k / total)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if prob[i] < 1.0]
        large = [i for i in range(k) if prob[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            alias[s] = g
            prob[g] -= 1.0 - prob[s]
            if prob[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # leftovers are 1 up to rounding
        for i in small + large:
            prob[i] = 1.0
        self.prob = prob
        self.alias = alias
        self.size = k

    def draw(self, rng, n):
        n = int(n)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        cols = rng.integers(0, self.size, size=n)
        keep = rng.random(n) < self.prob[cols]
        return np.where(keep, cols, self.alias[cols])
