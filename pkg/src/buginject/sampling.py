"""Seeded selection without replacement.

SplitMix64 drives a partial Fisher-Yates shuffle; bounded draws use
rejection sampling so every index is equally likely. Both are spelled
out here (rather than taken from ``random``) so that selections are
reproducible bit-for-bit by any other implementation.
"""

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound):
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound


def draw_order(count, seed):
    """Yield distinct indices of range(count) in sampled order."""
    rng = SplitMix64(seed)
    idx = list(range(count))
    for i in range(count):
        j = i + rng.below(count - i)
        idx[i], idx[j] = idx[j], idx[i]
        yield idx[i]


def selection_order(count, n, seed):
    """Order in which candidates are tried: every index in original order
    when ``n`` covers them all, otherwise the seeded draw order."""
    if n >= count:
        return iter(range(count))
    return draw_order(count, seed)


def sample(cands, n, seed):
    if n <= 0:
        return []
    if n >= len(cands):
        return list(cands)
    order = draw_order(len(cands), seed)
    return [cands[next(order)] for _ in range(n)]
