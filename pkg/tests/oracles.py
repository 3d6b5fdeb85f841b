"""Brute-force reference computations written independently of the package.

Everything here works on plain Python lists and ``fractions``-free floats by
enumerating (y, a, w) cell counts, so it shares no code path with the
vectorised estimators under test.
"""

from collections import Counter


def cell_counts(y, a, w):
    """Counter over (y, a, w) triples; ``w`` is a hashable stratum label per row."""
    return Counter(zip((int(v) for v in y), (int(v) for v in a), w))


def strata(counts):
    return sorted({w for (_, _, w) in counts})


def cell_mean(counts, arm, w):
    n1 = counts[(1, arm, w)]
    n = n1 + counts[(0, arm, w)]
    return n1 / n


def stratum_size(counts, w, arm=None):
    arms = (0, 1) if arm is None else (arm,)
    return sum(counts[(y, t, w)] for y in (0, 1) for t in arms)


def standardized_means(counts, standard="all"):
    """(mu1, mu0) standardised to P(W) (``"all"``) or to P(W | A=1) (``"treated"``)."""
    n = sum(counts.values())
    n_t = sum(v for (_, t, _), v in counts.items() if t == 1)
    mu1 = mu0 = 0.0
    for w in strata(counts):
        weight = stratum_size(counts, w) / n if standard == "all" else stratum_size(counts, w, 1) / n_t
        if weight == 0:
            continue
        mu1 += cell_mean(counts, 1, w) * weight
        mu0 += cell_mean(counts, 0, w) * weight
    return mu1, mu0


def brute_force_ate(y, a, w):
    mu1, mu0 = standardized_means(cell_counts(y, a, w))
    return mu1 - mu0


def brute_force_att(y, a, w):
    mu1, mu0 = standardized_means(cell_counts(y, a, w), "treated")
    return mu1 - mu0


def brute_force_iptw(y, a, w):
    """Hajek IPTW with empirical-frequency propensity, summed row by row."""
    counts = cell_counts(y, a, w)
    g = {s: stratum_size(counts, s, 1) / stratum_size(counts, s) for s in strata(counts)}
    num1 = den1 = num0 = den0 = 0.0
    for yi, ai, wi in zip(y, a, w):
        if ai == 1:
            num1 += yi / g[wi]
            den1 += 1 / g[wi]
        else:
            num0 += yi / (1 - g[wi])
            den0 += 1 / (1 - g[wi])
    return num1 / den1 - num0 / den0
