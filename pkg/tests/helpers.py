"""Independent numerical oracles shared across test modules."""

import numpy as np

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def integrate_density(d, n_interior=100_000, n_tail=5_000, efolds=12.0):
    """Unit-mass check: piece-aligned trapezoid plus analytic tail remainders.

    Every segment is integrated with both endpoints sampled strictly inside
    the piece (the density is evaluated pointwise only), so interior pieces
    carry no discretisation error and the exponential tails dominate the
    error budget.  The mass beyond `efolds` e-foldings is added analytically.
    """
    v = d.values
    pieces = []
    if d.lower_tail_mass > 0:
        pieces.append((v[0] - efolds / d.lower_rate, v[0], n_tail))
    total_len = v[-1] - v[0]
    for a, b in zip(v[:-1], v[1:]):
        n = max(8, int(round(n_interior * (b - a) / total_len)))
        pieces.append((a, b, n))
    if d.upper_tail_mass > 0:
        pieces.append((v[-1], v[-1] + efolds / d.upper_rate, n_tail))
    area = 0.0
    for a, b, n in pieces:
        xs = np.linspace(a, np.nextafter(b, a), n)
        area += _trapezoid(d.density(xs), xs)
    remainder = (d.lower_tail_mass + d.upper_tail_mass) * np.exp(-efolds)
    return area + remainder


def ks_statistic(d, samples):
    """Kolmogorov-Smirnov distance between an empirical sample and d's CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    F = d.cdf(xs)
    up = np.max(np.arange(1, n + 1) / n - F)
    down = np.max(F - np.arange(0, n) / n)
    return float(max(up, down))


def random_quantile_vector(rng, levels):
    """Random monotone values on the shared grid, drawn from varied shapes."""
    kind = rng.integers(3)
    if kind == 0:
        vals = rng.normal(rng.uniform(-10, 10), rng.uniform(0.3, 5.0), levels.size)
    elif kind == 1:
        vals = rng.exponential(rng.uniform(0.5, 3.0), levels.size) + rng.uniform(-5, 5)
    else:
        vals = rng.uniform(-1, 1, levels.size) * rng.uniform(0.5, 8.0) + rng.uniform(-10, 10)
    return np.sort(vals)
