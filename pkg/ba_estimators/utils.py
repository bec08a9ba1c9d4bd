import numpy as np


def column(summaries, name):
    return np.array([getattr(s, name) for s in summaries], dtype=float)


def within_components(rss, df):
    """Per-subject within-subject variances r^2/df.

    Subjects without replicates (df = 0) get the average over the subjects
    that have them, so the components still average to the pooled estimate.
    Returns (components, pooled) or (None, None) if no subject has df >= 1.
    """
    informative = df >= 1
    if not informative.any():
        return None, None
    components = np.zeros_like(rss, dtype=float)
    components[informative] = rss[informative] / df[informative]
    pooled = components[informative].mean()
    components[~informative] = pooled
    return components, pooled
