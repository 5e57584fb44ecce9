import itertools

import numpy as np

from gerberstat.ingest import ReturnMatrix

FIXTURE_RETURNS = [[1.5, 2.0], [-1.2, -1.1], [1.1, -1.3], [0.5, 2.0]]


def fixture4():
    return ReturnMatrix(np.array(FIXTURE_RETURNS), ("a", "b"))


def all_pierce(r, c):
    """True if every asset crosses +-c*sigma at least once (gs1/gs2 precondition)."""
    sig = r.values.std(axis=0, ddof=1)
    if np.any(np.all(r.values == r.values[0], axis=0)):
        return False
    return bool(np.all(np.any(np.abs(r.values) >= c * sig, axis=0)))


def acceptance_instances(n=1000, seed=20240601):
    """Seeded panels over T in 5..50, K in 2..10, Gaussian / Student-t, c in {.25, .5, 1}.

    Instances where some asset never pierces are skipped; ``skipped`` counts them.
    """
    rng = np.random.default_rng(seed)
    cs = (0.25, 0.5, 1.0)
    out = []
    skipped = 0
    for idx in itertools.count():
        if len(out) == n:
            break
        T = int(rng.integers(5, 51))
        K = int(rng.integers(2, 11))
        c = cs[idx % 3]
        kind = "gaussian" if idx % 2 == 0 else "student_t"
        if kind == "gaussian":
            x = rng.standard_normal((T, K)) * 0.02 + rng.normal(0, 0.005, K)
        else:
            x = rng.standard_t(3, size=(T, K)) * 0.02
        r = ReturnMatrix(x)
        if not all_pierce(r, c):
            skipped += 1
            continue
        out.append((r, c, kind))
    return out, skipped
