from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile("artifact", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("artifact")


def within_se(values, target, k=3.0):
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / np.sqrt(len(values))
    return abs(values.mean() - target) <= k * se


ACCEPTANCE_LINES: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_field(rng, N, M, mode="int", boundary=True):
    """Flow field from random entering flows and births; integer or real weights."""
    from artifact.brokenline import RectDomain, flow_from_boundary

    if mode == "int":
        draw = lambda shape: rng.geometric(0.5, shape) - 1  # noqa: E731
    else:
        draw = lambda shape: rng.exponential(1.0, shape)  # noqa: E731
    zp = draw(N) if boundary else None
    zm = draw(M) if boundary else None
    return flow_from_boundary(RectDomain(N, M), zp, zm, draw((N, M)))


def random_crossing_trace(domain, rng):
    """Random trace from an entry site of the closure to an exit site.

    Entry sites are (i, 0) and (N + 1, j); each step raises x by one, moving
    to (i, j + 1) or (i - 1, j) in the grid chart, until the walk leaves the
    domain through (i, M + 1) or (0, j).
    """
    from artifact.brokenline import BrokenTrace, to_tx

    N, M = domain.shape
    starts = [(i, 0) for i in range(1, N + 1)] + [(N + 1, j) for j in range(1, M + 1)]
    i, j = starts[rng.integers(len(starts))]
    path = [(i, j)]
    i, j = (i, 1) if j == 0 else (N, j)
    path.append((i, j))
    while 1 <= i <= N and 1 <= j <= M:
        i, j = (i, j + 1) if rng.random() < 0.5 else (i - 1, j)
        path.append((i, j))
    t, x = zip(*(to_tx(a, b) for a, b in path))
    return BrokenTrace(t, x[0])
