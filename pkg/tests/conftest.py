import itertools

import numpy as np
import pytest


def brute_latin(L) -> bool:
    """Line-by-line set check, independent of validate_latin."""
    L = np.asarray(L)
    n = L.shape[0]
    full = set(range(n))
    for a in range(n):
        for b in range(n):
            if set(L[:, a, b].tolist()) != full:
                return False
            if set(L[a, :, b].tolist()) != full:
                return False
            if set(L[a, b, :].tolist()) != full:
                return False
    return True


def brute_three_cubes(L):
    """All eight-cell two-symbol boxes, found by scanning every coordinate pair triple."""
    L = np.asarray(L)
    n = L.shape[0]
    found = []
    pairs = list(itertools.combinations(range(n), 2))
    for i1, i2 in pairs:
        for j1, j2 in pairs:
            for k1, k2 in pairs:
                even = {L[i1, j1, k1], L[i2, j2, k1], L[i1, j2, k2], L[i2, j1, k2]}
                odd = {L[i1, j2, k1], L[i2, j1, k1], L[i1, j1, k2], L[i2, j2, k2]}
                if len(even) == 1 and len(odd) == 1 and even != odd:
                    found.append((i1, i2, j1, j2, k1, k2))
    return found


def _latin_squares(n):
    perms = list(itertools.permutations(range(n)))
    out = []
    for rows in itertools.permutations(perms, n):
        a = np.array(rows)
        if all(len(set(a[:, c].tolist())) == n for c in range(n)):
            out.append(a)
    return np.array(out)


def all_latin_cubes(n) -> np.ndarray:
    """Every Latin cube of order n <= 4, as stacks of pairwise cell-disjoint Latin squares."""
    S = _latin_squares(n)
    flat = S.reshape(len(S), -1)
    compat = (flat[:, None, :] != flat[None, :, :]).all(axis=2)
    cubes = []

    def extend(chosen, allowed):
        if len(chosen) == n:
            cubes.append(np.stack([S[c] for c in chosen], axis=-1))
            return
        for c in np.nonzero(allowed)[0]:
            extend(chosen + [c], allowed & compat[c])

    extend([], np.ones(len(S), dtype=bool))
    return np.array(cubes)


@pytest.fixture(scope="session")
def latin_cubes_4():
    return all_latin_cubes(4)


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and report.when in ("setup", "call"):
        number, title = marker.args
        results = item.config.stash[_CRITERIA]
        _, outcome, duration = results.get(number, (title, "passed", 0.0))
        # setup time counts too, since shared fixtures do the heavy lifting
        if report.outcome != "passed":
            outcome = report.outcome
        results[number] = (title, outcome, duration + report.duration)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, outcome, duration = results[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {verdict} {title} ({duration:.1f} s)")
