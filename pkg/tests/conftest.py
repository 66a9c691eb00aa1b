import numpy as np


def central_diff(f, x, step=1e-5):
    """Central finite differences of scalar ``f`` at every coordinate of ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        hi = f(x)
        flat[i] = old - step
        lo = f(x)
        flat[i] = old
        gf[i] = (hi - lo) / (2 * step)
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / scale


def random_boundaries(rng, T, max_len=None):
    """Random chunk ends tiling [0, T)."""
    max_len = max_len or T
    ends, pos = [], -1
    while pos < T - 1:
        pos = min(pos + int(rng.integers(1, max_len + 1)), T - 1)
        ends.append(pos)
    return ends


_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion reported in the acceptance summary")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    label = marker.args[0]
    if hasattr(item, "callspec"):
        label += f" [{item.callspec.id}]"
    _ACCEPTANCE.append((label, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
