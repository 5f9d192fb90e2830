"""Golden-section minimization on a closed interval."""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol, trace=None):
    """Minimize a (locally) unimodal ``f`` on ``[lo, hi]`` to width ``tol``.

    Returns ``(x, f(x))`` for the best interior probe. When ``trace`` is a
    list every evaluation is appended to it as ``(x, f(x))``.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    if trace is not None:
        trace.extend([(c, fc), (d, fd)])
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            if trace is not None:
                trace.append((c, fc))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            if trace is not None:
                trace.append((d, fd))
    return (c, fc) if fc <= fd else (d, fd)
