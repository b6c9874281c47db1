"""Golden-section search, used for every one-dimensional optimization here."""

import math
from dataclasses import dataclass

INVPHI = (math.sqrt(5) - 1) / 2


@dataclass
class GoldenResult:
    x: float
    fx: float
    n_evals: int
    converged: bool


def golden_min(f, lo, hi, rtol=1e-3, log=False, maxiter=200, x0=None):
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Stops when ``hi/lo - 1 < rtol`` (``log=True``, search in log x) or when
    ``hi - lo < rtol * |x|``.  ``x0``, if given, is evaluated first as an
    extra candidate.  The best point seen, endpoints included, is returned.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    to = math.log if log else (lambda t: t)
    back = math.exp if log else (lambda t: t)
    a, b = to(lo), to(hi)
    seen = {}

    def F(u):
        if u not in seen:
            seen[u] = f(back(u))
        return seen[u]

    if x0 is not None and lo <= x0 <= hi:
        F(to(x0))
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = F(c), F(d)
    it = 0
    converged = False
    while it < maxiter:
        width = (b - a) if log else (b - a) / max(abs(back((a + b) / 2)), 1e-300)
        if width < rtol:
            converged = True
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = F(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = F(d)
        it += 1
    F(to(lo))
    F(to(hi))
    u = min(seen, key=seen.get)
    return GoldenResult(back(u), seen[u], len(seen), converged)


def golden_max(f, lo, hi, **kw):
    r = golden_min(lambda x: -f(x), lo, hi, **kw)
    return GoldenResult(r.x, -r.fx, r.n_evals, r.converged)
