"""Pure-numpy reference versions of the compiled kernels.

Vectorised over energies; loops run over recursion steps or word letters.
Semantics match ``_kernels.pyx`` element for element.
"""
import numpy as np

LOG_SWITCH = 1e100
LOG2 = np.log(2.0)


def _to_slog(x):
    with np.errstate(divide="ignore"):
        return np.sign(x), np.log(np.abs(x))


def _slog_add(s1, l1, s2, l2):
    # signed-log addition: (s1 e^l1) + (s2 e^l2)
    z1 = (s1 == 0) | (l1 == -np.inf)
    z2 = (s2 == 0) | (l2 == -np.inf)
    hi = l1 >= l2
    sh, lh = np.where(hi, s1, s2), np.where(hi, l1, l2)
    sl, ll = np.where(hi, s2, s1), np.where(hi, l2, l1)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.exp(ll - lh)
        same = sh == sl
        l = lh + np.log1p(np.where(same, d, -np.minimum(d, 1.0)))
    s = np.where(l == -np.inf, 0.0, sh)
    s = np.where(z2, s1, np.where(z1, s2, s))
    l = np.where(z2, l1, np.where(z1, l2, l))
    return s, l


def trace_final(x1, x0, xm1, n, guard=1e-12):
    """Return ``(x_n, log|x_n|, escape_index, ambiguous)`` for every energy."""
    a = np.array(x1, dtype=float)
    b = np.array(x0, dtype=float)
    c = np.array(xm1, dtype=float)
    N = a.shape[0]
    esc = np.full(N, -1, dtype=np.int64)
    amb = np.zeros(N, dtype=bool)
    if n <= 1:
        t = a if n == 1 else (b if n == 0 else c)
        with np.errstate(divide="ignore"):
            return t.copy(), np.log(np.abs(t)), esc, amb

    logmode = np.zeros(N, dtype=bool)
    sa = np.zeros(N)
    sb = np.zeros(N)
    sc = np.zeros(N)
    la = np.zeros(N)
    lb = np.zeros(N)
    lc = np.zeros(N)
    gpos, gneg = np.log1p(guard), np.log1p(-guard)
    m = 0
    while True:
        fm = ~logmode
        with np.errstate(over="ignore", invalid="ignore"):
            strict = np.where(
                fm,
                (np.abs(a) > 1 + guard) & (np.abs(b) > 1 + guard) & (np.abs(a * b) > np.abs(c) + guard),
                (la > gpos) & (lb > gpos) & (la + lb > lc + gpos),
            )
            loose = np.where(
                fm,
                (np.abs(a) > 1 + guard) & (np.abs(b) > 1 + guard) & (np.abs(a * b) > np.abs(c) - guard),
                (la > gpos) & (lb > gpos) & (la + lb > lc + gneg),
            )
        newesc = strict & (esc < 0)
        esc[newesc] = m
        amb |= loose & ~strict
        if m + 1 >= n:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            t = 2.0 * a * b - c
        big = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c)])
        switch = fm & ~((np.abs(t) <= LOG_SWITCH) & (big <= LOG_SWITCH))
        if switch.any():
            sa[switch], la[switch] = _to_slog(a[switch])
            sb[switch], lb[switch] = _to_slog(b[switch])
            sc[switch], lc[switch] = _to_slog(c[switch])
            logmode |= switch
        fm = ~logmode
        c = np.where(fm, b, c)
        b = np.where(fm, a, b)
        a = np.where(fm, t, a)
        if logmode.any():
            lm = logmode
            s1, l1 = _slog_add(sa[lm] * sb[lm], LOG2 + la[lm] + lb[lm], -sc[lm], lc[lm])
            sc[lm], lc[lm] = sb[lm], lb[lm]
            sb[lm], lb[lm] = sa[lm], la[lm]
            sa[lm], la[lm] = s1, l1
        m += 1

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        xn = np.where(logmode, np.where(la < 709.0, sa * np.exp(np.minimum(la, 709.0)), sa * np.inf), a)
        ln = np.where(logmode, la, np.log(np.abs(a)))
    xn = np.where(logmode & (sa == 0), 0.0, xn)
    amb &= esc < 0
    return xn, ln, esc, amb


def word_product(mats, codes):
    """Log-scaled product ``M[w_{k-1}] ... M[w_0]`` for each energy.

    ``mats`` has shape ``(n_energies, n_letters, 2, 2)``.
    """
    mats = np.asarray(mats, dtype=float)
    N = mats.shape[0]
    p = np.broadcast_to(np.eye(2), (N, 2, 2)).copy()
    acc = np.zeros(N)
    for q in np.asarray(codes):
        p = mats[:, q] @ p
        s = np.abs(p).max(axis=(1, 2))
        big = s > LOG_SWITCH
        if big.any():
            p[big] /= s[big, None, None]
            acc[big] += np.log(s[big])
    return p, acc
