"""Compiled inner loop of the block coordinate descent solver."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _objective(B, C, H, yy, lam):
    p, K = B.shape
    quad = 0.0
    pen = 0.0
    for i in range(p):
        nrm = 0.0
        for k in range(K):
            quad += B[i, k] * (H[i, k] - 2.0 * C[i, k])
            nrm += B[i, k] * B[i, k]
        pen += np.sqrt(nrm)
    return 0.5 * (yy + quad) + lam * pen


@njit(cache=True, nogil=True)
def bcd_gram(G, C, B, yy, lam, tol, max_sweeps, trace):
    """Cyclic blockwise soft-thresholding on the Gram form of the problem.

    ``G = X^T X / n``, ``C = X^T Y / n`` and ``yy = ||Y||_F^2 / n``.  ``B`` is
    updated in place.  Sweeps alternate between the active rows and full
    passes; convergence is only declared after a full pass whose largest
    block change is at most ``tol``.  ``trace[j]`` receives the objective
    after sweep ``j`` (``trace[0]`` is the starting value).

    Returns ``(sweeps, converged)``.
    """
    p, K = C.shape
    H = G @ B
    active = np.zeros(p, dtype=np.bool_)
    for i in range(p):
        for k in range(K):
            if B[i, k] != 0.0:
                active[i] = True
    r = np.empty(K)
    new = np.empty(K)
    trace[0] = _objective(B, C, H, yy, lam)
    full = True
    sweeps = 0
    while sweeps < max_sweeps:
        maxdelta = 0.0
        for i in range(p):
            if not full and not active[i]:
                continue
            gii = G[i, i]
            if gii <= 0.0:
                continue
            rn = 0.0
            for k in range(K):
                r[k] = C[i, k] - H[i, k] + gii * B[i, k]
                rn += r[k] * r[k]
            rn = np.sqrt(rn)
            shrink = 0.0
            if rn > lam:
                shrink = (1.0 - lam / rn) / gii
            dn = 0.0
            nn = 0.0
            for k in range(K):
                new[k] = shrink * r[k]
                d = new[k] - B[i, k]
                dn += d * d
                nn += new[k] * new[k]
            if dn > 0.0:
                for k in range(K):
                    d = new[k] - B[i, k]
                    if d != 0.0:
                        for j in range(p):
                            H[j, k] += G[j, i] * d
                    B[i, k] = new[k]
                dn = np.sqrt(dn)
                if dn > maxdelta:
                    maxdelta = dn
            active[i] = nn > 0.0
        sweeps += 1
        trace[sweeps] = _objective(B, C, H, yy, lam)
        if maxdelta <= tol:
            if full:
                return sweeps, True
            full = True
        else:
            full = False
    return sweeps, False
