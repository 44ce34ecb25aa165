"""Pure numpy implementations of the hot inner loops.

These mirror ``_ckernels.pyx`` function for function; ``heatflow._backend``
picks one at import time.  Results agree to rounding, not bitwise.
"""
import numpy as np

NAME = "numpy"


def dirichlet_sum(s, nterms):
    """sum_{n=1}^{nterms[i]} n**(-s[i]) for each i."""
    s = np.asarray(s, dtype=complex)
    nterms = np.asarray(nterms, dtype=np.int64)
    out = np.zeros(s.shape, dtype=complex)
    if s.size == 0:
        return out
    nmax = int(nterms.max())
    for n in range(1, nmax + 1):
        m = nterms >= n
        if not m.all():
            out[m] += np.exp(-s[m] * np.log(n))
        else:
            out += np.exp(-s * np.log(n))
    return out


def rs_main_sum(t, theta, nterms):
    """sum_{n=1}^{N} n**-0.5 cos(theta - t log n), the Riemann-Siegel main sum."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    nterms = np.asarray(nterms, dtype=np.int64)
    out = np.zeros(t.shape)
    if t.size == 0:
        return out
    for n in range(1, int(nterms.max()) + 1):
        m = nterms >= n
        ln = np.log(n)
        out[m] += np.cos(theta[m] - t[m] * ln) / np.sqrt(n)
    return out


def phi_series(w, cutoff, max_terms, compensated=False):
    """Theta-type series for Phi at complex points with Re(w) >= 0.

    Returns (values, terms_used).  terms_used is -1 where max_terms was hit
    before a term fell below ``cutoff``.
    """
    w = np.asarray(w, dtype=complex)
    shape = w.shape
    w = w.ravel()
    e4 = np.exp(4.0 * w)
    e5 = np.exp(5.0 * w)
    e9 = np.exp(9.0 * w)
    acc = np.zeros(w.shape, dtype=complex)
    comp = np.zeros(w.shape, dtype=complex)
    used = np.zeros(w.shape, dtype=np.int64)
    active = np.ones(w.shape, dtype=bool)
    pi = np.pi
    for n in range(1, max_terms + 1):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        n2 = float(n * n)
        term = (2.0 * pi * pi * n2 * n2 * e9[idx] - 3.0 * pi * n2 * e5[idx]) * np.exp(-pi * n2 * e4[idx])
        if compensated:
            a = acc[idx]
            tot = a + term
            big = np.abs(a.real) >= np.abs(term.real)
            cr = np.where(big, (a.real - tot.real) + term.real, (term.real - tot.real) + a.real)
            big = np.abs(a.imag) >= np.abs(term.imag)
            ci = np.where(big, (a.imag - tot.imag) + term.imag, (term.imag - tot.imag) + a.imag)
            comp[idx] += cr + 1j * ci
            acc[idx] = tot
        else:
            acc[idx] += term
        used[idx] = n
        done = (np.abs(term) < cutoff) & (n >= 2)
        active[idx[done]] = False
    used[active] = -1
    return (acc + comp).reshape(shape), used.reshape(shape)


def coulomb_sum(targets, sources, skip):
    """sum_j 1/(targets[i] - sources[j]) over j != skip[i] (skip < 0: none)."""
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    skip = np.asarray(skip, dtype=np.int64)
    out = np.empty(len(targets))
    step = max(1, 4_000_000 // max(len(sources), 1))
    for i0 in range(0, len(targets), step):
        d = targets[i0:i0 + step, None] - sources[None, :]
        sk = skip[i0:i0 + step]
        rows = np.nonzero(sk >= 0)[0]
        d[rows, sk[rows]] = np.inf
        out[i0:i0 + step] = (1.0 / d).sum(axis=1)
    return out
