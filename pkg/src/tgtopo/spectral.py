"""Normalized Laplacian spectra and density-of-states histograms.

Eigenvalues are computed exactly with a Householder reduction to
tridiagonal form followed by implicit-shift QL iteration; window graphs are
small enough that the dense solve is cheap and keeps the harness free of
approximation error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SpectralError(ValueError):
    pass


class EmptyWindowError(SpectralError):
    pass


class NonConvergenceError(SpectralError):
    pass


class EmptySpectrumError(SpectralError):
    pass


class BinMismatchError(SpectralError):
    pass


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix; symmetrized on construction."""

    order: int
    array: np.ndarray

    @staticmethod
    def from_dense(a) -> "SymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SpectralError(f"expected square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise SpectralError("matrix entries must be finite")
        sym = 0.5 * (a + a.T)
        sym.flags.writeable = False
        return SymMatrix(a.shape[0], sym)


@dataclass(frozen=True)
class DosHistogram:
    """Normalized eigenvalue histogram over [0, 2]; all-zero when flagged empty."""

    bin_edges: tuple
    mass: tuple
    empty: bool = False

    @property
    def bin_count(self) -> int:
        return len(self.mass)


def normalized_laplacian(win) -> SymMatrix:
    """L = I - D^(-1/2) A D^(-1/2) on the window's deduplicated simple edges."""
    n = win.num_nodes
    if n == 0:
        raise EmptyWindowError("cannot build a Laplacian for an empty window")
    a = np.zeros((n, n), dtype=np.float64)
    for i, j in win.local_edges():
        a[i, j] = 1.0
        a[j, i] = 1.0
    deg = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)  # window nodes are edge endpoints: deg >= 1
    lap = np.eye(n) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    return SymMatrix.from_dense(lap)


def _householder_tridiagonal(a: np.ndarray):
    """Orthogonal-similarity reduction to tridiagonal form; returns (diag, offdiag)."""
    a = a.copy()
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1 :, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        alpha = -np.copysign(norm_x, x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        s = a[k + 1 :, k + 1 :]
        w = s @ v
        tau = v @ w
        s -= 2.0 * np.outer(v, w) + 2.0 * np.outer(w, v) - 4.0 * tau * np.outer(v, v)
        a[k + 1 :, k + 1 :] = 0.5 * (s + s.T)
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        a[k + 2 :, k] = 0.0
        a[k, k + 2 :] = 0.0
    d = np.diag(a).copy()
    e = np.diag(a, -1).copy() if n > 1 else np.zeros(0)
    return d, e


def _tridiagonal_eigenvalues(d, e, tol, max_sweeps=60):
    """Implicit-shift QL iteration on a symmetric tridiagonal matrix."""
    n = len(d)
    d = d.astype(np.float64).copy()
    e = np.append(e.astype(np.float64), 0.0)
    floor = np.finfo(np.float64).eps
    thresh = max(tol, floor)
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= thresh * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise NonConvergenceError(
                    f"eigenvalue {l} failed to converge in {max_sweeps} sweeps"
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            broke = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    broke = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if broke:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


def eigenvalues_sym(m: SymMatrix, tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending.

    Deterministic for a fixed input; raises NonConvergenceError if the
    implicit-shift iteration exceeds its sweep cap.
    """
    if not tol > 0:
        raise SpectralError(f"tol must be positive, got {tol}")
    if m.order == 0:
        return np.zeros(0)
    if m.order == 1:
        return np.array([m.array[0, 0]])
    d, e = _householder_tridiagonal(m.array)
    return _tridiagonal_eigenvalues(d, e, tol)


def dos_histogram(eigs, bin_count: int = 4, slack: float = 1e-6) -> DosHistogram:
    """Equal-width normalized histogram of eigenvalues over [0, 2].

    Bins are half-open except the last, which is closed on the right.
    Eigenvalues are clamped into [0, 2]; values beyond ``slack`` outside the
    interval indicate a broken Laplacian and raise.
    """
    edges = tuple(2.0 * j / bin_count for j in range(bin_count + 1))
    eigs = np.asarray(list(eigs), dtype=np.float64)
    if eigs.size == 0:
        return DosHistogram(edges, (0.0,) * bin_count, empty=True)
    if eigs.min() < -slack or eigs.max() > 2.0 + slack:
        raise SpectralError(
            f"eigenvalues outside [0,2] by more than {slack}: "
            f"range [{eigs.min()}, {eigs.max()}]"
        )
    clamped = np.clip(eigs, 0.0, 2.0)
    idx = np.minimum((clamped / (2.0 / bin_count)).astype(int), bin_count - 1)
    counts = np.bincount(idx, minlength=bin_count).astype(np.float64)
    mass = counts / eigs.size
    return DosHistogram(edges, tuple(mass.tolist()), empty=False)


def wasserstein1_hist(a: DosHistogram, b: DosHistogram) -> float:
    """1-D optimal transport between two histograms on the same bins."""
    if a.bin_edges != b.bin_edges:
        raise BinMismatchError("histograms use different bin edges")
    width = a.bin_edges[1] - a.bin_edges[0]
    cdf_a = np.cumsum(a.mass)
    cdf_b = np.cumsum(b.mass)
    return float(np.abs(cdf_a - cdf_b).sum() * width)


def spectral_descriptor(win, bin_count: int = 4, tol: float = 1e-12) -> DosHistogram:
    """DoS histogram of a window's normalized Laplacian; empty windows get
    the flagged all-zero sentinel so token streams keep a fixed length."""
    if win.num_nodes == 0:
        edges = tuple(2.0 * j / bin_count for j in range(bin_count + 1))
        return DosHistogram(edges, (0.0,) * bin_count, empty=True)
    eigs = eigenvalues_sym(normalized_laplacian(win), tol=tol)
    return dos_histogram(eigs, bin_count)
