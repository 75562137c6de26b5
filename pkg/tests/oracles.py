"""Dense-matrix reference implementations (small M only).

Nothing here calls numpy.fft or the package's filters: transforms are explicit
DFT matrices and the adaptive updates are the time-domain circulant forms.
"""

import numpy as np


def dft_matrix(M):
    j, n = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    return np.exp(-2j * np.pi * j * n / M)


def naive_dft(x):
    x = np.asarray(x)
    M = x.size
    return np.array([sum(x[n] * np.exp(-2j * np.pi * k * n / M) for n in range(M))
                     for k in range(M)])


def constraint_matrix(M, keep_first):
    F = dft_matrix(M)
    Finv = np.conj(F) / M
    L = M // 2
    d = np.r_[np.ones(L), np.zeros(L)] if keep_first else np.r_[np.zeros(L), np.ones(L)]
    return F @ np.diag(d) @ Finv


def circulant_first_row(x):
    """C[i, j] = x[(j - i) mod M]."""
    x = np.asarray(x)
    M = x.size
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    return x[(j - i) % M]


def circular_convolution(a, b):
    M = len(a)
    return np.array([sum(a[m] * b[(n - m) % M] for m in range(M)) for n in range(M)])


class DenseKalmanOracle:
    """Time-domain PFKF / MPFKF updates written with explicit circulant matrices.

    Static path (A = 1, no process noise). ``w`` holds the causal taps per
    partition; for the modified filter ``w_wrap`` holds the wraparound half.
    """

    def __init__(self, B, L, modified, psd, eps, p_init=10.0):
        self.B, self.L, self.M = B, L, 2 * L
        self.modified = modified
        self.psd, self.eps = psd, eps
        self.F = dft_matrix(self.M)
        self.Finv = np.conj(self.F) / self.M
        self.w = np.zeros((B, L))
        self.w_wrap = np.zeros((B, L))
        self.P = [np.eye(self.M) * p_init for _ in range(B)]
        self.samples = []

    def window(self, b):
        """x_b(k) = [x(kL - bL - M + 1), ..., x(kL - bL)] with zeros before the start."""
        k = len(self.samples) // self.L
        end = k * self.L - b * self.L  # exclusive, 0-based
        out = np.zeros(self.M)
        for i, n in enumerate(range(end - self.M, end)):
            if n >= 0:
                out[i] = self.samples[n]
        return out

    def step(self, x_new, y):
        L, M = self.L, self.M
        self.samples.extend(np.asarray(x_new, float))
        xs = [self.window(b) for b in range(self.B)]
        Xd = [np.diag(self.F @ x) for x in xs]
        Xc = [circulant_first_row(x) for x in xs]
        e = np.asarray(y, float) - sum(Xc[b][:L, L:].T @ self.w[b] for b in range(self.B))

        D = sum(Xd[b] @ self.P[b] @ np.conj(Xd[b]).T for b in range(self.B))
        D = D + (self.psd + self.eps) * np.eye(M)
        Dinv = np.linalg.inv(D)
        for b in range(self.B):
            mu = (L / M) * self.P[b] @ Dinv
            Mb = self.Finv @ mu @ self.F
            assert np.max(np.abs(Mb.imag)) < 1e-9
            Mb = Mb.real
            M1, M2 = Mb[:L, :L], Mb[:L, L:]
            Xc1, Xc2 = Xc[b][:L, :L], Xc[b][:L, L:]
            if self.modified:
                self.w_wrap[b] += Mb[L:, :L] @ Xc2 @ e
                self.w[b] += M1 @ Xc2 @ e
            else:
                self.w[b] += (M1 @ Xc2 + M2 @ Xc1) @ e
            self.P[b] = (np.eye(M) - (L / M) * mu @ np.conj(Xd[b]).T @ Xd[b]) @ self.P[b]
        return e
