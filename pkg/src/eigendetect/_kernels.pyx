# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-trial kernels: Hermitian rank-k update, eigenvalues, statistics.

Each trial runs zherk + zheevd (eigenvalues only) through scipy's BLAS/LAPACK
bindings with the GIL released, so callers may fan chunks out over threads.
"""

from libc.math cimport log, exp, NAN
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport zherk
from scipy.linalg.cython_lapack cimport zheevd

cdef double EPS = 2.220446049250313e-16


def batch_spectra(const double complex[:, :, ::1] y, double[:, ::1] values,
                  double[::1] trace, double neg_tol):
    """Fill ``values`` (T, N) with descending eigenvalues and ``trace`` (T,).

    Returns ``(status, trial, info)``: status 0 is success, 1 means zheevd
    failed to converge, 2 means an eigenvalue fell below ``-neg_tol * trace``.
    """
    cdef int T = y.shape[0], n = y.shape[1], l = y.shape[2]
    cdef int m = n if n <= l else l
    cdef int k = l if n <= l else n
    cdef char *trans = b"C" if n <= l else b"N"
    cdef char *uplo = b"U"
    cdef char *jobz = b"N"
    cdef double alpha = 1.0 / l, beta = 0.0
    cdef int lda = l, ldc = m, info = 0
    cdef int lwork = -1, lrwork = -1, liwork = -1
    cdef double complex wq
    cdef double rq
    cdef int iq
    cdef int t, i, status = 0, bad = -1
    cdef double tr, lam
    cdef double complex *c
    cdef double complex *work
    cdef double *w
    cdef double *rwork
    cdef int *iwork

    if T == 0:
        return 0, -1, 0
    c = <double complex *> malloc(m * m * sizeof(double complex))
    w = <double *> malloc(m * sizeof(double))
    if c == NULL or w == NULL:
        free(c); free(w)
        raise MemoryError()
    # workspace query
    zheevd(jobz, uplo, &m, c, &ldc, w, &wq, &lwork, &rq, &lrwork, &iq, &liwork, &info)
    lwork = max(<int> wq.real, m + 1)
    lrwork = max(<int> rq, m)
    liwork = max(iq, 1)
    work = <double complex *> malloc(lwork * sizeof(double complex))
    rwork = <double *> malloc(lrwork * sizeof(double))
    iwork = <int *> malloc(liwork * sizeof(int))
    if work == NULL or rwork == NULL or iwork == NULL:
        free(c); free(w); free(work); free(rwork); free(iwork)
        raise MemoryError()

    with nogil:
        for t in range(T):
            # row-major (N, L) is column-major (L, N); eigenvalues of the
            # conjugated product are unchanged.
            zherk(uplo, trans, &m, &k, &alpha, <double complex *> &y[t, 0, 0], &lda,
                  &beta, c, &ldc)
            tr = 0.0
            for i in range(m):
                tr = tr + c[i * m + i].real
            trace[t] = tr
            zheevd(jobz, uplo, &m, c, &ldc, w, work, &lwork, rwork, &lrwork,
                   iwork, &liwork, &info)
            if info != 0:
                status = 1
                bad = t
                break
            for i in range(m):
                lam = w[m - 1 - i]
                if lam < 0.0:
                    if lam < -neg_tol * tr:
                        status = 2
                        bad = t
                    lam = 0.0
                values[t, i] = lam
            if status != 0:
                break
            for i in range(m, n):
                values[t, i] = 0.0

    free(c); free(w); free(work); free(rwork); free(iwork)
    return status, bad, info


def batch_statistics(const double[:, ::1] values, double[:, ::1] out):
    """Fused GLRT, max/min ratio, max/noise ratio and max-min mean per row.

    Degenerate entries are NaN; an eigenvalue is zero when <= N * eps * lmax.
    """
    cdef Py_ssize_t T = values.shape[0], n = values.shape[1]
    cdef Py_ssize_t t, i
    cdef double lmax, lmin, tol, total, rest, logsum, noise
    with nogil:
        for t in range(T):
            lmax = values[t, 0]
            lmin = values[t, n - 1]
            tol = n * EPS * lmax
            rest = 0.0
            for i in range(1, n):
                rest = rest + values[t, i]
            total = lmax + rest
            if lmin > tol:
                logsum = 0.0
                for i in range(n):
                    logsum = logsum + log(values[t, i])
                out[t, 0] = exp(log(total / n) - logsum / n)
                out[t, 1] = lmax / lmin
            else:
                out[t, 0] = NAN
                out[t, 1] = NAN
            if n >= 2:
                noise = rest / (n - 1)
                out[t, 2] = lmax / noise if noise > tol else NAN
            else:
                out[t, 2] = NAN
            out[t, 3] = 0.5 * (lmax + lmin)
