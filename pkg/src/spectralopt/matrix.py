"""Dense float64 matrices and the compact SVD that anchors everything else.

The SVD here is a one-sided Jacobi: it rotates column pairs of the input
until all columns are mutually orthogonal, at which point the column norms
are the singular values. It is slower than LAPACK's divide and conquer but
its accuracy is hard to beat on small matrices and, more importantly, the
implementation is self-contained, so every spectral quantity in this
package (polar factors, effective ranks, filter oracles) is validated
against the same ground truth.

Matrices are plain 2-D float64 ndarrays. `require_matrix` is the single
construction gate: no NaNs, no infs, no empty axes. Serialization uses a
``{"rows", "cols", "data"}`` JSON object (row-major) and a plain CSV form,
one matrix row per line.
"""

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DegenerateInputError, ShapeError

# Jacobi termination: all off-diagonal Gram entries below this, relative to
# the corresponding diagonal entries. 60 sweeps is far beyond what any
# desk-scale matrix needs (random 32x32 converges in ~8).
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60

FLOAT_FORMAT = "%.17g"


def require_matrix(m) -> np.ndarray:
    """Validate and return `m` as a 2-D float64 array.

    Rejects empty axes (ShapeError) and non-finite entries
    (DegenerateInputError). Always returns a float64 copy-free view when
    possible.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix axes must be nonempty, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise DegenerateInputError("matrix entries must be finite")
    return a


def matmul(a, b) -> np.ndarray:
    """Shape-checked matrix product."""
    a = require_matrix(a)
    b = require_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def frobenius_norm(m) -> float:
    return float(np.sqrt(np.sum(np.square(require_matrix(m)))))


@dataclass(frozen=True)
class SvdResult:
    """Compact SVD M = u @ diag(sigma) @ v.T.

    u is (m, r), v is (n, r), sigma is (r,) sorted non-increasing and
    strictly positive; r is the numerical rank under the cutoff used by
    `svd_compact`. Columns of u are sign-normalized so their first entry of
    non-negligible magnitude is positive, which makes the factorization
    deterministic for simple spectra.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@lru_cache(maxsize=64)
def _round_robin(n: int):
    """Disjoint column pairings covering all n(n-1)/2 pairs in n-1 rounds.

    Classic circle scheduling: one index stays fixed, the rest rotate. Odd n
    gets a dummy slot that is dropped from the emitted pairs. Within a round
    the pairs are disjoint, so their rotations commute and can be applied in
    one vectorized sweep.
    """
    ncol = n if n % 2 == 0 else n + 1
    idx = list(range(ncol))
    rounds = []
    for _ in range(ncol - 1):
        pairs = []
        for i in range(ncol // 2):
            p, q = idx[i], idx[ncol - 1 - i]
            if p > q:
                p, q = q, p
            if q < n:
                pairs.append((p, q))
        rounds.append(
            (
                np.array([p for p, _ in pairs], dtype=np.intp),
                np.array([q for _, q in pairs], dtype=np.intp),
            )
        )
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return tuple(rounds)


def _max_relative_offdiag(b: np.ndarray) -> float:
    g = b.T @ b
    d = np.diag(g).copy()
    np.fill_diagonal(g, 0.0)
    denom = np.sqrt(np.outer(d, d))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(g) / denom
    rel[denom == 0.0] = 0.0
    return float(rel.max()) if rel.size else 0.0


def _jacobi_orthogonalize(a: np.ndarray, accumulate_v: bool):
    """Run one-sided Jacobi sweeps on the columns of `a` (tall: m >= n).

    Returns (b, v, sweeps) where b has mutually orthogonal columns equal to
    a @ v. Raises ConvergenceError if the relative off-diagonal measure is
    still above JACOBI_TOL after JACOBI_MAX_SWEEPS sweeps.
    """
    m, n = a.shape
    b = a.copy()
    v = np.eye(n) if accumulate_v else None
    if n == 1:
        return b, v, 0
    rounds = _round_robin(n)
    for sweep in range(JACOBI_MAX_SWEEPS):
        if _max_relative_offdiag(b) <= JACOBI_TOL:
            return b, v, sweep
        for p, q in rounds:
            bp = b[:, p]
            bq = b[:, q]
            app = np.einsum("ij,ij->j", bp, bp)
            aqq = np.einsum("ij,ij->j", bq, bq)
            apq = np.einsum("ij,ij->j", bp, bq)
            scale = np.sqrt(app * aqq)
            # Rotate only pairs that are meaningfully correlated; the rest
            # keep an identity rotation (t = 0).
            active = (scale > 0.0) & (np.abs(apq) > JACOBI_TOL * scale * 1e-4)
            if not active.any():
                continue
            t = np.zeros_like(apq)
            zeta = np.zeros_like(apq)
            np.divide(aqq - app, 2.0 * apq, out=zeta, where=active)
            root = np.sqrt(1.0 + zeta * zeta)
            sgn = np.where(zeta >= 0.0, 1.0, -1.0)
            t[active] = (sgn / (np.abs(zeta) + root))[active]
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            b[:, p] = c * bp - s * bq
            b[:, q] = s * bp + c * bq
            if v is not None:
                vp = v[:, p]
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    final = _max_relative_offdiag(b)
    if final <= JACOBI_TOL:
        return b, v, JACOBI_MAX_SWEEPS
    raise ConvergenceError(
        f"Jacobi SVD did not converge after {JACOBI_MAX_SWEEPS} sweeps "
        f"(relative off-diagonal {final:.3e})",
        sweeps=JACOBI_MAX_SWEEPS,
    )


def singular_values(m, tol: float = 1e-12) -> np.ndarray:
    """Singular values above the relative cutoff, sorted non-increasing.

    Same Jacobi core as `svd_compact` but skips the accumulation of singular
    vectors; use when only the spectrum is needed.
    """
    a = require_matrix(m)
    if tol <= 0.0:
        raise ConfigurationError(f"rank cutoff tol must be positive, got {tol}")
    if a.shape[0] < a.shape[1]:
        a = a.T
    b, _, _ = _jacobi_orthogonalize(a, accumulate_v=False)
    sig = np.sqrt(np.einsum("ij,ij->j", b, b))
    sig = np.sort(sig)[::-1]
    if sig.size == 0 or sig[0] == 0.0:
        return sig[:0]
    return sig[sig > tol * sig[0]].copy()


def svd_compact(m, tol: float = 1e-12) -> SvdResult:
    """Compact SVD via one-sided Jacobi.

    `tol` is the rank cutoff relative to the largest singular value: columns
    with sigma <= tol * sigma_max are dropped. A zero matrix yields rank 0.
    Input orientation is handled internally (the iteration runs on the
    thinner side); the returned factors match the input orientation.
    """
    a = require_matrix(m)
    if tol <= 0.0:
        raise ConfigurationError(f"rank cutoff tol must be positive, got {tol}")
    transposed = a.shape[0] < a.shape[1]
    work = a.T if transposed else a
    b, v, _ = _jacobi_orthogonalize(work, accumulate_v=True)
    sig = np.sqrt(np.einsum("ij,ij->j", b, b))
    order = np.argsort(-sig, kind="stable")
    sig = sig[order]
    b = b[:, order]
    v = v[:, order]
    if sig.size == 0 or sig[0] == 0.0:
        r = 0
    else:
        r = int(np.sum(sig > tol * sig[0]))
    sig = sig[:r].copy()
    u = b[:, :r] / sig if r else b[:, :0]
    v = v[:, :r].copy()
    if transposed:
        u, v = v, u
    # Deterministic sign: first entry of each u column that is clearly
    # nonzero (unit columns have max magnitude >= 1/sqrt(m)) is made positive.
    for j in range(r):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-8)
        if nz.size and col[nz[0]] < 0.0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return SvdResult(u=u, sigma=sig, v=v)


def msign_exact(m, tol: float = 1e-12) -> np.ndarray:
    """Exact polar factor U V^T from the compact SVD.

    This is the target every iterative whitening scheme approximates: all
    retained singular values are mapped to exactly 1, singular subspaces are
    untouched. A zero matrix has no polar factor.
    """
    res = svd_compact(m, tol=tol)
    if res.rank == 0:
        raise DegenerateInputError("msign of an all-zero matrix is undefined")
    return res.u @ res.v.T


# -- serialization ----------------------------------------------------------


def matrix_to_json_dict(m) -> dict:
    a = require_matrix(m)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": a.ravel().tolist()}


def matrix_from_json_dict(obj) -> np.ndarray:
    try:
        rows = int(obj["rows"])
        cols = int(obj["cols"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ShapeError(f"matrix JSON needs rows/cols/data: {exc}") from exc
    arr = np.asarray(data, dtype=np.float64)
    if arr.size != rows * cols:
        raise ShapeError(f"matrix JSON data length {arr.size} != rows*cols = {rows * cols}")
    return require_matrix(arr.reshape(rows, cols))


def save_matrix_json(path, m) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(matrix_to_json_dict(m), fh)
        fh.write("\n")


def load_matrix_json(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_json_dict(json.load(fh))


def save_matrix_csv(path, m) -> None:
    a = require_matrix(m)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in a:
            fh.write(",".join(FLOAT_FORMAT % x for x in row))
            fh.write("\n")


def load_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ShapeError("empty matrix CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ShapeError("ragged matrix CSV")
    return require_matrix(np.asarray(rows, dtype=np.float64))
