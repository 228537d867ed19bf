"""Dense numerical kernels.

Householder reduced QR, a cyclic-Jacobi reference eigensolver, bottom-K
eigenvector extraction by orthogonal iteration, Lloyd's k-means with
k-means++ seeding, and the non-federated spectral clustering pipeline that
serves as the gold standard for every experiment.

Everything is float64 and deterministic for fixed seeds. numpy is used for
array arithmetic only; the factorizations themselves are implemented here
so their sign conventions and failure modes are pinned.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import Diagnostics
from .errors import ContractError, ConvergenceError, RankError
from .graph import Graph, normalized_laplacian
from .seeding import embedding_seed, kmeans_seed

__all__ = [
    "reduced_qr",
    "symmetric_eig_reference",
    "bottom_k_eigenvectors",
    "kmeans",
    "cluster_embedding_rows",
    "spectral_cluster",
    "global_spectral_clustering",
    "REFERENCE_EIG_MAX_N",
]

# Size cutoff for the "auto" eigensolver strategy: the dense reference
# solver below this, orthogonal iteration above.
REFERENCE_EIG_MAX_N = 256

RANK_TOL = 1e-12


def reduced_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduced QR of an N x K matrix, N >= K.

    Returns (q, r) with a = q @ r, q orthonormal columns, r upper
    triangular with non-negative diagonal (the sign convention that makes
    the factorization unique and runs deterministic).

    Raises
    ------
    RankError
        If any |r[j, j]| < 1e-12 after factorization, naming the column.
    ContractError
        If N < K.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ContractError("reduced_qr expects a 2-d matrix")
    n, k = a.shape
    if n < k:
        raise ContractError(f"reduced_qr needs N >= K, got {n} x {k}")

    r = a.copy()
    reflectors: list[np.ndarray | None] = []
    for j in range(k):
        x = r[j:, j]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            reflectors.append(None)
            continue
        v = x.copy()
        v[0] += norm if x[0] >= 0 else -norm
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            reflectors.append(None)
            continue
        v /= vnorm
        r[j:, j:] -= 2.0 * np.outer(v, v @ r[j:, j:])
        reflectors.append(v)

    q = np.eye(n, k)
    for j in range(k - 1, -1, -1):
        v = reflectors[j]
        if v is None:
            continue
        q[j:, :] -= 2.0 * np.outer(v, v @ q[j:, :])

    r = np.triu(r[:k, :])
    flip = np.diagonal(r) < 0
    if flip.any():
        r[flip, :] *= -1.0
        q[:, flip] *= -1.0

    small = np.abs(np.diagonal(r)) < RANK_TOL
    if small.any():
        j = int(np.argmax(small))
        raise RankError(f"rank-deficient input at column {j} (|r[{j},{j}]| < {RANK_TOL})")
    return q, r


def _fix_column_signs(vectors: np.ndarray) -> None:
    """Flip columns in place so each one's first nonzero component is positive."""
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        first = int(np.argmax(mags > 1e-12 * top))
        if col[first] < 0:
            col *= -1.0


def symmetric_eig_reference(
    a: np.ndarray, *, symmetry_tol: float = 1e-10, max_sweeps: int = 50
) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues ascending, eigenvectors as columns in matching
    order). Each eigenvector's first nonzero component is positive. This is
    the test oracle and the small-instance workhorse; intended for N up to
    a couple thousand.

    Raises
    ------
    ContractError
        If the input is not symmetric to within ``symmetry_tol``.
    ConvergenceError
        If the off-diagonal mass has not vanished after ``max_sweeps``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("expected a square matrix")
    n = a.shape[0]
    if n == 0:
        raise ContractError("expected a non-empty matrix")
    if np.abs(a - a.T).max() > symmetry_tol:
        raise ContractError("matrix is not symmetric within tolerance")

    work = 0.5 * (a + a.T)
    vectors = np.eye(n)
    scale = np.linalg.norm(work)
    if n == 1 or scale == 0.0:
        vals = np.diagonal(work).copy()
        order = np.argsort(vals, kind="stable")
        return vals[order], vectors[:, order]

    off_tol = n * np.finfo(np.float64).eps * scale
    skip_tol = off_tol / n
    converged = False
    for _ in range(max_sweeps + 1):
        # square the off-diagonal directly: the fro^2 - diag^2 shortcut
        # cancels catastrophically once the off mass is tiny
        off = work.copy()
        np.fill_diagonal(off, 0.0)
        off_sq = float((off * off).sum())
        if off_sq <= off_tol * off_tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= skip_tol:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0
                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q
    if not converged:
        raise ConvergenceError(f"Jacobi sweeps did not converge within {max_sweeps}")

    vals = np.diagonal(work).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vectors = vectors[:, order]
    _fix_column_signs(vectors)
    return vals, vectors


def _subspace_drift(old: np.ndarray, new: np.ndarray) -> float:
    """Largest-principal-angle sine between consecutive orthonormal bases."""
    residual = new - old @ (old.T @ new)
    return float(np.linalg.norm(residual, ord=2))


def bottom_k_eigenvectors(
    lap: np.ndarray,
    k: int,
    seed: int,
    *,
    tol: float = 1e-9,
    max_sweeps: int = 1000,
    diag: Diagnostics | None = None,
) -> np.ndarray:
    """Orthonormal basis for the K smallest eigenvalues of a Laplacian.

    Orthogonal iteration with a QR re-orthonormalization every sweep. The
    iteration multiplier is I - L/2: its spectrum 1 - lambda/2 lies in
    [0, 1] and decreases with lambda, so the dominant subspace is exactly
    the bottom-K Laplacian subspace for every graph (the raw I - L
    multiplier would be beaten by eigenvalues near 2). Converges when the
    subspace angle between sweeps falls below ``tol``; hitting the sweep
    cap is flagged in diagnostics, not an error, since a degenerate gap at
    the K boundary makes the limit an arbitrary invariant subspace.

    A final Rayleigh-Ritz rotation orders the columns by ascending Ritz
    value and applies the first-nonzero-positive sign convention, so the
    output approximates the reference solver's bottom-K block.
    """
    lap = np.asarray(lap, dtype=np.float64)
    n = lap.shape[0]
    if lap.ndim != 2 or lap.shape[1] != n:
        raise ContractError("expected a square Laplacian")
    if not 1 <= k <= n:
        raise ContractError(f"need 1 <= k <= {n}, got {k}")

    multiplier = np.eye(n) - 0.5 * lap
    rng = np.random.default_rng(seed)
    basis, _ = reduced_qr(rng.standard_normal((n, k)))
    converged = False
    drift = np.inf
    for _ in range(max_sweeps):
        candidate, _ = reduced_qr(multiplier @ basis)
        drift = _subspace_drift(basis, candidate)
        basis = candidate
        if drift < tol:
            converged = True
            break
    if not converged and diag is not None:
        diag.flag(f"bottom_k: sweep cap {max_sweeps} reached (drift {drift:.3e})")

    # Rayleigh-Ritz: rotate within the converged subspace to approximate
    # the individual eigenvectors, ordered by ascending eigenvalue.
    projected = basis.T @ (lap @ basis)
    _, rotation = symmetric_eig_reference(0.5 * (projected + projected.T))
    basis = basis @ rotation
    _fix_column_signs(basis)
    return basis


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    *,
    max_iter: int = 300,
    objective_history: list[float] | None = None,
) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic for fixed (points, k, seed). Stops when no label changes
    or after ``max_iter`` iterations. An empty cluster is repaired by
    reassigning the point farthest from its current centroid (ties break to
    the lowest index). Never fails on degenerate geometry: with fewer than
    k distinct rows, duplicates simply share labels.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ContractError("kmeans expects a 2-d matrix of row points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"need 1 <= k <= {n}, got {k}")

    rng = np.random.default_rng(seed)
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    dist_sq = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(dist_sq.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            threshold = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(dist_sq), threshold)), n - 1)
        centers[c] = points[idx]
        dist_sq = np.minimum(dist_sq, ((points - centers[c]) ** 2).sum(axis=1))

    labels = None
    for _ in range(max_iter):
        sq = (
            (points * points).sum(axis=1)[:, None]
            + (centers * centers).sum(axis=1)[None, :]
            - 2.0 * (points @ centers.T)
        )
        np.maximum(sq, 0.0, out=sq)
        new_labels = np.argmin(sq, axis=1)
        assigned = sq[np.arange(n), new_labels].copy()

        counts = np.bincount(new_labels, minlength=k)
        while (counts == 0).any():
            empty = int(np.argmax(counts == 0))
            movable = counts[new_labels] >= 2
            candidates = np.where(movable, assigned, -np.inf)
            mover = int(np.argmax(candidates))
            counts[new_labels[mover]] -= 1
            new_labels[mover] = empty
            counts[empty] += 1
            assigned[mover] = 0.0

        if objective_history is not None:
            objective_history.append(float(assigned.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            centers[c] = points[members].mean(axis=0)
    return labels


def cluster_embedding_rows(
    embedding: np.ndarray, k: int, seed: int, *, normalize_rows: bool = False
) -> np.ndarray:
    """k-means over the rows of an N x K embedding.

    ``normalize_rows`` rescales each row to unit length first (zero rows
    stay zero); off by default, matching the plain eigenvector-embedding
    pipeline.
    """
    points = np.asarray(embedding, dtype=np.float64)
    if normalize_rows:
        norms = np.linalg.norm(points, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        points = points / safe[:, None]
    return kmeans(points, k, seed)


def spectral_cluster(
    lap: np.ndarray,
    k: int,
    seed: int,
    *,
    method: str = "auto",
    normalize_rows: bool = False,
    diag: Diagnostics | None = None,
) -> np.ndarray:
    """Laplacian in, cluster labels out.

    Bottom-K embedding (dense reference solver or orthogonal iteration,
    chosen by ``method``: "auto" switches on REFERENCE_EIG_MAX_N) followed
    by k-means on the node rows. Seeds for the embedding init and the
    k-means stream are derived from ``seed`` with fixed role labels, so
    every caller of this pipeline agrees bit for bit.
    """
    n = lap.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"need 1 <= k <= {n}, got {k}")
    if method == "auto":
        method = "reference" if n <= REFERENCE_EIG_MAX_N else "iteration"
    if method == "reference":
        _, vectors = symmetric_eig_reference(lap)
        embedding = vectors[:, :k]
    elif method == "iteration":
        embedding = bottom_k_eigenvectors(lap, k, embedding_seed(seed), diag=diag)
    else:
        raise ContractError(f"unknown eigensolver method {method!r}")
    return cluster_embedding_rows(
        embedding, k, kmeans_seed(seed), normalize_rows=normalize_rows
    )


def global_spectral_clustering(
    g: Graph,
    k: int,
    seed: int,
    *,
    method: str = "auto",
    normalize_rows: bool = False,
    diag: Diagnostics | None = None,
) -> np.ndarray:
    """Spectral clustering of the whole, undistributed graph.

    This is the reference labeling every federated output is scored
    against. Deterministic for fixed (g, k, seed).
    """
    if not 1 <= k <= g.num_nodes:
        raise ContractError(f"need 1 <= k <= {g.num_nodes}, got {k}")
    lap = normalized_laplacian(g)
    return spectral_cluster(
        lap, k, seed, method=method, normalize_rows=normalize_rows, diag=diag
    )
