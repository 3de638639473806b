"""Dense complex matrix arithmetic, spectral decompositions, and Schatten norms.

Normal matrices are diagonalized by splitting into commuting Hermitian parts
X = (A + A*)/2 and Y = (A - A*)/(2i) and diagonalizing a random real
combination alpha*X + beta*Y, which breaks degeneracy generically and avoids
a non-symmetric eigensolver.  Contractions are never eigendecomposed here;
they are handled by polynomial expansion or unitary dilation in `moi`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceFailure,
    InvalidExponent,
    MoiLabError,
    NotHermitian,
    NotNormal,
)

TOL_CLASS = 1e-10
TOL_SPEC = 1e-10
CLUSTER_TOL = 1e-8

#: matrix classes a CMatrix may be tagged with
CLASS_TAGS = ("hermitian", "unitary", "normal", "contraction", "general")

# seeds the retry sequence for the random Hermitian combination; fixed so that
# spectral_decompose is deterministic without taking a seed parameter
_COMBO_SEED = 0x5D1A7E


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def entrywise_norm(a: np.ndarray) -> float:
    """Largest entry modulus; the tolerance metric for class checks."""
    return float(np.max(np.abs(a))) if a.size else 0.0


@dataclass(frozen=True)
class CMatrix:
    """Dense complex square matrix with an advisory operator-class tag."""

    entries: np.ndarray
    class_tag: str = "general"

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise MoiLabError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr.view(float))):
            raise MoiLabError("matrix entries must be finite")
        if self.class_tag not in CLASS_TAGS:
            raise MoiLabError(f"unknown class tag {self.class_tag!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def class_residual(self, tag: str | None = None) -> float:
        """Residual of the class membership check; 0.0 for 'general'."""
        tag = self.class_tag if tag is None else tag
        a = self.entries
        eye = np.eye(self.dim)
        if tag == "hermitian":
            return entrywise_norm(a - adjoint(a))
        if tag == "unitary":
            return entrywise_norm(adjoint(a) @ a - eye)
        if tag == "normal":
            return entrywise_norm(adjoint(a) @ a - a @ adjoint(a))
        if tag == "contraction":
            return max(0.0, op_norm(a) - 1.0)
        return 0.0

    def check_class(self, tol: float = TOL_CLASS) -> None:
        res = self.class_residual()
        if res > tol:
            raise MoiLabError(
                f"matrix tagged {self.class_tag!r} fails class check: residual {res:.3e} > {tol:.1e}"
            )


def _as_array(a) -> np.ndarray:
    return a.entries if isinstance(a, CMatrix) else np.asarray(a, dtype=complex)


def op_norm(a) -> float:
    """Operator norm (largest singular value)."""
    arr = _as_array(a)
    return float(np.linalg.svd(arr, compute_uv=False)[0]) if arr.size else 0.0


def schatten_norm(a, p: float) -> float:
    """Schatten p-norm via singular values; ``p = inf`` is the operator norm."""
    if p != np.inf and p < 1:
        raise InvalidExponent(f"Schatten exponent must satisfy p >= 1, got {p}")
    sv = np.linalg.svd(_as_array(a), compute_uv=False)
    if p == np.inf:
        return float(sv[0])
    return float(np.sum(sv**p) ** (1.0 / p))


def hermitian_sqrt_psd(a: np.ndarray) -> np.ndarray:
    """PSD square root of a Hermitian matrix, clamping round-off negatives to 0."""
    w, q = np.linalg.eigh((a + adjoint(a)) / 2)
    return (q * np.sqrt(np.maximum(w, 0.0))) @ adjoint(q)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered eigenvalues and orthogonal spectral projections of a normal matrix.

    ``basis`` holds orthonormal eigenvectors as columns and ``index_groups``
    the column ranges belonging to each clustered eigenvalue, so that
    ``projections[i] = Q[:, g] @ Q[:, g].conj().T``.
    """

    eigenvalues: tuple
    multiplicities: tuple
    projections: tuple
    basis: np.ndarray
    index_groups: tuple = field(repr=False, default=())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for lam, proj in zip(self.eigenvalues, self.projections):
            out += lam * proj
        return out

    def apply(self, f) -> np.ndarray:
        """Evaluate the scalar function ``f`` on the operator."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for lam, proj in zip(self.eigenvalues, self.projections):
            out += complex(f(lam)) * proj
        return out

    def residuals(self, a: np.ndarray) -> dict:
        eye = np.eye(self.dim)
        psum = sum(self.projections)
        res = {
            "completeness": entrywise_norm(psum - eye),
            "reconstruction": entrywise_norm(self.reconstruct() - a),
        }
        ortho = 0.0
        herm = 0.0
        for i, p in enumerate(self.projections):
            herm = max(herm, entrywise_norm(p - adjoint(p)))
            for j, q in enumerate(self.projections):
                prod = p @ q
                ortho = max(ortho, entrywise_norm(prod - (p if i == j else 0.0)))
        res["orthogonality"] = ortho
        res["hermiticity"] = herm
        return res


def _cluster_indices(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clustering of complex values at tolerance ``tol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = list(groups.values())
    out.sort(key=lambda g: (np.mean(values[g]).real, np.mean(values[g]).imag))
    return out


def spectral_decompose(a: CMatrix, cluster_tol: float = CLUSTER_TOL,
                       tol_class: float = TOL_CLASS,
                       tol_spec: float = TOL_SPEC) -> SpectralDecomposition:
    """Eigendecompose a normal matrix into clustered eigenvalues and projections.

    Eigenvalues closer than ``cluster_tol`` are merged (single linkage) into a
    single projection, so confluent divided differences downstream see
    consistent node multiplicities.
    """
    if a.class_tag not in ("hermitian", "unitary", "normal"):
        raise NotNormal(f"cannot eigendecompose a matrix tagged {a.class_tag!r}")
    arr = a.entries
    res = a.class_residual("normal")
    if res > tol_class:
        raise NotNormal(f"normality residual {res:.3e} exceeds {tol_class:.1e}")
    a.check_class(tol_class)

    x = (arr + adjoint(arr)) / 2
    y = (arr - adjoint(arr)) / 2j
    scale = max(1.0, entrywise_norm(arr))
    rng = np.random.default_rng(_COMBO_SEED)
    basis = None
    if a.class_tag == "hermitian":
        _, basis = np.linalg.eigh(x)
    else:
        for attempt in range(8):
            alpha, beta = (1.0, 0.5 * np.sqrt(2.0)) if attempt == 0 else rng.standard_normal(2)
            _, q = np.linalg.eigh(alpha * x + beta * y)
            d = adjoint(q) @ arr @ q
            if entrywise_norm(d - np.diag(np.diag(d))) <= 1e-11 * scale * a.dim:
                basis = q
                break
        if basis is None:
            raise ConvergenceFailure("no random Hermitian combination separated the spectrum")

    lam = np.diag(adjoint(basis) @ x @ basis).real + 1j * np.diag(adjoint(basis) @ y @ basis).real
    groups = _cluster_indices(lam, cluster_tol)

    eigenvalues = []
    multiplicities = []
    projections = []
    index_groups = []
    for g in groups:
        rep = complex(np.mean(lam[g]))
        if a.class_tag == "hermitian":
            rep = complex(rep.real)
        elif a.class_tag == "unitary":
            rep = rep / abs(rep)
        cols = basis[:, g]
        eigenvalues.append(rep)
        multiplicities.append(len(g))
        projections.append(cols @ adjoint(cols))
        index_groups.append(tuple(g))

    dec = SpectralDecomposition(
        eigenvalues=tuple(eigenvalues),
        multiplicities=tuple(multiplicities),
        projections=tuple(projections),
        basis=basis,
        index_groups=tuple(index_groups),
    )
    bad = {k: v for k, v in dec.residuals(arr).items() if v > tol_spec}
    if bad:
        raise ConvergenceFailure(f"spectral decomposition failed tolerance {tol_spec:.1e}: {bad}")
    return dec


def exp_skew(a: CMatrix, s: float) -> CMatrix:
    """exp(i*s*A) for Hermitian A, computed spectrally; the result is unitary."""
    if a.class_residual("hermitian") > TOL_CLASS:
        raise NotHermitian("exp_skew requires a Hermitian argument")
    w, q = np.linalg.eigh(a.entries)
    u = (q * np.exp(1j * s * w)) @ adjoint(q)
    return CMatrix(u, "unitary")


def random_operator(kind: str, dim: int, seed: int, margin: float = 0.05) -> CMatrix:
    """Seeded random matrix of the requested class; identical seeds give identical output."""
    if dim < 1:
        raise MoiLabError("dimension must be positive")
    rng = np.random.default_rng(np.uint64(seed))
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    if kind == "hermitian":
        return CMatrix((g + adjoint(g)) / 2, "hermitian")
    if kind == "unitary":
        q, r = np.linalg.qr(g)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return CMatrix(q, "unitary")
    if kind == "contraction":
        top = np.linalg.svd(g, compute_uv=False)[0]
        return CMatrix(g * ((1.0 - margin) / top), "contraction")
    if kind == "psd":
        b = adjoint(g) @ g
        return CMatrix(b / op_norm(b), "hermitian")
    raise MoiLabError(f"unknown random operator kind {kind!r}")


def trial_seed(seed: int, index: int) -> int:
    """Per-trial seed derived by XOR so worker scheduling cannot affect results."""
    return int(np.uint64(seed) ^ np.uint64(index))
