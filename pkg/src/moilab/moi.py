"""Multiple operator integrals for normal matrices, the analytic-polynomial
route for contractions, finite unitary dilations, and semi-spectral
distributions.

A multiple operator integral with symbol phi sends (X_1, ..., X_n) to the
chain sum over eigenvalue tuples phi(l_1, ..., l_{n+1}) P X_1 P ... X_n P.
Contractions never get eigendecomposed: analytic polynomials act through
monomial expansions, and everything else goes through a finite unitary
dilation whose compressed powers reproduce the contraction's powers up to the
dilation depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityMismatch,
    DimensionMismatch,
    MoiLabError,
    NonUnitaryResult,
    NotAnalyticPolynomial,
    NotContraction,
)
from .funcs import ScalarFunction, divided_difference
from .linalg import (
    CMatrix,
    SpectralDecomposition,
    TOL_CLASS,
    adjoint,
    entrywise_norm,
    hermitian_sqrt_psd,
    op_norm,
    spectral_decompose,
)

TOL_PSD = 1e-9


# ---------------------------------------------------------------------------
# symbols


class MoiSymbol:
    """Base class; a symbol evaluates on (n+1)-tuples of eigenvalues."""

    order: int


@dataclass
class DividedDiff(MoiSymbol):
    """Divided difference f^[n] of a scalar function; confluent tuples allowed."""

    f: ScalarFunction
    order: int

    def __call__(self, args) -> complex:
        return divided_difference(self.f, args)


@dataclass
class RawCallable(MoiSymbol):
    """Arbitrary symbol given directly as a function of the eigenvalue tuple."""

    fn: object
    order: int

    def __call__(self, args) -> complex:
        return complex(self.fn(*args))


@dataclass
class TensorProduct(MoiSymbol):
    """Finite sum of weighted elementary tensors f_1 x ... x f_{n+1}."""

    terms: list  # [(weight, (f_1, ..., f_{n+1})), ...]

    def __post_init__(self):
        arities = {len(fs) for _, fs in self.terms}
        if len(arities) != 1:
            raise ArityMismatch("tensor terms have inconsistent arity")
        self.order = arities.pop() - 1

    def __call__(self, args) -> complex:
        total = 0.0 + 0.0j
        for w, fs in self.terms:
            prod = complex(w)
            for f, z in zip(fs, args):
                prod *= complex(f.deriv(0, z))
            total += prod
        return total


# ---------------------------------------------------------------------------
# MOI for normal operators


def _symbol_cached(symbol):
    cache: dict = {}

    def phi(args):
        key = tuple(args)
        if key not in cache:
            cache[key] = complex(symbol(list(args)))
        return cache[key]

    return phi


def moi_normal(symbol: MoiSymbol, ops: list, x_list: list) -> np.ndarray:
    """Evaluate the MOI of ``symbol`` over spectral decompositions ``ops``
    applied to matrices ``x_list``.

    Each X is rotated into the eigenbases adjacent to its slot and the tuple
    sum is contracted one cluster index at a time, so the full coefficient
    tensor is never materialized; cost scales with the product of cluster
    counts.
    """
    n = len(x_list)
    if len(ops) != n + 1:
        raise ArityMismatch(f"{n} perturbations need {n + 1} operators, got {len(ops)}")
    if getattr(symbol, "order", n) != n:
        raise ArityMismatch(f"symbol order {symbol.order} does not match {n} perturbations")
    dim = ops[0].dim
    for dec in ops:
        if dec.dim != dim:
            raise DimensionMismatch("operator dimensions disagree")
    xs = [x.entries if isinstance(x, CMatrix) else np.asarray(x, dtype=complex) for x in x_list]
    for x in xs:
        if x.shape != (dim, dim):
            raise DimensionMismatch("perturbation dimensions disagree")

    if isinstance(symbol, TensorProduct):
        out = np.zeros((dim, dim), dtype=complex)
        for w, fs in symbol.terms:
            term = ops[0].apply(fs[0])
            for x, dec, f in zip(xs, ops[1:], fs[1:]):
                term = term @ x @ dec.apply(f)
            out += complex(w) * term
        return out

    phi = _symbol_cached(symbol)
    # rotate each X into the adjacent eigenbases
    xt = [adjoint(ops[j].basis) @ xs[j] @ ops[j + 1].basis for j in range(n)]
    groups = [ [np.array(g) for g in dec.index_groups] for dec in ops ]
    lams = [dec.eigenvalues for dec in ops]
    out = np.zeros((dim, dim), dtype=complex)

    def contract(j, args, rows, mat):
        # mat holds S_{c0} Xt_1 S_{c1} ... Xt_j restricted to the leading rows
        if j == n:
            for lam, idx in zip(lams[n], groups[n]):
                out[np.ix_(rows, idx)] += phi(args + (lam,)) * mat[:, idx]
            return
        for lam, idx in zip(lams[j], groups[j]):
            contract(j + 1, args + (lam,), rows, mat[:, idx] @ xt[j][idx, :])

    for lam0, idx0 in zip(lams[0], groups[0]):
        contract(1, (lam0,), idx0, xt[0][idx0, :])
    return ops[0].basis @ out @ adjoint(ops[n].basis)


def moi_normal_naive(symbol: MoiSymbol, ops: list, x_list: list) -> np.ndarray:
    """Brute-force tuple loop over projections; the oracle route."""
    import itertools

    dim = ops[0].dim
    xs = [x.entries if isinstance(x, CMatrix) else np.asarray(x, dtype=complex) for x in x_list]
    out = np.zeros((dim, dim), dtype=complex)
    ranges = [range(len(dec.eigenvalues)) for dec in ops]
    for combo in itertools.product(*ranges):
        args = [ops[j].eigenvalues[c] for j, c in enumerate(combo)]
        term = ops[0].projections[combo[0]]
        for j, x in enumerate(xs):
            term = term @ x @ ops[j + 1].projections[combo[j + 1]]
        out += complex(symbol(args)) * term
    return out


# ---------------------------------------------------------------------------
# MOI for contractions via monomial expansion


def _contraction_entries(t) -> np.ndarray:
    arr = t.entries if isinstance(t, CMatrix) else np.asarray(t, dtype=complex)
    if op_norm(arr) > 1.0 + TOL_CLASS:
        raise NotContraction(f"operator norm {op_norm(arr):.6f} exceeds 1")
    return arr


def moi_contraction_poly(f: ScalarFunction, order: int, ts: list, x_list: list) -> np.ndarray:
    """MOI of the divided difference f^[order] for contractions, with f an
    analytic polynomial.

    Each monomial a_r z^r contributes a_r * sum over p_0+...+p_n = r-n of
    T_1^{p_0} X_1 T_2^{p_1} ... X_n T_{n+1}^{p_n}; the sums are built by the
    recurrence S_j(q) = T_j S_j(q-1) + X_j S_{j+1}(q), never re-expanding
    per-monomial chains.
    """
    if f.kind == "trig_polynomial" and any(m < 0 for m in f.freq_coeffs):
        raise NotAnalyticPolynomial("negative frequencies are not analytic on the disk")
    if f.kind == "trig_polynomial":
        coeffs = np.zeros(f.degree + 1, dtype=complex)
        for m, c in f.freq_coeffs.items():
            coeffs[m] = c
    elif f.kind == "polynomial":
        coeffs = f.coeffs
    else:
        raise NotAnalyticPolynomial("contraction MOI needs a polynomial representation")
    n = order
    if len(ts) != n + 1 or len(x_list) != n:
        raise ArityMismatch(f"order {n} needs {n + 1} contractions and {n} perturbations")
    mats = [_contraction_entries(t) for t in ts]
    xs = [x.entries if isinstance(x, CMatrix) else np.asarray(x, dtype=complex) for x in x_list]
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats) or any(x.shape != (dim, dim) for x in xs):
        raise DimensionMismatch("dimension mismatch among contractions/perturbations")

    d = len(coeffs) - 1
    if n > d:
        return np.zeros((dim, dim), dtype=complex)
    qmax = d - n
    # s_rows[q] = sum over p_j+...+p_n = q of T_j^{p_j} X_{j+1} ... T_{n+1}^{p_n}
    s_rows = [np.linalg.matrix_power(mats[n], q) for q in range(qmax + 1)]
    for j in range(n - 1, -1, -1):
        nxt = [xs[j] @ s_rows[0]]
        for q in range(1, qmax + 1):
            nxt.append(mats[j] @ nxt[q - 1] + xs[j] @ s_rows[q])
        s_rows = nxt
    out = np.zeros((dim, dim), dtype=complex)
    for r in range(n, d + 1):
        if coeffs[r] != 0:
            out += coeffs[r] * s_rows[r - n]
    return out


def poly_eval_matrix(f: ScalarFunction, t) -> np.ndarray:
    """f(T) for an analytic polynomial f and a square matrix T (Horner)."""
    arr = t.entries if isinstance(t, CMatrix) else np.asarray(t, dtype=complex)
    if f.kind != "polynomial":
        raise NotAnalyticPolynomial("matrix Horner evaluation needs a polynomial")
    dim = arr.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(dim)
    for c in f.coeffs[::-1]:
        out = out @ arr + c * eye
    return out


def laurent_eval_matrix(f: ScalarFunction, t) -> np.ndarray:
    """f(T) for a trigonometric polynomial with z^{-k} acting as (T*)^k.

    For unitary T the adjoint is the inverse, so this is the ordinary
    functional calculus; for contractions it is the power-series convention
    with the adjoint standing in for the inverse.
    """
    arr = t.entries if isinstance(t, CMatrix) else np.asarray(t, dtype=complex)
    dim = arr.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for m, c in f.frequencies().items():
        if m >= 0:
            out += c * np.linalg.matrix_power(arr, m)
        else:
            out += c * np.linalg.matrix_power(adjoint(arr), -m)
    return out


# ---------------------------------------------------------------------------
# finite unitary dilation


@dataclass(frozen=True)
class DilationResult:
    """Finite power dilation: P U^k P reproduces T^k for 1 <= k <= depth."""

    unitary: CMatrix
    dim: int
    depth: int

    @property
    def embed(self) -> slice:
        return slice(0, self.dim)

    def compress(self, m: np.ndarray) -> np.ndarray:
        return m[: self.dim, : self.dim]

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Embed an operator on H as P X P on the dilation space."""
        big = np.zeros((self.unitary.dim, self.unitary.dim), dtype=complex)
        big[: self.dim, : self.dim] = x
        return big


def dilate(t: CMatrix, depth: int, tol_unitary: float = 1e-8) -> DilationResult:
    """Finite block unitary dilation of a contraction.

    Layout: first block row (T, 0, ..., 0, D_{T*}), second (D_T, 0, ..., 0,
    -T*), then identity shift blocks feeding the defect channel back, on
    (depth+1) copies of H.  Defect operators are Hermitian PSD square roots
    with negative round-off clipped so the assembled block is unitary to
    tolerance.
    """
    arr = _contraction_entries(t)
    if depth < 1:
        raise MoiLabError("dilation depth must be >= 1")
    dim = arr.shape[0]
    eye = np.eye(dim)
    d_t = hermitian_sqrt_psd(eye - adjoint(arr) @ arr)
    d_tstar = hermitian_sqrt_psd(eye - arr @ adjoint(arr))
    nb = depth + 1
    u = np.zeros((nb * dim, nb * dim), dtype=complex)

    def block(i, j, m):
        u[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = m

    block(0, 0, arr)
    block(0, nb - 1, d_tstar)
    block(1, 0, d_t)
    block(1, nb - 1, -adjoint(arr))
    for i in range(2, nb):
        block(i, i - 1, eye)
    res = entrywise_norm(adjoint(u) @ u - np.eye(nb * dim))
    if res > tol_unitary:
        raise NonUnitaryResult(f"assembled dilation fails unitarity at {res:.2e}")
    return DilationResult(CMatrix(u, "unitary"), dim, depth)


# ---------------------------------------------------------------------------
# semi-spectral distributions


@dataclass(frozen=True)
class SemiSpectralDistribution:
    """Cumulative matrix distribution E(theta) on [0, 2*pi], monotone in the
    PSD order with E(2*pi) = I.

    ``atom_phases``/``atom_masses`` hold the exact compressed spectral atoms of
    the dilation unitary; the grid cumulative is their binned image.  Moments
    and pairings use the atoms, so no grid binning error enters trace checks.
    """

    grid: np.ndarray
    cumulative: np.ndarray  # (G+1, dim, dim)
    atom_phases: np.ndarray
    atom_masses: np.ndarray  # (n_atoms, dim, dim)

    @property
    def dim(self) -> int:
        return self.cumulative.shape[1]

    def moment(self, k: int) -> np.ndarray:
        """Integral of z^k dE, computed from the exact atoms."""
        phases = np.exp(1j * k * self.atom_phases)
        return np.tensordot(phases, self.atom_masses, axes=(0, 0))

    def value(self, theta: float) -> np.ndarray:
        """Cumulative at angle theta (right-continuous in the atom phases)."""
        mask = self.atom_phases <= theta + 1e-15
        if not mask.any():
            return np.zeros((self.dim, self.dim), dtype=complex)
        return np.tensordot(np.ones(int(mask.sum())), self.atom_masses[mask], axes=(0, 0))

    def residuals(self) -> dict:
        eye = np.eye(self.dim)
        herm = max(entrywise_norm(c - adjoint(c)) for c in self.cumulative)
        mono = 0.0
        prev = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self.cumulative:
            inc = (c - prev + adjoint(c - prev)) / 2
            w = np.linalg.eigvalsh(inc)
            mono = min(mono, float(w[0])) if len(w) else mono
            prev = c
        return {
            "terminal": entrywise_norm(self.cumulative[-1] - eye),
            "hermiticity": herm,
            "monotonicity_defect": max(0.0, -mono),
        }


def semi_spectral(t: CMatrix, depth: int, grid_size: int,
                  cluster_tol: float = 1e-12) -> SemiSpectralDistribution:
    """Compression of the dilation unitary's spectral measure onto H.

    Diagonalizes the finite dilation, sorts eigenphases into [0, 2*pi), and
    accumulates the compressed projections both exactly (atoms) and onto a
    uniform theta grid of ``grid_size`` cells.
    """
    if grid_size < 16:
        raise MoiLabError("grid_size must be at least 16")
    dil = dilate(t, depth)
    dec = spectral_decompose(dil.unitary, cluster_tol=cluster_tol)
    phases = []
    masses = []
    for lam, proj in zip(dec.eigenvalues, dec.projections):
        theta = float(np.angle(lam)) % (2.0 * np.pi)
        phases.append(theta)
        masses.append(dil.compress(proj))
    order = np.argsort(phases)
    phases = np.array([phases[i] for i in order])
    masses = np.array([masses[i] for i in order])

    grid = np.linspace(0.0, 2.0 * np.pi, grid_size + 1)
    dim = dil.dim
    cumulative = np.zeros((grid_size + 1, dim, dim), dtype=complex)
    acc = np.zeros((dim, dim), dtype=complex)
    ai = 0
    for j, theta in enumerate(grid):
        while ai < len(phases) and phases[ai] <= theta + 1e-15:
            acc = acc + masses[ai]
            ai += 1
        cumulative[j] = acc
    while ai < len(phases):  # phases numerically just below 2*pi
        cumulative[-1] = cumulative[-1] + masses[ai]
        ai += 1
    return SemiSpectralDistribution(grid, cumulative, phases, masses)
