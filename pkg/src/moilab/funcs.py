"""Scalar test functions, divided differences with confluent nodes, B-spline
(Peano) kernels realizing divided differences as densities, and quadrature.

A divided difference of order n over real nodes equals the integral of the
n-th derivative against a nonnegative kernel of total mass 1/n!; the kernel is
built here as an exact piecewise polynomial so that pairings with polynomial
test functions incur no quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateKnots,
    InsufficientDerivatives,
    InvalidPointCount,
    MoiLabError,
    NotTrigPolynomial,
)

NODE_MERGE_TOL = 1e-7

DOMAINS = ("real_line", "circle", "disk")


def falling_factorial(m: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= m - i
    return out


# ---------------------------------------------------------------------------
# scalar functions


class ScalarFunction:
    """Test function with evaluable derivatives on a declared domain.

    Three representations: analytic polynomial (real line or closed disk),
    trigonometric (Laurent) polynomial on the unit circle, or a callable
    supplying derivatives up to a declared order.
    """

    def __init__(self, kind, domain, *, coeffs=None, freq_coeffs=None,
                 deriv_fn=None, n_max=None, taylor_fn=None, label=""):
        if domain not in DOMAINS:
            raise MoiLabError(f"unknown domain {domain!r}")
        self.kind = kind
        self.domain = domain
        self.label = label
        if kind == "polynomial":
            c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
            while len(c) > 1 and c[-1] == 0:
                c = c[:-1]
            self.coeffs = c
        elif kind == "trig_polynomial":
            self.freq_coeffs = {int(m): complex(c) for m, c in dict(freq_coeffs).items()
                                if c != 0} or {0: 0.0j}
        elif kind == "callable":
            self.deriv_fn = deriv_fn
            self.n_max = math.inf if n_max is None else int(n_max)
            self.taylor_fn = taylor_fn
        else:
            raise MoiLabError(f"unknown representation {kind!r}")

    # -- constructors

    @classmethod
    def polynomial(cls, coeffs, domain="real_line", label=""):
        if domain == "circle":
            raise MoiLabError("use trig_polynomial for circle-domain functions")
        return cls("polynomial", domain, coeffs=coeffs, label=label)

    @classmethod
    def trig_polynomial(cls, freq_coeffs, label=""):
        return cls("trig_polynomial", "circle", freq_coeffs=freq_coeffs, label=label)

    @classmethod
    def from_callable(cls, deriv_fn, domain="real_line", n_max=None, taylor_fn=None, label=""):
        """``deriv_fn(k, z)`` returns the k-th derivative at z (k=0 is the value)."""
        return cls("callable", domain, deriv_fn=deriv_fn, n_max=n_max,
                   taylor_fn=taylor_fn, label=label)

    # -- evaluation

    def __call__(self, z):
        return self.deriv(0, z)

    def eval(self, z):
        return self.deriv(0, z)

    def deriv(self, k: int, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "polynomial":
            c = self.coeffs
            out = np.zeros_like(z)
            for m in range(len(c) - 1, k - 1, -1):
                out = out * z + c[m] * falling_factorial(m, k)
            return out
        if self.kind == "trig_polynomial":
            out = np.zeros_like(z)
            for m, c in self.freq_coeffs.items():
                out = out + c * falling_factorial(m, k) * z ** (m - k)
            return out
        if k > self.n_max:
            raise InsufficientDerivatives(
                f"function supplies derivatives up to order {self.n_max}, requested {k}")
        return self.deriv_fn(k, z)

    # -- representation queries

    @property
    def degree(self) -> int:
        if self.kind == "polynomial":
            return len(self.coeffs) - 1
        if self.kind == "trig_polynomial":
            return max(abs(m) for m in self.freq_coeffs)
        raise MoiLabError("callable functions have no degree")

    def taylor_coefficients(self, count: int) -> np.ndarray:
        """First ``count`` Taylor coefficients at 0 (disk-domain functions)."""
        if self.kind == "polynomial":
            out = np.zeros(count, dtype=complex)
            upto = min(count, len(self.coeffs))
            out[:upto] = self.coeffs[:upto]
            return out
        if self.kind == "callable" and self.taylor_fn is not None:
            return np.array([complex(self.taylor_fn(j)) for j in range(count)])
        raise MoiLabError("no Taylor coefficients available for this function")

    def frequencies(self) -> dict:
        """Laurent coefficients {m: c_m}; analytic polynomials map to m >= 0."""
        if self.kind == "trig_polynomial":
            return dict(self.freq_coeffs)
        if self.kind == "polynomial":
            return {m: c for m, c in enumerate(self.coeffs) if c != 0}
        raise NotTrigPolynomial("function has no finite frequency representation")


def exp_function(domain="real_line"):
    if domain == "real_line":
        return ScalarFunction.from_callable(lambda k, z: np.exp(z), domain, label="exp")
    return ScalarFunction.from_callable(
        lambda k, z: np.exp(z), domain, taylor_fn=lambda j: 1.0 / math.factorial(j), label="exp")


def sin_function():
    cycle = (np.sin, np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z))
    return ScalarFunction.from_callable(lambda k, z: cycle[k % 4](z), "real_line", label="sin")


def cos_function():
    cycle = (np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z), np.sin)
    return ScalarFunction.from_callable(lambda k, z: cycle[k % 4](z), "real_line", label="cos")


def scaled_sin(omega: float, phase: float = 0.0):
    """sin(omega*x + phase); sup norm of the k-th derivative on R is omega**k."""
    return ScalarFunction.from_callable(
        lambda k, z: omega**k * np.sin(omega * z + phase + k * np.pi / 2),
        "real_line", label=f"sin({omega}x+{phase:.2f})")


# ---------------------------------------------------------------------------
# node handling


@dataclass(frozen=True)
class NodeList:
    """Ordered evaluation nodes (repetitions allowed) with a domain tag."""

    values: tuple
    domain: str = "real_line"

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.values)
        if len(vals) < 1:
            raise MoiLabError("at least one node required")
        if self.domain == "real_line":
            bad = max(abs(v.imag) for v in vals)
        elif self.domain == "circle":
            bad = max(abs(abs(v) - 1.0) for v in vals)
        elif self.domain == "disk":
            bad = max(max(abs(v) - 1.0, 0.0) for v in vals)
        else:
            raise MoiLabError(f"unknown domain {self.domain!r}")
        if bad > 1e-9:
            raise MoiLabError(f"nodes leave the {self.domain} domain by {bad:.2e}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)


def _node_values(nodes) -> list[complex]:
    if isinstance(nodes, NodeList):
        return list(nodes.values)
    return [complex(v) for v in nodes]


def _merge_nodes(values: list[complex], tol: float) -> list[complex]:
    """Sort nodes and replace clusters within ``tol`` by their mean (single linkage)."""
    order = sorted(range(len(values)), key=lambda i: (values[i].real, values[i].imag))
    vals = [values[i] for i in order]
    merged: list[list[complex]] = []
    for v in vals:
        if merged and any(abs(v - u) <= tol for u in merged[-1]):
            merged[-1].append(v)
        else:
            merged.append([v])
    out: list[complex] = []
    for grp in merged:
        rep = complex(np.mean(grp))
        out.extend([rep] * len(grp))
    return out


def divided_difference(f: ScalarFunction, nodes, node_merge_tol: float = NODE_MERGE_TOL) -> complex:
    """Confluent divided difference f^[n] over the given nodes.

    Nodes within ``node_merge_tol`` are treated as equal and the Hermite table
    is seeded with f^(j)/j! there; the naive recursion is catastrophically
    ill-conditioned near coalescence.
    """
    zs = _merge_nodes(_node_values(nodes), node_merge_tol)
    n = len(zs) - 1
    table = [[None] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][i] = complex(f.deriv(0, zs[i]))
    for width in range(1, n + 1):
        for i in range(n + 1 - width):
            j = i + width
            if zs[i] == zs[j]:
                table[i][j] = complex(f.deriv(width, zs[i])) / math.factorial(width)
            else:
                table[i][j] = (table[i + 1][j] - table[i][j - 1]) / (zs[j] - zs[i])
    return table[0][n]


def hermite_genocchi_oracle(f: ScalarFunction, nodes, quad_points: int = 32) -> complex:
    """Divided difference over real nodes as a simplex integral of f^(n).

    Tensorized Gauss-Legendre quadrature on the standard simplex; an
    independent oracle for `divided_difference`, converging as ``quad_points``
    grows (exact only in the limit for non-polynomial f).
    """
    vals = _node_values(nodes)
    if max(abs(v.imag) for v in vals) > 1e-9:
        raise MoiLabError("the simplex oracle requires real nodes")
    xs = np.array([v.real for v in vals])
    n = len(xs) - 1
    if n == 0:
        return complex(f.deriv(0, xs[0]))
    u, w = quadrature("gauss_legendre_01", quad_points)
    grids = np.meshgrid(*([u] * n), indexing="ij")
    weights = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * n), indexing="ij"):
        weights = weights * g
    ts = []
    shrink = np.ones_like(grids[0])
    jac = np.ones_like(grids[0])
    for i in range(n):
        ts.append(grids[i] * shrink)
        jac = jac * shrink
        shrink = shrink * (1.0 - grids[i])
    pts = xs[0] * np.ones_like(grids[0], dtype=complex)
    for i in range(n):
        pts = pts + ts[i] * (xs[i + 1] - xs[0])
    vals_n = f.deriv(n, pts)
    return complex(np.sum(weights * jac * vals_n))


# ---------------------------------------------------------------------------
# piecewise polynomials


@dataclass
class PiecewisePoly:
    """Piecewise polynomial on consecutive intervals; zero outside the breaks.

    ``coeffs[l]`` holds low-to-high coefficients valid on
    ``[breaks[l], breaks[l+1])``.
    """

    breaks: np.ndarray
    coeffs: list

    @classmethod
    def zero(cls):
        return cls(np.zeros(0), [])

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        if len(self.breaks):
            idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0,
                          len(self.coeffs) - 1)
            inside = (x >= self.breaks[0]) & (x <= self.breaks[-1])
            for l in np.unique(idx[inside]):
                sel = inside & (idx == l)
                c = self.coeffs[l]
                v = np.zeros(np.count_nonzero(sel), dtype=complex)
                for a in c[::-1]:
                    v = v * x[sel] + a
                out[sel] = v
        return out if out.size > 1 else complex(out[0])

    def integrate(self) -> complex:
        total = 0.0 + 0.0j
        for l, c in enumerate(self.coeffs):
            a, b = self.breaks[l], self.breaks[l + 1]
            anti = np.concatenate([[0.0], c / (np.arange(len(c)) + 1.0)])
            total += np.polyval(anti[::-1], b) - np.polyval(anti[::-1], a)
        return complex(total)

    def integrate_against(self, fn, gl_points: int = 24) -> complex:
        """Integral of fn(x) * p(x); Gauss-Legendre per piece, exact for
        polynomial ``fn`` of modest degree."""
        u, w = quadrature("gauss_legendre_01", gl_points)
        total = 0.0 + 0.0j
        for l, c in enumerate(self.coeffs):
            a, b = self.breaks[l], self.breaks[l + 1]
            if b <= a:
                continue
            x = a + (b - a) * u
            px = np.zeros_like(x, dtype=complex)
            for coef in c[::-1]:
                px = px * x + coef
            total += (b - a) * np.sum(w * np.asarray(fn(x), dtype=complex) * px)
        return complex(total)

    def sample_points(self) -> np.ndarray:
        """Breakpoints and interval midpoints (positivity checks run here)."""
        if not len(self.breaks):
            return np.zeros(0)
        mids = (self.breaks[:-1] + self.breaks[1:]) / 2
        return np.sort(np.concatenate([self.breaks, mids]))

    def l1_norm(self) -> float:
        """Integral of |p|; exact via sign changes for real pieces, quadrature
        refined at real/imaginary roots otherwise."""
        total = 0.0
        u, w = quadrature("gauss_legendre_01", 24)
        for l, c in enumerate(self.coeffs):
            a, b = self.breaks[l], self.breaks[l + 1]
            if b <= a:
                continue
            cuts = {a, b}
            for part in (c.real, c.imag):
                if np.max(np.abs(part)) == 0:
                    continue
                deg = len(part) - 1
                while deg > 0 and part[deg] == 0:
                    deg -= 1
                if deg > 0:
                    for r in np.roots(part[deg::-1]):
                        if abs(r.imag) < 1e-12 and a < r.real < b:
                            cuts.add(float(r.real))
            edges = sorted(cuts)
            imag_scale = float(np.max(np.abs(c.imag))) if len(c) else 0.0
            real_piece = imag_scale <= 1e-13 * max(1.0, float(np.max(np.abs(c.real))))
            for lo, hi in zip(edges[:-1], edges[1:]):
                if real_piece:
                    anti = np.concatenate([[0.0], c.real / (np.arange(len(c)) + 1.0)])
                    seg = np.polyval(anti[::-1], hi) - np.polyval(anti[::-1], lo)
                    total += abs(seg)
                else:
                    x = lo + (hi - lo) * u
                    px = np.zeros_like(x, dtype=complex)
                    for coef in c[::-1]:
                        px = px * x + coef
                    total += (hi - lo) * float(np.sum(w * np.abs(px)))
        return total


def sum_pieces(triples) -> PiecewisePoly:
    """Sum of polynomial pieces given as (lo, hi, coeffs) triples."""
    triples = [(a, b, np.asarray(c, dtype=complex)) for a, b, c in triples if b > a]
    if not triples:
        return PiecewisePoly.zero()
    breaks = np.unique(np.concatenate([[a for a, _, _ in triples],
                                       [b for _, b, _ in triples]]))
    width = max(len(c) for _, _, c in triples)
    table = np.zeros((len(breaks) - 1, width), dtype=complex)
    for a, b, c in triples:
        i0 = int(np.searchsorted(breaks, a))
        i1 = int(np.searchsorted(breaks, b))
        table[i0:i1, : len(c)] += c
    return PiecewisePoly(breaks, [table[l] for l in range(len(breaks) - 1)])


# ---------------------------------------------------------------------------
# Peano kernels


@dataclass(frozen=True)
class PeanoKernel:
    """Nonnegative kernel of mass 1/n! with f^[n](knots) = integral of f^(n) * kernel."""

    knots: tuple
    order: int
    pieces: PiecewisePoly

    def eval(self, x):
        return self.pieces.eval(x)

    def mass(self) -> float:
        return float(self.pieces.integrate().real)

    def pair(self, f: ScalarFunction, gl_points: int = 24) -> complex:
        return self.pieces.integrate_against(lambda x: f.deriv(self.order, x), gl_points)


def _shifted_power(c: float, q: int) -> np.ndarray:
    """(c - x)**q as low-to-high coefficients in x."""
    return np.array([math.comb(q, k) * c ** (q - k) * (-1.0) ** k for k in range(q + 1)],
                    dtype=complex)


def peano_kernel(nodes, node_spread_min: float = NODE_MERGE_TOL,
                 node_merge_tol: float = NODE_MERGE_TOL) -> PeanoKernel:
    """B-spline kernel of the divided difference over real nodes.

    Built per interval from confluent divided differences (in the knot
    variable) of truncated powers, carried as exact polynomials in x.  Raises
    `DegenerateKnots` when all knots coincide; the caller then uses the point
    mass of weight 1/n! instead.
    """
    vals = _node_values(nodes)
    if max(abs(v.imag) for v in vals) > 1e-9:
        raise MoiLabError("Peano kernels are a real-line device")
    xs = _merge_nodes([complex(v.real) for v in vals], node_merge_tol)
    knots = [v.real for v in xs]
    n = len(knots) - 1
    if n < 1 or knots[-1] - knots[0] < node_spread_min or len(set(knots)) < 2:
        raise DegenerateKnots(f"knot spread below {node_spread_min:.1e}")
    distinct = sorted(set(knots))
    triples = []
    for lo, hi in zip(distinct[:-1], distinct[1:]):
        # divided difference over the knots, in t, of (t-x)_+^(n-1) with the
        # threshold between lo and hi; entries are x-polynomials
        on = [z >= hi for z in knots]
        table: list[list] = [[None] * (n + 1) for _ in range(n + 1)]
        for i in range(n + 1):
            table[i][i] = _shifted_power(knots[i], n - 1) if on[i] else np.zeros(1, dtype=complex)
        for width in range(1, n + 1):
            for i in range(n + 1 - width):
                j = i + width
                if knots[i] == knots[j]:
                    if on[i]:
                        q = n - 1 - width
                        scale = falling_factorial(n - 1, width) / math.factorial(width)
                        entry = scale * _shifted_power(knots[i], q) if q >= 0 else np.zeros(1, dtype=complex)
                    else:
                        entry = np.zeros(1, dtype=complex)
                else:
                    left = table[i][j - 1]
                    right = table[i + 1][j]
                    width_c = max(len(left), len(right))
                    entry = np.zeros(width_c, dtype=complex)
                    entry[: len(right)] += right
                    entry[: len(left)] -= left
                    entry /= knots[j] - knots[i]
                table[i][j] = entry
        piece = table[0][n] / math.factorial(n - 1)
        triples.append((lo, hi, piece))
    return PeanoKernel(tuple(knots), n, sum_pieces(triples))


# ---------------------------------------------------------------------------
# summation methods and quadrature


def cesaro_approx(f: ScalarFunction, k: int) -> ScalarFunction:
    """k-th Cesaro mean of the Taylor series of a disk-domain function."""
    if k < 1:
        raise MoiLabError("Cesaro order must be >= 1")
    a = f.taylor_coefficients(k)
    scaled = a * (k - np.arange(k)) / k
    return ScalarFunction.polynomial(scaled, domain="disk",
                                     label=f"cesaro{k}[{f.label}]")


def fejer_smooth(f: ScalarFunction, n_smooth: int) -> ScalarFunction:
    """Fejer-kernel smoothing: coefficient c_m scaled by max(0, 1 - |m|/(N+1))."""
    if f.kind != "trig_polynomial":
        raise NotTrigPolynomial("Fejer smoothing applies to trigonometric polynomials")
    scaled = {m: c * max(0.0, 1.0 - abs(m) / (n_smooth + 1))
              for m, c in f.freq_coeffs.items()}
    return ScalarFunction.trig_polynomial(scaled, label=f"fejer{n_smooth}[{f.label}]")


def quadrature(rule: str, points: int):
    """Nodes and weights for the requested rule.

    gauss_legendre_01: exact on polynomials of degree <= 2*points - 1 on [0,1].
    periodic_trapezoid: exact on trigonometric polynomials of degree < points
    over [0, 2*pi).
    """
    if points < 1:
        raise InvalidPointCount(f"need at least one point, got {points}")
    if rule == "gauss_legendre_01":
        x, w = np.polynomial.legendre.leggauss(points)
        return (x + 1.0) / 2.0, w / 2.0
    if rule == "periodic_trapezoid":
        nodes = 2.0 * np.pi * np.arange(points) / points
        return nodes, np.full(points, 2.0 * np.pi / points)
    raise MoiLabError(f"unknown quadrature rule {rule!r}")
