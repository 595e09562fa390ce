"""Second Wiener chaos from explicit coefficients.

Diagonal representation F = sum_k alpha_k (G_k^2 - 1) and the generic
matrix representation F_i = X' A_i X - Tr A_i.  Everything here that has a
closed form (cumulants, symmetric functions, Laplace transform,
characteristic function) is computed exactly from the coefficients; the
Monte Carlo substrate is used only for cross-checks driven by callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from . import mc
from .wick import GaussianPolynomial

UNIT_VAR_TOL = 1e-12


class PreconditionError(ValueError):
    """An operation was called outside its stated domain."""


class DivergenceError(ValueError):
    """The requested negative moment does not exist."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the accuracy target."""


class NonIntegrableError(ValueError):
    """The characteristic function is not absolutely integrable."""


class DiagonalSecondChaos:
    """F = sum_k alpha_k (G_k^2 - 1) for a finite real coefficient vector.

    Variance is 2*sum(alpha^2); with normalize=True the coefficients are
    rescaled so the variance is exactly 1.  The all-zero vector is
    rejected (degenerate variable).
    """

    def __init__(self, alphas, normalize: bool = False):
        a = np.asarray(alphas, dtype=float).reshape(-1)
        if a.size == 0:
            raise ValueError("need at least one coefficient")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        if np.all(a == 0.0):
            raise ValueError("all-zero coefficient vector has variance 0")
        if normalize:
            a = a / np.sqrt(2.0 * np.sum(a * a))
        a = a.copy()
        a.flags.writeable = False
        self.alphas = a

    @property
    def m(self) -> int:
        return int(self.alphas.size)

    @property
    def variance(self) -> float:
        return float(2.0 * np.sum(self.alphas ** 2))

    @property
    def unit_variance(self) -> bool:
        return abs(self.variance - 1.0) <= UNIT_VAR_TOL

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.alphas))

    def sample_f(self, rng: np.random.Generator, n: int) -> np.ndarray:
        g = rng.standard_normal((n, self.m))
        return (g * g - 1.0) @ self.alphas

    def sample_gamma(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Samples of the carre du champ 4 sum_k alpha_k^2 G_k^2."""
        g = rng.standard_normal((n, self.m))
        return (g * g) @ (4.0 * self.alphas ** 2)

    def to_polynomial(self) -> GaussianPolynomial:
        p = GaussianPolynomial(self.m, {})
        for k, a in enumerate(self.alphas):
            if a == 0.0:
                continue
            e = [0] * self.m
            e[k] = 2
            p = p + GaussianPolynomial(self.m, {tuple(e): float(a)}) - float(a)
        return p

    def __repr__(self):
        return f"DiagonalSecondChaos(m={self.m}, variance={self.variance:.6g})"


@dataclass(frozen=True)
class SymmetricFunctionTable:
    """Newton sums, elementary symmetric functions and even cumulants.

    Index convention: newton[p-1] = N_p = sum alpha^(2p),
    elementary[p-1] = S_p, cumulants[p-1] = kappa_{2p}, for p = 1..p_max.
    """

    p_max: int
    newton: np.ndarray
    elementary: np.ndarray
    cumulants: np.ndarray


def newton_to_elementary(newton: np.ndarray) -> np.ndarray:
    """Newton-Girard recursion p*S_p = sum_i (-1)^(i-1) N_i S_{p-i}.

    newton has shape (p_max, ...); returns S of the same shape.  Works on
    batches along trailing axes (used for eigenvalue spectra too).
    """
    newton = np.asarray(newton, dtype=float)
    p_max = newton.shape[0]
    s_prev = [np.ones_like(newton[0])]  # S_0 = 1
    out = np.empty_like(newton)
    for p in range(1, p_max + 1):
        acc = np.zeros_like(newton[0])
        for i in range(1, p + 1):
            acc += ((-1.0) ** (i - 1)) * newton[i - 1] * s_prev[p - i]
        sp = acc / p
        out[p - 1] = sp
        s_prev.append(sp)
    return out


def newton_cumulants(f: DiagonalSecondChaos, p_max: int) -> SymmetricFunctionTable:
    """Exact N_p, S_p and kappa_{2p} for p = 1..p_max.

    kappa_{2p}(F) = 2^(2p-1) (2p-1)! N_p, and S_p follows from the
    Newton-Girard recursion on the squared coefficients.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    a2 = f.alphas ** 2
    newton = np.array([np.sum(a2 ** p) for p in range(1, p_max + 1)])
    cumul = np.array([
        (2.0 ** (2 * p - 1)) * math.factorial(2 * p - 1) * newton[p - 1]
        for p in range(1, p_max + 1)])
    elem = newton_to_elementary(newton)
    return SymmetricFunctionTable(p_max, newton, elem, cumul)


def _partition_multiplicities(p: int):
    # multiplicity vectors (m_1, ..., m_p) with sum i*m_i = p
    def rec(remaining, max_part):
        if remaining == 0:
            yield ()
            return
        for i in range(min(remaining, max_part), 0, -1):
            for rest in rec(remaining - i, i):
                yield (i,) + rest

    for parts in rec(p, p):
        m = [0] * p
        for i in parts:
            m[i - 1] += 1
        yield m


def girard_partition_sum(newton: np.ndarray, p: int) -> float:
    """Explicit partition-sum form of S_p (test oracle, p <= 6 intended).

    S_p = (-1)^p sum over {m: sum i*m_i = p} of prod_i (-N_i)^m_i / (m_i! i^m_i).
    Exponentially slower than the recursion; kept as an independent route.
    """
    newton = np.asarray(newton, dtype=float)
    if p < 1 or p > newton.shape[0]:
        raise ValueError("p out of range for the supplied Newton sums")
    total = 0.0
    for m in _partition_multiplicities(p):
        term = 1.0
        for i, mi in enumerate(m, start=1):
            if mi:
                term *= (-newton[i - 1]) ** mi / (math.factorial(mi) * i ** mi)
        total += term
    return ((-1.0) ** p) * total


@dataclass(frozen=True)
class SpDeviation:
    lhs: float   # |S_p - 1/(2^p p!)|
    rhs: float   # p * kappa_4 / 48
    holds: bool


def check_sp_deviation(f: DiagonalSecondChaos, p: int) -> SpDeviation:
    """Deviation of S_p from its Gaussian-limit value against p*kappa4/48."""
    if not f.unit_variance:
        raise PreconditionError("requires a unit-variance variable")
    if p < 1:
        raise ValueError("p must be >= 1")
    table = newton_cumulants(f, max(p, 2))
    lhs = abs(table.elementary[p - 1] - 1.0 / (2.0 ** p * math.factorial(p)))
    kappa4 = table.cumulants[1]
    rhs = p * kappa4 / 48.0
    return SpDeviation(float(lhs), float(rhs), bool(lhs <= rhs))


def laplace_gamma(f: DiagonalSecondChaos, lam: float) -> float:
    """E exp(-lam * Gamma[F,F]) = prod_k (1 + 8 lam alpha_k^2)^(-1/2)."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    a2 = f.alphas ** 2
    return float(np.exp(-0.5 * np.sum(np.log1p(8.0 * lam * a2))))


@dataclass(frozen=True)
class Thm1Certificate:
    threshold: float
    certified: bool
    q_sup: float  # negative moments certified for all q < q_sup

    @property
    def q_range(self) -> str:
        return f"q < {self.q_sup:g}" if self.certified else "none"


def thm1_certificate(kappa4: float, p: int) -> Thm1Certificate:
    """Certificate kappa4 < 24 / (2^p (p+1)!) for 1/Gamma in L^q, q < p/2."""
    if kappa4 < 0:
        raise ValueError("kappa4 must be >= 0")
    if p < 1:
        raise ValueError("p must be >= 1")
    threshold = 24.0 / (2.0 ** p * math.factorial(p + 1))
    certified = bool(kappa4 < threshold)
    return Thm1Certificate(threshold, certified, p / 2.0 if certified else 0.0)


def smallball_bound(p: int, eps: float) -> float:
    """Tail bound sqrt(2 p!)/2^p * eps^(p/2) on P(Gamma < eps)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return math.sqrt(2.0 * math.factorial(p)) / 2.0 ** p * eps ** (p / 2.0)


def negative_moment(f: DiagonalSecondChaos, q: float,
                    rel_tol: float = 1e-8) -> float:
    """E Gamma[F,F]^(-q) by the Mellin integral of the Laplace transform.

    E Gamma^(-q) = (1/Gamma(q)) int_0^inf lam^(q-1) E exp(-lam Gamma) dlam.
    Requires q < m/2 (m = number of nonzero coefficients), else the
    integral diverges.  The integrand decays like lam^(q-1-m/2): the
    head [0,1] is regularized by lam = u^(1/q), the tail by lam = e^t up
    to a cutoff with analytic remainder below 1e-12 of the result.
    """
    if q <= 0:
        raise ValueError("q must be > 0")
    a2 = f.alphas[f.alphas != 0.0] ** 2
    m = a2.size
    if q >= m / 2.0:
        raise DivergenceError(
            f"E Gamma^(-q) diverges for q >= m/2 (q={q}, m={m})")

    def laplace(lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(-0.5 * np.sum(np.log1p(8.0 * np.multiply.outer(lam, a2)),
                                    axis=-1))

    head, e_head = integrate.quad(
        lambda u: laplace(u ** (1.0 / q)) / q, 0.0, 1.0,
        epsabs=0.0, epsrel=1e-11, limit=200)

    # tail cutoff from laplace(e^t) <= K exp(-m t / 2)
    k_const = float(np.prod((8.0 * a2) ** -0.5))
    decay = m / 2.0 - q
    t_max = max(5.0, (math.log(k_const) - math.log(decay)
                      - math.log(1e-13 * max(head, 1e-300))) / decay)
    tail, e_tail = integrate.quad(
        lambda t: math.exp(q * t) * float(laplace(math.exp(t))), 0.0, t_max,
        epsabs=0.0, epsrel=1e-11, limit=400)

    total = head + tail
    if total <= 0 or (e_head + e_tail) > rel_tol * total:
        raise QuadratureError(
            f"quadrature error {e_head + e_tail:.3g} exceeds target "
            f"{rel_tol * total:.3g}")
    return total / float(gamma_fn(q))


def char_function(f: DiagonalSecondChaos, xi):
    """E exp(i xi F) = prod_k exp(-i alpha_k xi) (1 - 2 i alpha_k xi)^(-1/2).

    Principal branch sqrt(1+ix) = (1+x^2)^(1/4) exp(i arctan(x)/2), applied
    factor-wise; the modulus is prod_k (1 + 4 alpha_k^2 xi^2)^(-1/4).
    Accepts a scalar or an array of xi values.
    """
    xi_arr = np.asarray(xi, dtype=float)
    a = f.alphas
    ax = np.multiply.outer(xi_arr, a)
    log_mod = -0.25 * np.sum(np.log1p(4.0 * ax * ax), axis=-1)
    phase = np.sum(0.5 * np.arctan(2.0 * ax) - ax, axis=-1)
    out = np.exp(log_mod + 1j * phase)
    return complex(out) if np.isscalar(xi) or xi_arr.ndim == 0 else out


def density_by_inversion(f: DiagonalSecondChaos, x_min: float = -6.0,
                         x_max: float = 6.0, dx: float = 0.01,
                         tail_eps: float = 1e-8):
    """Density of F on a grid by Fourier inversion of char_function.

    Requires at least 3 nonzero coefficients so |phi| is integrable.
    The xi integral is truncated where the exact modulus drops below
    tail_eps and evaluated by the trapezoid rule.  Returns (xs, density).
    """
    if f.nonzero_count() < 3:
        raise NonIntegrableError(
            "need >= 3 nonzero coefficients for an integrable |phi|")
    if x_max <= x_min or dx <= 0:
        raise ValueError("bad grid")

    a2 = f.alphas[f.alphas != 0.0] ** 2

    def modulus(xi):
        return math.exp(-0.25 * float(np.sum(np.log1p(4.0 * a2 * xi * xi))))

    hi = 1.0
    while modulus(hi) > tail_eps:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if modulus(mid) > tail_eps:
            lo = mid
        else:
            hi = mid
    xi_cut = hi

    x_scale = max(abs(x_min), abs(x_max), 1.0)
    dxi = min(0.02, 2.0 * math.pi / (64.0 * x_scale))
    xis = np.arange(0.0, xi_cut + dxi, dxi)
    phi = char_function(f, xis)

    # trapezoid weights; f(x) = (1/pi) Re int_0^inf phi(xi) e^(-i xi x) dxi
    w = np.full(xis.size, dxi)
    w[0] *= 0.5
    w[-1] *= 0.5
    wr = w * phi.real
    wi = w * phi.imag

    xs = np.arange(x_min, x_max + 0.5 * dx, dx)
    dens = np.zeros(xs.size)
    blk = max(1, 6_000_000 // xs.size)
    for s in range(0, xis.size, blk):
        arg = np.outer(xs, xis[s:s + blk])
        dens += np.cos(arg) @ wr[s:s + blk] + np.sin(arg) @ wi[s:s + blk]
    return xs, dens / math.pi


# ---------------------------------------------------------------------------
# multivariate second chaos
# ---------------------------------------------------------------------------

class MultivariateSecondChaos:
    """F_i = X' A_i X - Tr A_i for symmetric matrices A_1..A_d.

    Cov(F_i, F_j) = 2 Tr(A_i A_j); the carre du champ between components
    is the quadratic form Gamma[F_i, F_j] = 4 X' A_i A_j X.
    """

    def __init__(self, mats):
        ms = [np.asarray(m, dtype=float) for m in mats]
        if not ms:
            raise ValueError("need at least one matrix")
        n = ms[0].shape[0]
        for m in ms:
            if m.ndim != 2 or m.shape != (n, n):
                raise ValueError("matrices must be square and same dimension")
            if not np.allclose(m, m.T, rtol=0.0,
                               atol=1e-12 * max(1.0, float(np.abs(m).max()))):
                raise ValueError("matrices must be symmetric")
        self.mats = [m.copy() for m in ms]
        for m in self.mats:
            m.flags.writeable = False

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return int(self.mats[0].shape[0])

    def covariance(self) -> np.ndarray:
        d = self.d
        c = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                c[i, j] = 2.0 * np.trace(self.mats[i] @ self.mats[j])
        return c

    def has_identity_cov(self, tol: float = UNIT_VAR_TOL) -> bool:
        return bool(np.max(np.abs(self.covariance() - np.eye(self.d))) <= tol)

    def combined(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.einsum('i,ijk->jk', t, np.array(self.mats))


def quadratic_form_polynomial(mat: np.ndarray) -> GaussianPolynomial:
    """X' M X as a GaussianPolynomial (M symmetric)."""
    n = mat.shape[0]
    terms: dict[tuple, float] = {}
    for i in range(n):
        if mat[i, i] != 0.0:
            e = [0] * n
            e[i] = 2
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + float(mat[i, i])
        for j in range(i + 1, n):
            if mat[i, j] != 0.0:
                e = [0] * n
                e[i] = 1
                e[j] = 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + 2.0 * float(mat[i, j])
    return GaussianPolynomial(n, terms)


def _poly_variance(p: GaussianPolynomial) -> float:
    from .wick import isserlis_expectation
    mean = isserlis_expectation(p)
    return isserlis_expectation(p * p) - mean * mean


def _poly_l2(p: GaussianPolynomial) -> float:
    from .wick import isserlis_expectation
    return math.sqrt(max(isserlis_expectation(p * p), 0.0))


def sphere_grid(d: int, resolution: int) -> np.ndarray:
    """Deterministic quasi-uniform directions on the unit sphere S^(d-1).

    d = 1: the two signs; d = 2: equal angles; d = 3: Fibonacci lattice;
    d > 3: fixed-seed Gaussian directions.  Always includes +-e_1.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = 2.0 * math.pi * np.arange(resolution) / resolution
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
    elif d == 3:
        npts = max(resolution, 16)
        i = np.arange(npts) + 0.5
        z = 1.0 - 2.0 * i / npts
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        golden = math.pi * (3.0 - math.sqrt(5.0))
        ang = golden * i
        pts = np.column_stack([r * np.cos(ang), r * np.sin(ang), z])
    else:
        rng = np.random.Generator(np.random.Philox(key=np.array(
            [0x5eed, d], dtype=np.uint64)))
        pts = rng.standard_normal((max(resolution, 64), d))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    axes = np.zeros((2, d))
    axes[0, 0] = 1.0
    axes[1, 0] = -1.0
    return np.vstack([axes, pts])


@dataclass(frozen=True)
class CrossGammaStats:
    var_diag: np.ndarray        # Var(Gamma[F_i, F_i])
    cross_l2: np.ndarray        # ||Gamma[F_i, F_j]||_2, d x d
    bound_rhs: float            # max var + d^2 max off-diagonal L2 norm
    worst_lhs: float            # max over grid of Var(Gamma[F_t, F_t])
    worst_direction: np.ndarray
    holds: bool


def cross_gamma_stats(m: MultivariateSecondChaos,
                      n_directions: int = 64) -> CrossGammaStats:
    """Exact carre-du-champ statistics and the direction-uniform bound.

    All expectations are evaluated through the Isserlis oracle on the
    quadratic-form polynomials.  The bound checked on the sphere grid is
    Var(Gamma[F_t, F_t]) <= max_i Var(Gamma[F_i, F_i])
                            + d^2 max_{i != j} ||Gamma[F_i, F_j]||_2.
    """
    d = m.d
    var_diag = np.empty(d)
    cross = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            prod = m.mats[i] @ m.mats[j]
            gmat = 2.0 * (prod + prod.T)  # symmetrized 4 X'A_iA_jX
            poly = quadratic_form_polynomial(gmat)
            if i == j:
                var_diag[i] = _poly_variance(poly)
            cross[i, j] = _poly_l2(poly)
    off = [cross[i, j] for i in range(d) for j in range(d) if i != j]
    rhs = float(var_diag.max() + (d ** 2) * (max(off) if off else 0.0))

    worst, worst_t = -np.inf, None
    for t in sphere_grid(d, n_directions):
        at = m.combined(t)
        poly = quadratic_form_polynomial(4.0 * (at @ at))
        v = _poly_variance(poly)
        if v > worst:
            worst, worst_t = v, t
    holds = bool(worst <= rhs + 1e-12 * max(1.0, abs(rhs)))
    return CrossGammaStats(var_diag, cross, rhs, float(worst),
                           np.asarray(worst_t), holds)


@dataclass(frozen=True)
class Kappa4Max:
    value: float        # grid+ascent maximum: a lower bound of the true max
    direction: np.ndarray


def kappa4_of_direction(m: MultivariateSecondChaos, t) -> float:
    at = m.combined(t)
    a2 = at @ at
    return float(48.0 * np.trace(a2 @ a2))


def sphere_kappa4_max(m: MultivariateSecondChaos,
                      resolution: int = 64) -> Kappa4Max:
    """max over the unit sphere of kappa_4(F_t) = 48 Tr(A_t^4).

    Evaluates a deterministic grid, then refines the best point by
    projected gradient ascent.  The reported value is a lower bound of
    the true maximum (it is exact up to the refinement tolerance for the
    smooth objective on the grid's basin).
    """
    best_v, best_t = -np.inf, None
    for t in sphere_grid(m.d, resolution):
        v = kappa4_of_direction(m, t)
        if v > best_v:
            best_v, best_t = v, t
    t = np.asarray(best_t, dtype=float)

    def grad(tv):
        at = m.combined(tv)
        a3 = at @ at @ at
        return np.array([192.0 * np.trace(a3 @ ai) for ai in m.mats])

    step = 0.1
    for _ in range(200):
        g = grad(t)
        g_tan = g - np.dot(g, t) * t
        if np.linalg.norm(g_tan) < 1e-14:
            break
        cand = t + step * g_tan
        cand /= np.linalg.norm(cand)
        v = kappa4_of_direction(m, cand)
        if v > best_v + 1e-15:
            best_v, t = v, cand
            step *= 1.2
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return Kappa4Max(float(best_v), t)


def laplace_vs_mc(f: DiagonalSecondChaos, lam: float, n: int,
                  spec: mc.RngSpec) -> tuple[float, mc.EstimatorResult]:
    """Closed-form Laplace transform next to its Monte Carlo estimate."""
    closed = laplace_gamma(f, lam)
    est = mc.estimate(
        lambda rng, cnt: np.exp(-lam * f.sample_gamma(rng, cnt)), n, spec)
    return closed, est
