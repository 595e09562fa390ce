"""Third Wiener chaos: symmetric 3-tensors, the carre du champ, and the
Gaussian matrix that encodes its law spectrally.

A tensor a(i,j,k), symmetric and vanishing on coincident indices, defines
F = sum over ordered triples of a(i,j,k) X_i X_j X_k.  Unit variance means
E F^2 = 6 * sum over ordered triples of a^2 = 36 * sum_{i<j<k} a^2 = 1
(this convention reproduces both E Gamma = 3 and E Tr(A_hat^2) = 3/2).

On an independent copy X_hat, the sharp gradient of F is the quadratic
form of the random symmetric matrix A_hat with entries
3 sum_k a(i,j,k) X_hat_k; its spectrum carries the law of Gamma[F,F]
through E exp(-Gamma xi^2 / 2) = E_hat prod_k (1 - 2 i xi lam_k)^(-1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import mc
from .chaos2 import DiagonalSecondChaos, PreconditionError, newton_to_elementary
from .wick import GaussianPolynomial, gamma_of_polynomial, isserlis_expectation

UNIT_VAR_TOL = 1e-12
EXACT_MODE_MAX_N = 6   # Isserlis cost cap for degree-12 expansions


class CapacityError(ValueError):
    """Exact mode requested beyond the Isserlis cost cap."""


class EigenSolverError(RuntimeError):
    """The symmetric eigensolver failed to meet its residual contract."""


class SymThreeTensor:
    """Symmetric 3-tensor, zero on coincident indices, on [1, n]^3.

    entries maps strictly increasing 1-based triples (i, j, k) to values;
    the full tensor is stored densely with all permutations filled in.
    """

    def __init__(self, n: int, entries, normalize: bool = False):
        if n < 3:
            raise ValueError("dimension must be >= 3")
        self.n = int(n)
        canon: dict[tuple, float] = {}
        for trip, val in dict(entries).items():
            i, j, k = (int(v) for v in trip)
            if not (1 <= i < j < k <= self.n):
                raise ValueError(
                    f"triple {trip!r} must satisfy 1 <= i < j < k <= {self.n} "
                    "(coincident or unordered indices are invalid)")
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"non-finite value at {trip!r}")
            canon[(i, j, k)] = val
        if normalize:
            ssq = sum(v * v for v in canon.values())
            if ssq == 0.0:
                raise ValueError("cannot normalize an all-zero tensor")
            scale = 1.0 / (6.0 * math.sqrt(ssq))
            canon = {t: v * scale for t, v in canon.items()}
        a = np.zeros((self.n, self.n, self.n))
        for (i, j, k), v in canon.items():
            for p in permutations((i - 1, j - 1, k - 1)):
                a[p] = v
        a.flags.writeable = False
        self.a = a
        self.entries = canon
        if self.n <= EXACT_MODE_MAX_N:
            # cheap self-check of the variance convention vs the oracle
            p = self.to_polynomial()
            ref = isserlis_expectation(p * p)
            if abs(ref - self.variance) > 1e-10 * max(1.0, abs(ref)):
                raise AssertionError("internal variance self-check failed")

    @property
    def variance(self) -> float:
        return float(6.0 * np.sum(self.a * self.a))

    @property
    def unit_variance(self) -> bool:
        return abs(self.variance - 1.0) <= UNIT_VAR_TOL

    def to_polynomial(self) -> GaussianPolynomial:
        terms: dict[tuple, float] = {}
        for (i, j, k), v in self.entries.items():
            if v == 0.0:
                continue
            e = [0] * self.n
            e[i - 1] = e[j - 1] = e[k - 1] = 1
            terms[tuple(e)] = 6.0 * v   # 6 ordered triples per i<j<k
        return GaussianPolynomial(self.n, terms)

    def __repr__(self):
        return (f"SymThreeTensor(n={self.n}, triples={len(self.entries)}, "
                f"variance={self.variance:.6g})")


def make_tensor(n: int, entries, normalize: bool = False) -> SymThreeTensor:
    """Build a SymThreeTensor from {(i, j, k): value} with 1-based i<j<k."""
    return SymThreeTensor(n, entries, normalize=normalize)


def read_tensor_file(path) -> SymThreeTensor:
    """Read the plain-text tensor format.

    Lines starting with '#' are comments.  The first data line is the
    dimension N; every following line is 'i j k value' with 1 <= i<j<k <= N.
    """
    n = None
    entries: dict[tuple, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n is None:
                if len(parts) != 1:
                    raise ValueError(
                        f"{path}:{lineno}: expected the dimension header")
                n = int(parts[0])
                continue
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'i j k value'")
            i, j, k = int(parts[0]), int(parts[1]), int(parts[2])
            entries[(i, j, k)] = float(parts[3])
    if n is None:
        raise ValueError(f"{path}: missing dimension header")
    return SymThreeTensor(n, entries)


def write_tensor_file(t: SymThreeTensor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# symmetric 3-tensor: dimension, then 'i j k value' "
                 "(1-based, i<j<k)\n")
        fh.write(f"{t.n}\n")
        for (i, j, k), v in sorted(t.entries.items()):
            fh.write(f"{i} {j} {k} {v:.17g}\n")


# ---------------------------------------------------------------------------
# carre du champ and the sharp matrix
# ---------------------------------------------------------------------------

def gradient(t: SymThreeTensor, x: np.ndarray) -> np.ndarray:
    """partial_i F = 3 sum_{j,k} a(i,j,k) x_j x_k."""
    x = np.asarray(x, dtype=float)
    if x.shape != (t.n,):
        raise ValueError(f"x must have shape ({t.n},)")
    t1 = np.tensordot(t.a, x, axes=([2], [0]))  # (i, j)
    return 3.0 * (t1 @ x)

def gamma_f(t: SymThreeTensor, x: np.ndarray) -> float:
    """Gamma[F,F](x) = sum_i (partial_i F)^2, evaluated at a point."""
    g = gradient(t, x)
    return float(g @ g)


def gamma_batch(t: SymThreeTensor, x: np.ndarray) -> np.ndarray:
    """Gamma[F,F] for a batch of points, shape (batch, n)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != t.n:
        raise ValueError(f"batch must have shape (B, {t.n})")
    out = np.empty(x.shape[0])
    step = max(1, 4_000_000 // (t.n * t.n))
    for s in range(0, x.shape[0], step):
        xb = x[s:s + step]
        t1 = np.tensordot(xb, t.a, axes=([1], [2]))       # (b, i, j)
        g = 3.0 * np.einsum('bij,bj->bi', t1, xb)
        out[s:s + step] = np.einsum('bi,bi->b', g, g)
    return out


@dataclass(frozen=True)
class SharpMatrixSample:
    """One realization of the sharp-gradient matrix and its source vector."""

    matrix: np.ndarray
    source: np.ndarray


def sample_sharp_matrix(t: SymThreeTensor, xhat: np.ndarray) -> SharpMatrixSample:
    """A_hat(i,j) = 3 sum_k a(i,j,k) xhat_k; zero diagonal, zero trace."""
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (t.n,):
        raise ValueError(f"xhat must have shape ({t.n},)")
    m = 3.0 * np.tensordot(t.a, xhat, axes=([2], [0]))
    return SharpMatrixSample(m, xhat.copy())


def sharp_batch(t: SymThreeTensor, xhat: np.ndarray) -> np.ndarray:
    """Stack of sharp matrices for a batch of source vectors (B, n)."""
    xhat = np.asarray(xhat, dtype=float)
    return 3.0 * np.tensordot(xhat, t.a, axes=([1], [2]))


def trace_square_batch(t: SymThreeTensor, xhat: np.ndarray) -> np.ndarray:
    """Tr(A_hat^2) = sum_{i,j} A_hat_{ij}^2 for a batch of source vectors."""
    m = sharp_batch(t, xhat)
    return np.einsum('bij,bij->b', m, m)


@dataclass(frozen=True)
class SpectrumSample:
    """Eigenvalues ordered by decreasing |lambda|; recentered marks the
    zero-trace hygiene adjustment (applied only when |sum| broke tolerance)."""

    eigs: np.ndarray
    recentered: bool = False


def spectrum(sample: SharpMatrixSample, tol: float = 1e-10) -> SpectrumSample:
    """Eigenvalues of one sharp matrix with residual verification.

    Checks symmetry, per-pair residuals ||A v - lam v|| <= tol ||A||, and
    the zero-trace identity (recenter + flag if violated beyond tol).
    """
    m = np.asarray(sample.matrix, dtype=float)
    scale = float(np.abs(m).max()) if m.size else 0.0
    if not np.allclose(m, m.T, rtol=0.0, atol=tol * max(1.0, scale)):
        raise ValueError("matrix is not symmetric within tolerance")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    norm = float(np.abs(w).max()) if w.size else 0.0
    resid = np.linalg.norm(m @ v - v * w, axis=0)
    if norm > 0 and np.any(resid > tol * norm * 10.0):
        raise EigenSolverError(
            f"eigenpair residual {resid.max():.3g} exceeds {tol * norm * 10.0:.3g}")
    recentered = False
    s = float(w.sum())
    if abs(s) > tol * max(1.0, norm):
        w = w - s / w.size
        recentered = True
    order = np.argsort(-np.abs(w), kind="stable")
    return SpectrumSample(w[order], recentered)


def spectra_batch(t: SymThreeTensor, xhat: np.ndarray,
                  tol: float = 1e-10) -> np.ndarray:
    """Ordered spectra for a batch of source vectors; shape (B, n).

    Vectorized eigvalsh plus the same zero-sum hygiene as spectrum().
    """
    ms = sharp_batch(t, xhat)
    w = np.linalg.eigvalsh(ms)
    norms = np.abs(w).max(axis=1)
    sums = w.sum(axis=1)
    bad = np.abs(sums) > tol * np.maximum(1.0, norms)
    if np.any(bad):
        w[bad] -= (sums[bad] / w.shape[1])[:, None]
    order = np.argsort(-np.abs(w), axis=1, kind="stable")
    return np.take_along_axis(w, order, axis=1)


# ---------------------------------------------------------------------------
# spectral identity for the Laplace transform of Gamma
# ---------------------------------------------------------------------------

def _char_product(lams: np.ndarray, xi: float) -> np.ndarray:
    # prod_k (1 - 2 i xi lam_k)^(-1/2), principal branch factor-wise
    z = 2.0 * xi * lams
    log_mod = -0.25 * np.sum(np.log1p(z * z), axis=1)
    phase = 0.5 * np.sum(np.arctan(z), axis=1)
    return np.exp(log_mod + 1j * phase)


@dataclass(frozen=True)
class GammaSpecCheck:
    xi: float
    lhs: mc.EstimatorResult             # E exp(-Gamma xi^2 / 2)
    rhs: mc.ComplexEstimatorResult      # E_hat prod (1 - 2 i xi lam)^(-1/2)
    gap: float
    combined_se: float

    @property
    def real_ok(self) -> bool:
        return self.gap <= 3.0 * self.combined_se

    @property
    def imag_ok(self) -> bool:
        return abs(self.rhs.mean.imag) <= 3.0 * self.rhs.stderr_im


def verify_gamma_spec(t: SymThreeTensor, xi: float, n_samples: int,
                      seed: int) -> GammaSpecCheck:
    """Both sides of the spectral identity, independently estimated.

    lhs averages exp(-xi^2 Gamma / 2) over X; rhs averages the factor-wise
    complex product over the spectrum of A_hat sampled from X_hat.  The
    imaginary part of rhs should vanish by the sign symmetry of the
    spectrum's law.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1e3 samples")
    xi = float(xi)

    def fn_lhs(rng, cnt):
        x = rng.standard_normal((cnt, t.n))
        return np.exp(-0.5 * xi * xi * gamma_batch(t, x))

    def fn_rhs(rng, cnt):
        xh = rng.standard_normal((cnt, t.n))
        return _char_product(spectra_batch(t, xh), xi)

    lhs = mc.estimate(fn_lhs, n_samples, mc.RngSpec(seed, 0))
    rhs = mc.estimate_complex(fn_rhs, n_samples, mc.RngSpec(seed, 1))
    gap = abs(lhs.mean - rhs.mean.real)
    combined = math.hypot(lhs.stderr, rhs.stderr_re)
    return GammaSpecCheck(xi, lhs, rhs, gap, combined)


# ---------------------------------------------------------------------------
# trace form Tr(A_hat^2) as a positive quadratic form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceFormSpectrum:
    """Tr(A_hat^2) = xhat' B xhat = sum_k beta_k G_k^2.

    For a unit-variance tensor sum(beta) = E Tr(A_hat^2) = 3/2 and
    Var Tr(A_hat^2) = 2 Tr(B^2).
    """

    b_matrix: np.ndarray
    betas: np.ndarray
    var_trace: float

    @property
    def expected_trace(self) -> float:
        return float(self.betas.sum())

    def to_diagonal_chaos(self) -> DiagonalSecondChaos:
        """Tr(A_hat^2) as a second-chaos object with Gamma = Tr(A_hat^2).

        The diagonal coefficients alpha_k = sqrt(beta_k)/2 give
        4 sum alpha_k^2 G_k^2 = sum beta_k G_k^2, so the second-chaos
        negative-moment machinery applies verbatim to the trace form.
        """
        alphas = np.sqrt(self.betas[self.betas > 0]) / 2.0
        return DiagonalSecondChaos(alphas)


def trace_form(t: SymThreeTensor) -> TraceFormSpectrum:
    """B_{kl} = 9 sum_{i,j} a(i,j,k) a(i,j,l), eigendecomposed."""
    if not t.unit_variance:
        raise PreconditionError("requires a unit-variance tensor")
    n = t.n
    r = t.a.reshape(n * n, n)
    b = 9.0 * (r.T @ r)
    betas = np.linalg.eigvalsh(b)
    if betas.min() < -1e-10:
        raise EigenSolverError("trace form produced a negative eigenvalue")
    betas = np.clip(betas, 0.0, None)[::-1].copy()
    total = float(betas.sum())
    if abs(total - 1.5) > 1e-12 * max(1.0, total):
        raise AssertionError(
            f"sum of betas {total!r} != 3/2 for a unit-variance tensor")
    var_trace = float(2.0 * np.sum(b * b))
    return TraceFormSpectrum(b, betas, var_trace)


# ---------------------------------------------------------------------------
# fourth cumulant and the variance of Gamma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class K4VarGamma:
    kappa4: float
    var_gamma: float
    bound_holds: bool    # sqrt(Var Gamma) <= 3 sqrt(kappa4) (+ MC slack)
    mode: str
    kappa4_se: float = 0.0
    var_gamma_se: float = 0.0


def kappa4_and_var_gamma(t: SymThreeTensor, mode: str = "exact",
                         n_samples: int = 200_000,
                         seed: int = 0) -> K4VarGamma:
    """kappa_4(F) and Var Gamma[F,F], exactly (n <= 6) or by Monte Carlo.

    Exact mode expands F^4 and Gamma^2 through the Isserlis oracle; the
    cost cap keeps the degree-12 expansion tractable.  MC mode estimates
    both and allows 3-standard-error slack in the bound check.
    """
    if mode == "exact":
        if t.n > EXACT_MODE_MAX_N:
            raise CapacityError(
                f"exact mode limited to n <= {EXACT_MODE_MAX_N}")
        f = t.to_polynomial()
        m2 = isserlis_expectation(f * f)
        m4 = isserlis_expectation((f * f) * (f * f))
        kappa4 = m4 - 3.0 * m2 * m2
        g = gamma_of_polynomial(f)
        eg = isserlis_expectation(g)
        eg2 = isserlis_expectation(g * g)
        var_gamma = eg2 - eg * eg
        holds = bool(math.sqrt(max(var_gamma, 0.0))
                     <= 3.0 * math.sqrt(max(kappa4, 0.0))
                     + 1e-9 * max(1.0, abs(kappa4)))
        return K4VarGamma(float(kappa4), float(var_gamma), holds, "exact")
    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")

    def fn_f2(rng, cnt):
        x = rng.standard_normal((cnt, t.n))
        t1 = np.tensordot(x, t.a, axes=([1], [2]))
        fv = np.einsum('bij,bi,bj->b', t1, x, x)
        return fv * fv

    def fn_gamma(rng, cnt):
        return gamma_batch(t, rng.standard_normal((cnt, t.n)))

    spec = mc.RngSpec(seed, 0)
    e_f2 = mc.estimate(fn_f2, n_samples, spec)
    e_f4 = mc.estimate(lambda rng, cnt: fn_f2(rng, cnt) ** 2,
                       n_samples, mc.RngSpec(seed, 1))
    e_g = mc.estimate(fn_gamma, n_samples, mc.RngSpec(seed, 2))
    e_g2 = mc.estimate(lambda rng, cnt: fn_gamma(rng, cnt) ** 2,
                       n_samples, mc.RngSpec(seed, 3))
    kappa4 = e_f4.mean - 3.0 * e_f2.mean ** 2
    kappa4_se = math.hypot(e_f4.stderr, 6.0 * e_f2.mean * e_f2.stderr)
    var_gamma = e_g2.mean - e_g.mean ** 2
    var_gamma_se = math.hypot(e_g2.stderr, 2.0 * e_g.mean * e_g.stderr)
    lhs = math.sqrt(max(var_gamma, 0.0))
    rhs = 3.0 * math.sqrt(max(kappa4, 0.0))
    lhs_se = var_gamma_se / (2.0 * lhs) if lhs > 0 else var_gamma_se
    rhs_se = (1.5 * kappa4_se / math.sqrt(kappa4)) if kappa4 > 0 else kappa4_se
    holds = bool(lhs <= rhs + 3.0 * math.hypot(lhs_se, rhs_se))
    return K4VarGamma(float(kappa4), float(var_gamma), holds, "mc",
                      float(kappa4_se), float(var_gamma_se))


def kappa4_contraction(t: SymThreeTensor) -> float:
    """Exact kappa_4(F) by tensor contractions, any dimension.

    Pairing the twelve Gaussian factors of F^4 leaves two connected
    classes: the doubled 4-cycle, whose value is ||a x_1 a||^2, and the
    all-pairs (K4) cycle.  Counting slot matchings gives
    kappa_4 = 1944 ||a x_1 a||^2 + 1296 * C4(a).
    Cross-validated against the Isserlis oracle for n <= 6.
    """
    n = t.n
    r = t.a.reshape(n, n * n)   # rows indexed by the contracted slot
    c = r.T @ r
    v1 = float(np.sum(c * c))
    v2 = float(np.einsum('abc,ade,bdf,cef->', t.a, t.a, t.a, t.a,
                         optimize=True))
    return 1944.0 * v1 + 1296.0 * v2


# ---------------------------------------------------------------------------
# spectral radius, small-ball and negative moments by Monte Carlo
# ---------------------------------------------------------------------------

def spectral_radius_moments(t: SymThreeTensor, p: int, n_samples: int,
                            seed: int) -> mc.EstimatorResult:
    """(E |lam_1|^(2p))^(1/(2p)) with a delta-method standard error."""
    if p < 1:
        raise ValueError("p must be >= 1")

    def fn(rng, cnt):
        lams = spectra_batch(t, rng.standard_normal((cnt, t.n)))
        return np.abs(lams[:, 0]) ** (2 * p)

    raw = mc.estimate(fn, n_samples, mc.RngSpec(seed, 0))
    if raw.mean <= 0.0:
        return mc.EstimatorResult(0.0, 0.0, raw.n, raw.spec)
    est = raw.mean ** (1.0 / (2 * p))
    se = est * raw.stderr / (2 * p * raw.mean)
    return mc.EstimatorResult(float(est), float(se), raw.n, raw.spec)


@dataclass(frozen=True)
class SmallBallResult:
    eps: np.ndarray
    phat: np.ndarray
    se: np.ndarray
    hits: np.ndarray
    used: np.ndarray          # points with enough hits for the fit
    slope: float
    slope_se: float
    widened: bool             # True when low-hit points were dropped
    n: int
    spec: mc.RngSpec


def smallball_gamma3(t: SymThreeTensor, eps_grid, n_samples: int, seed: int,
                     min_hits: int = 50) -> SmallBallResult:
    """Empirical P(Gamma < eps) over a grid plus a log-log slope fit.

    Grid points whose hit count falls below min_hits are excluded from
    the fit and flagged (widened grid) rather than failing the run.
    """
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise ValueError("eps_grid must hold at least 3 values")
    if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ValueError("eps_grid must be positive and increasing")
    spec = mc.RngSpec(seed, 0)
    counts = np.zeros(eps.size, dtype=np.int64)
    n = 0
    for _, cnt, rng in mc.chunks(spec, n_samples):
        g = gamma_batch(t, rng.standard_normal((cnt, t.n)))
        counts += (g[:, None] < eps[None, :]).sum(axis=0)
        n += cnt
    phat = counts / n
    se = np.sqrt(phat * (1.0 - phat) / n)
    used = counts >= min_hits
    widened = bool(np.any(~used))
    slope, slope_se = mc.loglog_slope(
        list(zip(eps[used], phat[used], se[used])))
    return SmallBallResult(eps, phat, se, counts, used, slope, slope_se,
                           widened, n, spec)


@dataclass(frozen=True)
class NegativeMomentResult:
    estimate: mc.EstimatorResult
    theta: float
    top_share: float      # mass fraction carried by the top 0.1% summands
    unstable: bool        # top_share > 0.5: heavy-tail warning


def negative_moment_gamma3(t: SymThreeTensor, theta: float, n_samples: int,
                           seed: int) -> NegativeMomentResult:
    """Monte Carlo E Gamma^(-theta) with a heavy-tail instability flag."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    spec = mc.RngSpec(seed, 0)
    k = max(1, n_samples // 1000)
    top = np.empty(0)
    total = 0.0
    count, mean, m2 = 0, 0.0, 0.0
    for j, cnt, rng in mc.chunks(spec, n_samples):
        g = gamma_batch(t, rng.standard_normal((cnt, t.n)))
        vals = g ** (-theta)
        if not np.all(np.isfinite(vals)):
            raise mc.PoisonedSampleError(
                f"non-finite Gamma^(-theta) in chunk {j} (seed={seed})")
        cm = float(vals.mean())
        cm2 = float(np.sum((vals - cm) ** 2))
        count, mean, m2 = mc._merge(count, mean, m2, cnt, cm, cm2)
        total += float(vals.sum())
        merged = np.concatenate([top, vals])
        if merged.size > k:
            merged = np.partition(merged, merged.size - k)[-k:]
        top = merged
    stderr = float(np.sqrt(m2 / (count - 1) / count))
    est = mc.EstimatorResult(mean, stderr, count, spec)
    share = float(top.sum() / total) if total > 0 else 0.0
    return NegativeMomentResult(est, float(theta), share, bool(share > 0.5))


# ---------------------------------------------------------------------------
# elementary symmetric functions of the squared spectrum
# ---------------------------------------------------------------------------

def elementary_symmetric_spectrum(sample, p: int) -> float:
    """S_hat_p = sum_{i1<...<ip} lam_{i1}^2 ... lam_{ip}^2 for one spectrum."""
    eigs = sample.eigs if isinstance(sample, SpectrumSample) else np.asarray(
        sample, dtype=float)
    if p < 1 or p > eigs.size:
        raise ValueError(f"p must lie in 1..{eigs.size}")
    lam2 = eigs * eigs
    newton = np.array([np.sum(lam2 ** q) for q in range(1, p + 1)])
    return float(newton_to_elementary(newton)[p - 1])


def _sp_from_spectra(lams: np.ndarray, p: int) -> np.ndarray:
    lam2 = lams * lams
    newton = np.stack([np.sum(lam2 ** q, axis=1) for q in range(1, p + 1)])
    return newton_to_elementary(newton)[p - 1]


@dataclass(frozen=True)
class SpBatchResult:
    p: int
    estimate: mc.EstimatorResult     # E S_hat_p
    lower_bound: float                # (1/2) 3^p / (2^p p!)
    bound_holds: bool
    alpha: np.ndarray                 # small-ball grid for S_hat_p
    phat: np.ndarray
    se: np.ndarray


def sp_batch_estimate(t: SymThreeTensor, p: int, n_samples: int, seed: int,
                      alpha_grid=None) -> SpBatchResult:
    """Estimate E S_hat_p, compare with the lower bound, and record the
    empirical small-ball curve P(S_hat_p <= alpha)."""
    if p < 1 or p > t.n:
        raise ValueError(f"p must lie in 1..{t.n}")
    alpha = (np.geomspace(1e-3, 1.0, 7) if alpha_grid is None
             else np.asarray(alpha_grid, dtype=float))
    spec = mc.RngSpec(seed, 0)
    counts = np.zeros(alpha.size, dtype=np.int64)
    count, mean, m2 = 0, 0.0, 0.0
    for j, cnt, rng in mc.chunks(spec, n_samples):
        lams = spectra_batch(t, rng.standard_normal((cnt, t.n)))
        sp = _sp_from_spectra(lams, p)
        counts += (sp[:, None] <= alpha[None, :]).sum(axis=0)
        cm = float(sp.mean())
        cm2 = float(np.sum((sp - cm) ** 2))
        count, mean, m2 = mc._merge(count, mean, m2, cnt, cm, cm2)
    stderr = float(np.sqrt(m2 / (count - 1) / count))
    est = mc.EstimatorResult(mean, stderr, count, spec)
    lb = 0.5 * 3.0 ** p / (2.0 ** p * math.factorial(p))
    phat = counts / count
    se = np.sqrt(phat * (1.0 - phat) / count)
    return SpBatchResult(p, est, float(lb), bool(mean >= lb), alpha, phat, se)


@dataclass(frozen=True)
class DtvBound:
    raw: float
    clamped: float   # total variation distance never exceeds 1


def dtv_bound(kappa4: float) -> DtvBound:
    """Fourth-moment total-variation bound sqrt(kappa4 / 3)."""
    if kappa4 < 0:
        raise ValueError("kappa4 must be >= 0")
    raw = math.sqrt(kappa4 / 3.0)
    return DtvBound(raw, min(raw, 1.0))
