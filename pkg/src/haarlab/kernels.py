"""Analysis kernels and convolution-type operators on grid fields.

The bandpass kernel is beta = Delta^L applied to a tensor trigonometric bump,
which kills all moments of total degree <= 2L-1 analytically.  Convolutions
use sampled spatial kernels whose discrete moments are re-zeroed by a
least-norm correction and whose transfer DC bin is zeroed exactly, so the
cancellation identities hold at machine precision on the grid.  The
Fourier-side operators (Lambda_k, Pi_N) divide by the sampled kernel's own
transfer function, which makes sum_j L_j Lambda_j = Pi_N exact up to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .errors import (
    FourierFloorViolation,
    MarginViolation,
    ResolutionTooCoarse,
)
from .grid import GridField, GridSpec, apply_transfer
from .profiles import CosPowerBump, PartitionBump, radial_cutoff

DEFAULT_DELTA_MIN = 1e-3
DILATION_LADDER = (1.0, 0.9, 0.8, 0.7)


@dataclass(frozen=True)
class SmoothnessParams:
    """Quasi-norm parameters (s, p, q) plus the technical exponents.

    A is the maximal-function exponent (A > d/p) and M the kernel moment
    order (M > A + |s| + 2); K is the top Littlewood-Paley level.
    """

    s: float
    p: float
    q: float
    A: float
    M: int
    K: int

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive (math.inf allowed)")
        if self.K < 0:
            raise ValueError("K must be >= 0")

    def validate(self, d: int) -> None:
        dp = 0.0 if math.isinf(self.p) else d / self.p
        if not self.A > dp:
            raise ValueError(f"need A > d/p = {dp}, got A = {self.A}")
        if not self.M > self.A + abs(self.s) + 2:
            raise ValueError(
                f"need M > A + |s| + 2 = {self.A + abs(self.s) + 2}, got {self.M}"
            )


def make_params(
    s: float,
    p: float,
    q: float,
    d: int = 1,
    K: int | None = None,
    J: int | None = None,
    M: int = 6,
    A: float | None = None,
) -> SmoothnessParams:
    """Convenience constructor with the default exponent policy A = d/p + 1/2."""
    dp = 0.0 if math.isinf(p) else d / p
    if A is None:
        A = dp + 0.5
    if K is None:
        if J is None:
            raise ValueError("need K or J")
        K = J - 2
    prm = SmoothnessParams(s=s, p=p, q=q, A=A, M=M, K=K)
    prm.validate(d)
    return prm


def _compositions(total: int, parts: int):
    """All tuples of nonnegative ints of given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _multi_indices(max_total: int, d: int):
    for total in range(max_total + 1):
        yield from _compositions(total, d)


class KernelBank:
    """Immutable bundle of analysis kernels bound to one GridSpec.

    Exposes sampled spatial kernels for every dyadic level together with
    their transfer functions (cached per level under a byte cap).
    """

    def __init__(
        self,
        spec: GridSpec,
        M: int,
        delta_min: float = DEFAULT_DELTA_MIN,
        bump_order: int = 8,
        cache_bytes: int = 1 << 29,
    ):
        if spec.J < 6:
            raise ResolutionTooCoarse("need 2^-J <= 2^-6 to resolve the kernels")
        self.spec = spec
        self.M = int(M)
        self.L = (self.M + 2) // 2  # ceil((M+1)/2); 2L-1 >= M vanishing moments
        self.delta_min = float(delta_min)
        self.bump = CosPowerBump(m=max(bump_order, self.L + 2))
        self.eta0_rho = 0.375
        self.eta0_tau = 1.5
        self.eta0 = radial_cutoff(self.eta0_rho, self.eta0_tau)
        self.sigma_profile = PartitionBump()
        self.beta0_scale = 1.0  # dilations chosen by the floor ladder
        self.beta_scale = 1.0
        self.fourier_floor = 0.0
        self._kernel_cache: dict = {}
        self._transfer_cache: dict = {}
        self._cache_bytes = 0
        self._cache_cap = cache_bytes
        self._certify()

    # -- closed-form continuous transforms ---------------------------------

    def beta_hat(self, *xi_axes) -> np.ndarray:
        """Continuous FT of beta (real, even) on broadcastable frequency axes."""
        r2 = 0.0
        prod = 1.0
        a = self.beta_scale
        for ax in xi_axes:
            ax = np.asarray(ax, dtype=float)
            r2 = r2 + ax**2
            prod = prod * self.bump.fourier(a * ax)
        return (-4.0 * np.pi**2 * r2) ** self.L * (a**self.spec.d) * prod

    def beta0_hat(self, *xi_axes) -> np.ndarray:
        prod = 1.0
        a = self.beta0_scale
        for ax in xi_axes:
            ax = np.asarray(ax, dtype=float)
            prod = prod * self.bump.fourier(a * ax)
        return prod * (a**self.spec.d) / (a * self.bump.integral) ** self.spec.d

    # -- spatial kernels ----------------------------------------------------

    def _beta_values(self, x_axes) -> np.ndarray:
        """beta(x) = Delta^L prod_i c(x_i / a) on broadcast coordinate axes."""
        d = self.spec.d
        a = self.beta_scale
        total = 0.0
        for alpha in _compositions(self.L, d):
            coeff = math.factorial(self.L)
            for ai in alpha:
                coeff //= math.factorial(ai)
            term = float(coeff)
            for ax, ai in zip(x_axes, alpha):
                term = term * self.bump.derivative(2 * ai, np.asarray(ax) / a) / (
                    a ** (2 * ai)
                )
            total = total + term
        return total

    def _beta0_values(self, x_axes) -> np.ndarray:
        a = self.beta0_scale
        prod = 1.0
        for ax in x_axes:
            prod = prod * self.bump.value(np.asarray(ax) / a)
        return prod / (a * self.bump.integral) ** self.spec.d

    def beta_primitive(self, u) -> np.ndarray:
        """Coordinatewise primitive B(u) = int_{-inf}^u beta (d=1 only)."""
        if self.spec.d != 1:
            raise ValueError("beta_primitive is defined for d=1 banks")
        a = self.beta_scale
        return self.bump.derivative(2 * self.L - 1, np.asarray(u) / a) / a ** (
            2 * self.L - 1
        )

    def kernel_field(self, which: str) -> GridField:
        """Sampled beta / beta0 / sigma / phi as a GridField (inspection)."""
        spec = self.spec
        axes = [np.asarray(a) for a in spec.coord_grids()]
        if which == "beta":
            vals = np.broadcast_to(self._beta_values(axes), spec.shape).copy()
            return GridField(spec, vals, margin=spec.B - 0.5)
        if which == "beta0":
            vals = np.broadcast_to(self._beta0_values(axes), spec.shape).copy()
            return GridField(spec, vals, margin=spec.B - 0.5)
        if which == "sigma":
            prod = 1.0
            for ax in axes:
                prod = prod * self.sigma_profile(ax)
            vals = np.broadcast_to(prod, spec.shape).copy()
            return GridField(spec, vals, margin=None)
        if which == "phi":
            return self.phi_field()
        raise ValueError(f"unknown kernel {which!r}")

    def phi_field(self) -> GridField:
        """Phi with FT identically 1 on the unit ball (Fourier-side build)."""
        spec = self.spec
        axes = self._freq_axes_half()
        r = np.sqrt(sum(np.asarray(a) ** 2 for a in axes))
        prof = radial_cutoff(rho=1.5, tau=1.5)
        half = np.broadcast_to(prof(r), r.shape).copy()
        delta = np.zeros(spec.shape)
        delta[tuple([spec.n // 2] * spec.d)] = 1.0 / spec.cell_volume
        vals = apply_transfer(delta, half)
        return GridField(spec, vals, margin=None)

    # -- sampled level kernels and transfers --------------------------------

    def _level_kernel_support(self, k: int):
        """Offsets r and corrected values of the level-k kernel, on its support."""
        key = k
        if key in self._kernel_cache:
            return self._kernel_cache[key]
        spec = self.spec
        h = spec.h
        if k == 0:
            halfsupp = 0.5 * self.beta0_scale
        else:
            halfsupp = 0.5 * self.beta_scale * 2.0**-k
        rmax = max(int(math.ceil(halfsupp / h)) - 1, 1)
        r = np.arange(-rmax, rmax + 1)
        axes = np.meshgrid(*([r * h] * spec.d), indexing="ij", sparse=True)
        if k == 0:
            vals = np.broadcast_to(
                self._beta0_values(axes), (len(r),) * spec.d
            ).astype(float).copy()
            vals *= 1.0 / (vals.sum() * spec.cell_volume)  # exact unit mass
        else:
            scaled = [np.asarray(a) * 2.0**k for a in axes]
            vals = np.broadcast_to(
                self._beta_values(scaled), (len(r),) * spec.d
            ).astype(float).copy()
            vals *= 2.0 ** (k * spec.d)
            vals = self._moment_correct(vals, scaled)
        out = (r, vals)
        self._kernel_cache[key] = out
        return out

    def _moment_correct(self, vals: np.ndarray, scaled_axes) -> np.ndarray:
        """Least-norm correction zeroing discrete moments up to a level cap.

        Solved through the normal equations of the (small) moment system so
        no large Vandermonde matrix is materialized.
        """
        npts_axis = vals.shape[0]
        m_cap = min(self.M, npts_axis - 2)
        if m_cap < 0:
            return vals
        mis = list(_multi_indices(m_cap, self.spec.d))

        def monomial(mi):
            mono = np.ones_like(vals)
            for ax, e in zip(scaled_axes, mi):
                if e:
                    mono = mono * np.broadcast_to(np.asarray(ax) ** e, vals.shape)
            return mono

        nc = len(mis)
        gram = np.empty((nc, nc))
        defect = np.empty(nc)
        monos = [monomial(mi) for mi in mis]
        for i in range(nc):
            defect[i] = np.dot(monos[i].ravel(), vals.ravel())
            for j in range(i, nc):
                gram[i, j] = gram[j, i] = np.dot(monos[i].ravel(), monos[j].ravel())
        y = np.linalg.solve(gram, -defect)
        corr = np.zeros_like(vals)
        for yi, mono in zip(y, monos):
            corr += yi * mono
        return vals + corr

    def transfer(self, k: int) -> np.ndarray:
        """rfft-layout transfer of the sampled level-k kernel (real array).

        The DC bin is pinned exactly (0 for k >= 1, 1 for k = 0) so constants
        are annihilated / preserved at machine precision.
        """
        if k in self._transfer_cache:
            return self._transfer_cache[k]
        spec = self.spec
        r, vals = self._level_kernel_support(k)
        arr = np.zeros(spec.shape)
        arr[np.ix_(*([r % spec.n] * spec.d))] = vals
        half = sfft.rfftn(arr)
        scale = max(np.abs(half.real).max(), 1.0)
        if np.abs(half.imag).max() > 1e-9 * scale:
            raise FourierFloorViolation("kernel transfer unexpectedly non-real")
        half = half.real * spec.cell_volume
        half.flat[0] = 0.0 if k >= 1 else 1.0
        self._store_transfer(k, half)
        return half

    def _store_transfer(self, k: int, half: np.ndarray) -> None:
        nbytes = half.nbytes
        while self._cache_bytes + nbytes > self._cache_cap and self._transfer_cache:
            _, old = self._transfer_cache.popitem()
            self._cache_bytes -= old.nbytes
        self._transfer_cache[k] = half
        self._cache_bytes += nbytes

    def _freq_axes_half(self) -> list:
        """Broadcastable frequency axes matching the rfft layout."""
        spec = self.spec
        full = spec.axis_freqs()
        rhalf = spec.rfft_axis_freqs()
        axes = []
        for axis in range(spec.d):
            f = rhalf if axis == spec.d - 1 else full
            shape = [1] * spec.d
            shape[axis] = len(f)
            axes.append(f.reshape(shape))
        return axes

    def eta0_half(self, level: int) -> np.ndarray:
        """eta0(2^-level xi) on the rfft frequency layout."""
        axes = self._freq_axes_half()
        r = np.sqrt(sum(np.asarray(a) ** 2 for a in axes))
        return self.eta0(r * 2.0**-level)

    # -- certification ------------------------------------------------------

    def _certify(self) -> None:
        # beta0: |FT| >= delta_min on the unit ball, after optional shrinking
        for a in DILATION_LADDER:
            self.beta0_scale = a
            r = np.linspace(0.0, 1.0, 513)
            if np.abs(self.beta0_hat(r)).min() >= self.delta_min:
                break
        else:
            raise FourierFloorViolation("beta0 floor unreachable on |xi| <= 1")
        floor = None
        for a in DILATION_LADDER:
            self.beta_scale = a
            lo = self._annulus_min(0.125, 1.0)
            if lo >= self.delta_min:
                floor = lo
                break
        if floor is None:
            raise FourierFloorViolation("beta floor unreachable on the annulus")
        self.fourier_floor = float(floor)

    def _annulus_min(self, r_lo: float, r_hi: float) -> float:
        """min |beta_hat| over the annulus, scanned over radii and directions."""
        radii = np.linspace(r_lo, r_hi, 257)
        lo = math.inf
        dirs = _directions(self.spec.d)
        for u in dirs:
            axes = [radii * ui for ui in u]
            vals = np.abs(self.beta_hat(*axes))
            lo = min(lo, float(vals.min()))
        return lo

    def annulus_floor_on_grid(self) -> float:
        """min |beta_hat| over discrete grid frequencies in the annulus."""
        axes = self._freq_axes_half()
        r = np.sqrt(sum(np.asarray(a) ** 2 for a in axes))
        mask = (r >= 0.125) & (r <= 1.0)
        vals = np.abs(np.broadcast_to(self.beta_hat(*axes), r.shape)[mask])
        return float(vals.min()) if vals.size else math.inf

    def moment_defects(self) -> dict:
        """Quadrature moments of beta, keyed by multi-index.

        The analytic moments of total degree <= 2L-1 >= M vanish, so this
        reports the pure quadrature defect.  Evaluated in extended precision:
        the kernel amplitude is large and the moment sums cancel far below
        float64 resolution.
        """
        spec = self.spec
        h = np.longdouble(1.0) / np.longdouble(2.0) ** spec.J
        rmax = max(int(math.ceil(0.5 * self.beta_scale / spec.h)) - 1, 1)
        r = np.arange(-rmax, rmax + 1)
        a = np.longdouble(self.beta_scale)
        axes = np.meshgrid(*([r * h] * spec.d), indexing="ij", sparse=True)
        total = np.zeros((len(r),) * spec.d, dtype=np.longdouble)
        for alpha in _compositions(self.L, spec.d):
            coeff = math.factorial(self.L)
            for ai in alpha:
                coeff //= math.factorial(ai)
            term = np.longdouble(coeff)
            for ax, ai in zip(axes, alpha):
                term = term * self.bump.derivative(
                    2 * ai, np.asarray(ax) / a, dtype=np.longdouble
                ) / a ** (2 * ai)
            total = total + term
        out = {}
        vol = h**spec.d
        for mi in _multi_indices(self.M, spec.d):
            mono = np.ones(total.shape, dtype=np.longdouble)
            for ax, e in zip(axes, mi):
                if e:
                    mono = mono * np.broadcast_to(np.asarray(ax) ** e, total.shape)
            out[mi] = float((total * mono).sum() * vol)
        return out

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(
            f"{self.spec.d},{self.spec.J},{self.spec.B},{self.M},{self.L},"
            f"{self.bump.m},{self.beta_scale},{self.beta0_scale},{self.delta_min}".encode()
        )
        return h.hexdigest()[:16]


def _directions(d: int) -> list:
    """Axis, diagonal, and mixed unit directions for radial scans."""
    if d == 1:
        return [(1.0,)]
    dirs = []
    from itertools import product

    for v in product((0.0, 1.0), repeat=d):
        if any(v):
            norm = math.sqrt(sum(x * x for x in v))
            dirs.append(tuple(x / norm for x in v))
    return dirs


def build_kernel_bank(
    M: int, spec: GridSpec, delta_min: float = DEFAULT_DELTA_MIN
) -> KernelBank:
    """Construct and certify the kernel bank for a grid."""
    if M < 1:
        raise ValueError("M must be >= 1")
    bank = KernelBank(spec, M, delta_min=delta_min)
    defects = bank.moment_defects()
    worst = max(abs(v) for v in defects.values())
    if worst > 1e-8:
        raise FourierFloorViolation(
            f"moment defect {worst:.3e} exceeds 1e-8 at J={spec.J}"
        )
    return bank


# ---------------------------------------------------------------------------
# Operators


def local_mean(f: GridField, k: int, bank: KernelBank) -> GridField:
    """L_k f: convolution with beta0 (k=0) or 2^{kd} beta(2^k .) (k>=1)."""
    spec = f.spec
    if not 0 <= k <= spec.J - 2:
        raise ResolutionTooCoarse(f"local_mean level {k} needs J >= {k + 2}")
    radius = 0.5 * (bank.beta0_scale if k == 0 else bank.beta_scale * 2.0**-k)
    if f.margin is not None and f.margin < radius - 1e-12:
        raise MarginViolation(
            f"field margin {f.margin} < kernel radius {radius} at level {k}"
        )
    out = apply_transfer(f.values, bank.transfer(k))
    return GridField(spec, out, margin=None)


def _lambda_multiplier(bank: KernelBank, k: int) -> np.ndarray:
    numer = (
        bank.eta0_half(0)
        if k == 0
        else bank.eta0_half(k) - bank.eta0_half(k - 1)
    )
    denom = bank.transfer(k)
    mask = numer != 0.0
    if (np.abs(denom[mask]) < bank.delta_min).any():
        raise FourierFloorViolation(f"transfer below delta_min on the level-{k} band")
    mult = np.zeros_like(numer)
    mult[mask] = numer[mask] / denom[mask]
    return mult


def lambda_op(f: GridField, k: int, bank: KernelBank) -> GridField:
    """Fourier companion Lambda_k (division only on the numerator support)."""
    spec = f.spec
    if not 0 <= k <= spec.J - 2:
        raise ResolutionTooCoarse(f"lambda_op level {k} needs J >= {k + 2}")
    out = apply_transfer(f.values, _lambda_multiplier(bank, k))
    return GridField(spec, out, margin=None)


def lj_lambda_j(f: GridField, j: int, bank: KernelBank) -> GridField:
    """The product operator L_j Lambda_j, applied as one multiplier.

    The kernel transfer cancels against Lambda_j's denominator, leaving the
    bandpass window eta0(2^-j xi) - eta0(2^-j+1 xi) exactly; reconstruction
    identities (sum_j L_j Lambda_j = Pi_N) therefore telescope to roundoff.
    The floor certificate of lambda_op still applies (same denominator).
    """
    spec = f.spec
    if not 0 <= j <= spec.J - 2:
        raise ResolutionTooCoarse(f"lj_lambda_j level {j} needs J >= {j + 2}")
    _lambda_multiplier(bank, j)  # floor check
    numer = (
        bank.eta0_half(0)
        if j == 0
        else bank.eta0_half(j) - bank.eta0_half(j - 1)
    )
    out = apply_transfer(f.values, numer)
    return GridField(spec, out, margin=None)


def pi_op(f: GridField, N: int, bank: KernelBank) -> GridField:
    """Low-pass projection: multiplier eta0(2^-N xi)."""
    spec = f.spec
    if not 0 <= N <= spec.J - 2:
        raise ResolutionTooCoarse(f"pi_op level {N} needs J >= {N + 2}")
    out = apply_transfer(f.values, bank.eta0_half(N))
    return GridField(spec, out, margin=None)


def fourier_gradient(f: GridField) -> list:
    """Partial derivatives via the 2 pi i xi multiplier (list of fields)."""
    spec = f.spec
    hat = sfft.fftn(f.values.astype(complex))
    freqs = spec.axis_freqs()
    out = []
    for axis in range(spec.d):
        shape = [1] * spec.d
        shape[axis] = spec.n
        mult = (2j * np.pi * freqs).reshape(shape)
        g = sfft.ifftn(hat * mult)
        if not f.is_complex:
            g = g.real
        out.append(GridField(spec, g, margin=None))
    return out


def peetre_max(
    g: GridField, A: float, j: int, r_trunc: float | None = None
) -> GridField:
    """Translation-penalized maximal function, exact over all grid offsets.

    Penalty uses the sup-norm of the offset: sup_h |g(x+h)| / (1+2^j |h|_oo)^A,
    computed with periodic wrap via incremental sliding-window maxima.
    r_trunc restricts |h|_oo; the truncation error is bounded by
    sup|g| * (1 + 2^j r_trunc)^-A.
    """
    if A <= 0:
        raise ValueError("A must be positive")
    spec = g.spec
    mags = np.abs(g.values)
    best = mags.copy()  # h = 0 term
    h = spec.h
    rmax = spec.n // 2 if r_trunc is None else min(spec.n // 2, int(r_trunc / h))
    current = mags
    gmax = mags.max()
    for r in range(1, rmax + 1):
        for axis in range(spec.d):
            current = ndimage.maximum_filter1d(current, size=3, axis=axis, mode="wrap")
        w = (1.0 + 2.0**j * r * h) ** (-A)
        np.maximum(best, current * w, out=best)
        if gmax * w <= best.min():
            break  # penalties can no longer raise any sample
    return GridField(spec, best, margin=None)


def infimum_filter(f: GridField, radius: float) -> GridField:
    """min over the sup-ball of given radius (periodic), per sample."""
    spec = f.spec
    size = 2 * int(round(radius / spec.h)) + 1
    out = ndimage.minimum_filter(f.values, size=size, mode="wrap")
    return GridField(spec, out, margin=None)
