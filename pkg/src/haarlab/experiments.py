"""Measurement harness: parameter-plane classification, operator-norm lower
bounds via adversarial probe families, growth-exponent fitting, scans, and
the exact-identity suite.

Operator norms are measured as lower bounds (max ratio over a probe family);
no numerical upper bounds are claimed.  Only exponents and ratios are
meaningful outputs; absolute values depend on the quasi-norm convention.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import u_set_mask
from .errors import DegenerateFit
from .generators import (
    PacketPlan,
    RademacherSigns,
    counterexample_gN,
    density_failure_f,
    fractal_family,
    random_bandlimited,
    smooth_bump,
    weierstrass_packet,
)
from .grid import GridField, GridSpec
from .haar import (
    Enumeration,
    MaskA,
    build_canonical_enumeration,
    dyadic_average,
    haar_coeff,
    haar_field,
    partial_sum,
    projection_PE,
    scaling_index,
    t_mask,
    wavelet_index,
)
from .kernels import KernelBank, SmoothnessParams, local_mean, make_params
from .norms import NormReport, lp_norm, tl_norm

_EQ_TOL = 1e-12


def _invp(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= _EQ_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class RegionVerdict:
    in_A: bool
    en_uniform: bool
    schauder: bool
    unconditional: bool
    predicted_growth: str  # "bounded" | "poly" | "exp" | "undefined"
    predicted_exponent: float | None  # poly: 1/2-1/q ; exp: s-1 ; bounded: 0


def in_region_A(s: float, p: float, q: float, d: int) -> bool:
    """Membership in the region where each individual averaging operator is
    bounded: max(d/p-d, 1/p-1) < s < 1/p, or s = d/p-d with p <= 1, or
    (p, s) = (infinity, 0)."""
    ip = _invp(p)
    lo = max(d * ip - d, ip - 1.0)
    if lo < s < ip:
        return True
    if not math.isinf(p) and p <= 1.0 and _eq(s, d * ip - d):
        return True
    if math.isinf(p) and _eq(s, 0.0):
        return True
    return False


def en_uniformly_bounded(s: float, p: float, q: float, d: int) -> bool:
    """The five-case region of uniform boundedness of the dyadic averages."""
    ip = _invp(p)
    thr = d / (d + 1.0)
    if p > 1.0 and (ip - 1.0) < s < ip:  # (i), includes p = infinity
        return True
    if not math.isinf(p):
        if thr <= p < 1.0 and _eq(s, 1.0) and q <= 2.0:  # (ii)
            return True
        if thr < p <= 1.0 and d * (ip - 1.0) < s < 1.0:  # (iii)
            return True
        if thr < p <= 1.0 and _eq(s, d * (ip - 1.0)):  # (iv)
            return True
    if math.isinf(p) and _eq(s, 0.0):  # (v)
        return True
    return False


def schauder_all_strongly_admissible(s: float, p: float, q: float, d: int) -> bool:
    """Every strongly admissible enumeration is a Schauder basis here."""
    if math.isinf(p) or math.isinf(q):
        return False
    ip = 1.0 / p
    thr = d / (d + 1.0)
    if 1.0 < p and (ip - 1.0) < s < ip:
        return True
    if thr < p <= 1.0 and (d * ip - d) < s < 1.0:
        return True
    if thr < p <= 1.0 and _eq(s, d * ip - d):
        return True
    return False


def unconditional_basis(s: float, p: float, q: float, d: int) -> bool:
    """Unconditionality: the primary range intersected with the q-range."""
    if math.isinf(p) or math.isinf(q):
        return False
    ip, iq = 1.0 / p, 1.0 / q
    thr = d / (d + 1.0)
    range_p = thr < p and max(d * (ip - 1.0), ip - 1.0) < s < min(1.0, ip)
    range_q = max(d * (iq - 1.0), iq - 1.0) < s < iq
    return range_p and range_q


def classify(s: float, p: float, q: float, d: int) -> RegionVerdict:
    in_A = in_region_A(s, p, q, d)
    en = en_uniformly_bounded(s, p, q, d)
    sch = schauder_all_strongly_admissible(s, p, q, d)
    unc = unconditional_basis(s, p, q, d)
    if not in_A:
        growth, expo = "undefined", None
    elif 1.0 < s < _invp(p):
        growth, expo = "exp", s - 1.0
    elif _eq(s, 1.0) and q > 2.0:
        growth = "poly"
        expo = 0.5 - (0.0 if math.isinf(q) else 1.0 / q)
    else:
        growth, expo = "bounded", 0.0
    return RegionVerdict(in_A, en, sch, unc, growth, expo)


# ---------------------------------------------------------------------------
# Rate fitting


@dataclass
class RateFit:
    samples: list
    model: str  # "power-in-N" | "exponential-in-N"
    exponent: float
    r2: float


def rate_fit(samples, model: str = "power-in-N") -> RateFit:
    """Least squares of log2(value) against log2(N) or N."""
    samples = [(float(n), float(v)) for n, v in samples]
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    if any(v <= 0 for _, v in samples):
        raise ValueError("values must be positive")
    vals = np.array([v for _, v in samples])
    if np.allclose(vals, vals[0], rtol=1e-12, atol=0.0):
        return RateFit(samples, model, 0.0, 1.0)
    if model == "power-in-N":
        x = np.log2([n for n, _ in samples])
    elif model == "exponential-in-N":
        x = np.array([n for n, _ in samples])
    else:
        raise ValueError(f"unknown model {model!r}")
    y = np.log2(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(samples, model, float(slope), max(min(r2, 1.0), 0.0))


# ---------------------------------------------------------------------------
# Probe families


@dataclass
class Probe:
    pid: str
    build: object  # callable N -> GridField
    n_dependent: bool


def probe_battery(
    spec: GridSpec,
    bank: KernelBank,
    seed: int = 7,
    kinds: tuple = ("packet", "bandlimited", "bump", "fractal", "cellconst"),
    n_random: int = 3,
) -> list:
    """Deterministic adversarial probe family (d = 1 packets where available)."""
    probes: list = []
    if "packet" in kinds and spec.d == 1:

        def build_packet(N, _seed=seed):
            g, _ = counterexample_gN(N, q=2.0, n_draws=8, spec=spec, bank=bank, seed=_seed)
            return g

        probes.append(Probe("packet_best", build_packet, True))
    if "bandlimited" in kinds:
        for i in range(n_random):

            def build_bl(N, _i=i, _seed=seed):
                band = 2.0 ** min(N + 1, spec.J - 4)
                return random_bandlimited(spec, band, seed=_seed * 977 + _i)

            probes.append(Probe(f"bandlimited_{i}", build_bl, True))
    if "bump" in kinds:
        for w in (0.375, 0.1875):
            probes.append(
                Probe(
                    f"bump_{w}",
                    lambda N, _w=w: smooth_bump(spec, width=_w, center=0.5),
                    False,
                )
            )
    if "fractal" in kinds:

        def build_fr(N):
            j = min(max(N, 1), spec.J - 4)
            return fractal_family("F1_gj", j, spec)

        def build_frsum(N):
            j = min(max(N, 1), spec.J - 4)
            return fractal_family("F1_gsum", j, spec)

        probes.append(Probe("fractal_gj", build_fr, True))
        probes.append(Probe("fractal_gsum", build_frsum, True))
    if "cellconst" in kinds:

        def build_cc(N):
            return dyadic_average(smooth_bump(spec, width=0.375, center=0.5), N)

        probes.append(Probe("cellconst", build_cc, True))
    if "density" in kinds:
        probes.append(Probe("density", lambda N: density_failure_f(spec), False))
    return probes


# ---------------------------------------------------------------------------
# Operators under test


@dataclass
class OperatorSpec:
    kind: str  # "identity" | "EN" | "TN" | "SR" | "PE"
    mask_seed: int | None = None  # TN: random sign mask; None -> all ones
    enumeration: Enumeration | None = None  # SR / PE


def apply_operator(op: OperatorSpec, f: GridField, N: int, bank: KernelBank) -> GridField:
    spec = f.spec
    if op.kind == "identity":
        return f
    if op.kind == "EN":
        return dyadic_average(f, N)
    if op.kind == "TN":
        if op.mask_seed is None:
            mask = MaskA.constant(1.0)
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=op.mask_seed, spawn_key=(N,))
            )
            c = spec.cells_per_axis(N)
            arrays = {}
            from itertools import product as _product

            for eps in _product((0, 1), repeat=spec.d):
                if not any(eps):
                    continue
                arrays[eps] = rng.choice([-1.0, 1.0], size=(c,) * spec.d)
            mask = MaskA(arrays=arrays)
        return t_mask(f, N, mask)
    if op.kind == "SR":
        enum = op.enumeration
        R = enum.markers.get(N, len(enum.items))
        return partial_sum(f, enum, R)
    if op.kind == "PE":
        enum = op.enumeration
        R = enum.markers.get(N, len(enum.items))
        return partial_sum(f, enum, R)
    raise ValueError(f"unknown operator {op.kind!r}")


def op_norm_lower(
    op: OperatorSpec,
    probes: list,
    prm: SmoothnessParams,
    N_list,
    spec: GridSpec,
    bank: KernelBank,
) -> list:
    """For each N: max over probes of ||op f|| / ||f|| (quasi-norm ratios).

    Returns [(N, best_ratio, best_probe_id)].  Deterministic given seeds.
    """
    results = []
    denom_cache: dict = {}
    for N in N_list:
        best, best_id = -1.0, None
        for probe in probes:
            f = probe.build(N)
            if probe.n_dependent or probe.pid not in denom_cache:
                denom = tl_norm(f, prm, bank).value
                if not probe.n_dependent:
                    denom_cache[probe.pid] = denom
            else:
                denom = denom_cache[probe.pid]
            if denom <= 0:
                continue
            out = apply_operator(op, f, N, bank)
            ratio = tl_norm(out, prm, bank).value / denom
            if ratio > best:
                best, best_id = ratio, probe.pid
        results.append((N, best, best_id))
    return results


# ---------------------------------------------------------------------------
# Region scan


@dataclass
class ScanRow:
    s: float
    p: float
    q: float
    d: int
    verdict: RegionVerdict
    model: str
    measured: float | None
    r2: float | None
    agree: str  # "yes" | "no" | "n/a" | "error:..."


POWER_TOL = 0.15
EXP_TOL = 0.10
R2_MIN = 0.9


def region_scan(
    tuples,
    d: int,
    N_list,
    spec: GridSpec,
    bank: KernelBank,
    probe_kinds: tuple = ("packet", "bandlimited", "bump", "fractal"),
    seed: int = 7,
    out_csv: str | None = None,
) -> list:
    """Classify and measure each (s, p, q); emits CSV when out_csv is set."""
    rows = []
    probes = probe_battery(spec, bank, seed=seed, kinds=probe_kinds)
    for s, p, q in tuples:
        verdict = classify(s, p, q, d)
        model = "exponential-in-N" if s > 1.0 else "power-in-N"
        try:
            prm = make_params(s, p, q, d=d, K=spec.J - 4)
            series = op_norm_lower(
                OperatorSpec("EN"), probes, prm, N_list, spec, bank
            )
            fit = rate_fit([(n, v) for n, v, _ in series], model=model)
            measured, r2 = fit.exponent, fit.r2
            if verdict.predicted_exponent is None:
                agree = "n/a"
            else:
                tol = EXP_TOL if model == "exponential-in-N" else POWER_TOL
                ok = abs(measured - verdict.predicted_exponent) <= tol and r2 >= R2_MIN
                # bounded predictions fit flat series whose r2 is meaningless
                if verdict.predicted_growth == "bounded":
                    ok = abs(measured) <= tol
                agree = "yes" if ok else "no"
        except Exception as exc:  # record and continue scanning
            measured, r2, agree = None, None, f"error:{type(exc).__name__}"
        rows.append(ScanRow(s, p, q, d, verdict, model, measured, r2, agree))
    if out_csv:
        write_scan_csv(rows, out_csv)
    return rows


def write_scan_csv(rows: list, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "s", "p", "q", "d", "in_A", "en_uniform", "schauder",
                "unconditional", "predicted_growth", "predicted_exponent",
                "model", "measured_exponent", "r2", "agree",
            ]
        )
        for r in rows:
            v = r.verdict
            w.writerow(
                [
                    repr(r.s), repr(r.p), repr(r.q), r.d,
                    v.in_A, v.en_uniform, v.schauder, v.unconditional,
                    v.predicted_growth,
                    "" if v.predicted_exponent is None else repr(v.predicted_exponent),
                    r.model,
                    "" if r.measured is None else repr(r.measured),
                    "" if r.r2 is None else repr(r.r2),
                    r.agree,
                ]
            )


# ---------------------------------------------------------------------------
# Exact-identity suite


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def _sigma_window(spec: GridSpec, bank: KernelBank, nu) -> GridField:
    axes = spec.coord_grids()
    prod = 1.0
    for ax, v in zip(axes, nu):
        prod = prod * bank.sigma_profile(np.asarray(ax) - v)
    return GridField(spec, np.broadcast_to(prod, spec.shape).copy(), margin=None)


def identity_suite(
    spec: GridSpec, bank: KernelBank, seed: int = 11, fault: str | None = None
) -> list:
    """Exact-identity checks; failures are entries with excessive residuals.

    fault="mask" perturbs one localization mask entry (for fault-injection
    tests of the reporting pipeline).
    """
    rng = np.random.default_rng(seed)
    results = []

    # (d) partition of unity
    axes = spec.coord_grids()
    acc = 1.0
    for ax in axes:
        ax = np.asarray(ax)
        line = np.zeros_like(ax, dtype=float)
        for v in range(-spec.B - 1, spec.B + 1):
            line = line + bank.sigma_profile(ax - v)
        acc = acc * line
    resid_part = float(np.abs(acc - 1.0).max())
    results.append(CheckResult("partition_of_unity", resid_part, 1e-10))

    # (b) martingale identity, exact cell arithmetic
    g = GridField(spec, rng.standard_normal(spec.shape), margin=None)
    resid_mart = 0.0
    for N in (1, 3):
        tm = t_mask(g, N, MaskA.constant(1.0))
        diff = dyadic_average(g, N + 1).values - dyadic_average(g, N).values
        resid_mart = max(resid_mart, float(np.abs(tm.values - diff).max()))
    scale = float(np.abs(g.values).max())
    results.append(CheckResult("martingale_difference", resid_mart / scale, 1e-12))

    # biorthogonality over a small family
    items = [scaling_index((0,) * spec.d)]
    for k in range(0, min(3, spec.J - 1)):
        items.append(wavelet_index((1,) * spec.d, k, (0,) * spec.d))
        items.append(wavelet_index((1,) * spec.d, k, (1,) * spec.d))
    resid_bio = 0.0
    for i, a in enumerate(items):
        fa = haar_field(a, spec)
        for j, b in enumerate(items):
            c = haar_coeff(fa, b)
            resid_bio = max(resid_bio, abs(c - (1.0 if i == j else 0.0)))
    results.append(CheckResult("biorthogonality", resid_bio, 1e-12))

    # E_N nesting / idempotence
    resid_nest = 0.0
    for N, M in ((2, 2), (2, 4), (5, 3)):
        lhs = dyadic_average(dyadic_average(g, M), N).values
        rhs = dyadic_average(g, min(N, M)).values
        resid_nest = max(resid_nest, float(np.abs(lhs - rhs).max()))
    results.append(CheckResult("averaging_nesting", resid_nest / scale, 5e-13))

    # (a) localization identity at marker-adjacent positions
    k_max = min(4, spec.J - 2)
    enum = build_canonical_enumeration(k_max, (-spec.B, spec.B), d=spec.d)
    resid_loc = 0.0
    g_norm = scale
    for trial in range(2):
        g2 = GridField(spec, rng.standard_normal(spec.shape), margin=None)
        for nu in [(0,) * spec.d, (-1,) * spec.d]:
            window = _sigma_window(spec, bank, nu)
            gw = GridField(spec, g2.values * window.values, margin=None)
            for m, frac in ((1, 0.5), (2, 0.25), (3, 0.6)):
                if m + 1 > k_max + 1:
                    continue
                R_lo, R_hi = enum.markers[m], enum.markers[m + 1]
                R = R_lo + int(frac * (R_hi - R_lo))
                lhs = partial_sum(gw, enum, R)
                mask = MaskA()
                for it in enum.items[R_lo:R]:
                    mask.entries[(it.nu, it.eps)] = 1.0
                if fault == "mask" and mask.entries:
                    key = next(iter(mask.entries))
                    mask.entries[key] = 0.0
                rhs = dyadic_average(gw, m).values + t_mask(gw, m, mask).values
                resid_loc = max(resid_loc, float(np.abs(lhs.values - rhs).max()))
    results.append(
        CheckResult("localization_identity", resid_loc / g_norm, 1e-10)
    )

    # marker identity S_{R(m)} = E_m on a supported field
    win = smooth_bump(spec, width=1.0, center=0.0)
    resid_marker = 0.0
    for m in range(0, min(3, k_max + 1)):
        sr = partial_sum(win, enum, enum.markers[m])
        em = dyadic_average(win, m)
        resid_marker = max(resid_marker, float(np.abs(sr.values - em.values).max()))
    results.append(CheckResult("partial_sum_markers", resid_marker, 1e-12))

    # (c) support property of L_k E_N
    f3 = smooth_bump(spec, width=1.0, center=0.0)
    resid_supp = 0.0
    for N in (2, 3):
        eN = dyadic_average(f3, N)
        for dk in (1, 2, 3):
            k = N + dk
            if k > spec.J - 4:
                continue
            lk = local_mean(eN, k, bank)
            mags = np.abs(lk.values)
            inside = u_set_mask(N, k, spec.coord_grids(), inflate=spec.h)
            outside_max = float(mags[~inside].max()) if (~inside).any() else 0.0
            resid_supp = max(resid_supp, outside_max / mags.max())
    results.append(CheckResult("support_localization", resid_supp, 1e-10))

    return results


def en_growth_experiment(
    p: float,
    q_list,
    N_list,
    spec: GridSpec,
    bank: KernelBank,
    n_draws: int = 16,
    seed: int = 2024,
) -> dict:
    """Growth of ||E_L f_N|| / ||f_N|| at s=1 against the packet family.

    One best-of-n draw is selected per N (via the averaging functional) and
    shared across the q values; the averaging level L follows the desk-size
    packet plan.  Returns {q: [(N, ratio)]}.
    """
    out = {q: [] for q in q_list}
    for N in N_list:
        g, rep = counterexample_gN(
            N, q=2.0, n_draws=n_draws, spec=spec, bank=bank, p=p, seed=seed
        )
        avg = dyadic_average(g, rep["avg_level"])
        for q in q_list:
            prm = make_params(1.0, p, q, d=spec.d, K=spec.J - 4)
            denom = tl_norm(g, prm, bank).value
            numer = tl_norm(avg, prm, bank).value
            out[q].append((N, numer / denom))
    return out


# ---------------------------------------------------------------------------
# Non-convergence probe


def nonconvergence_probe(
    prm: SmoothnessParams, spec: GridSpec, bank: KernelBank, N_list
) -> tuple:
    """Series ||E_N f - f|| for the density-failure function: returns
    (RateFit in the exponential model, floor value, series)."""
    f = density_failure_f(spec)
    series = []
    for N in N_list:
        diff = dyadic_average(f, N, complement=True)
        series.append((N, tl_norm(diff, prm, bank).value))
    fit = rate_fit(series, model="exponential-in-N")
    floor = min(v for _, v in series)
    return fit, floor, series
