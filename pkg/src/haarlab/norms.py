"""Discrete Besov and Triebel-Lizorkin quasi-norms via local means.

Levels run over 0..K with K <= J - 4 recommended (the finest kernels then
carry the full moment correction).  L^p integrals are midpoint Riemann sums;
L^infty and l^infty are exact maxima over samples / levels.  Absolute values
are convention-dependent; every experiment in this package compares ratios
or fits growth exponents only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube
from .errors import LevelTooFine
from .grid import GridField, GridSpec, cell_means
from .kernels import KernelBank, SmoothnessParams, lj_lambda_j, local_mean


@dataclass
class NormReport:
    value: float
    per_level: list
    params: SmoothnessParams
    truncation: int

    def to_csv(self, path: str) -> None:
        p = self.params
        with open(path, "w") as fh:
            fh.write(
                f"# s={p.s!r} p={p.p!r} q={p.q!r} A={p.A!r} M={p.M} "
                f"K={self.truncation} value={self.value!r}\n"
            )
            fh.write("k,level_term\n")
            for k, t in enumerate(self.per_level):
                fh.write(f"{k},{t!r}\n")


def lp_norm(values: np.ndarray, p: float, spec: GridSpec) -> float:
    """Riemann-sum L^p quasi-norm (exact max for p = infinity)."""
    mags = np.abs(values)
    if math.isinf(p):
        return float(mags.max())
    return float((mags**p).sum() * spec.cell_volume) ** (1.0 / p)


def lq_aggregate(terms, q: float) -> float:
    terms = np.asarray(terms, dtype=float)
    if math.isinf(q):
        return float(terms.max()) if terms.size else 0.0
    return float((terms**q).sum()) ** (1.0 / q)


def _check_levels(prm: SmoothnessParams, spec: GridSpec) -> None:
    if prm.K > spec.J - 2:
        raise LevelTooFine(f"K={prm.K} needs J >= K+2")


def besov_norm(f: GridField, prm: SmoothnessParams, bank: KernelBank) -> NormReport:
    """l^q over levels of 2^{ks} ||L_k f||_p."""
    _check_levels(prm, f.spec)
    terms = []
    for k in range(prm.K + 1):
        lk = local_mean(f, k, bank)
        terms.append(2.0 ** (k * prm.s) * lp_norm(lk.values, prm.p, f.spec))
    return NormReport(lq_aggregate(terms, prm.q), terms, prm, prm.K)


def tl_norm(f: GridField, prm: SmoothnessParams, bank: KernelBank) -> NormReport:
    """L^p of the pointwise l^q aggregate (dyadic-cube form at p = infinity).

    p = q = infinity is the Besov norm by convention.
    """
    _check_levels(prm, f.spec)
    if math.isinf(prm.p) and math.isinf(prm.q):
        return besov_norm(f, prm, bank)
    if math.isinf(prm.p):
        return _tl_norm_pinf(f, prm, bank)
    spec = f.spec
    acc = np.zeros(spec.shape)
    per_level = []
    for k in range(prm.K + 1):
        lk = local_mean(f, k, bank)
        w = 2.0 ** (k * prm.s) * np.abs(lk.values)
        per_level.append(lp_norm(lk.values, prm.p, spec) * 2.0 ** (k * prm.s))
        if math.isinf(prm.q):
            np.maximum(acc, w, out=acc)
        else:
            acc += w**prm.q
    if math.isinf(prm.q):
        agg = acc
    else:
        agg = acc ** (1.0 / prm.q)
    value = lp_norm(agg, prm.p, spec)
    return NormReport(value, per_level, prm, prm.K)


def _tl_norm_pinf(f: GridField, prm: SmoothnessParams, bank: KernelBank) -> NormReport:
    """sup over n and level-n cubes of the cube-averaged tail aggregate."""
    spec = f.spec
    q = prm.q
    fields = []
    per_level = []
    for k in range(prm.K + 1):
        lk = local_mean(f, k, bank)
        w = (2.0 ** (k * prm.s) * np.abs(lk.values)) ** q
        fields.append(w)
        per_level.append(2.0 ** (k * prm.s) * lp_norm(lk.values, math.inf, spec))
    best = 0.0
    tail = np.zeros(spec.shape)
    # accumulate the tail sum_{k >= n} while sweeping n downward
    for n in range(prm.K, -1, -1):
        tail += fields[n]
        cm = cell_means(tail, spec, n)
        best = max(best, float(cm.max()))
    return NormReport(best ** (1.0 / q), per_level, prm, prm.K)


def multi_tl_norms(
    f: GridField, prms: list, bank: KernelBank
) -> list:
    """tl_norm for several parameter sets sharing one pass over the levels.

    All entries must share K and have finite p (the common case in scans).
    """
    if not prms:
        return []
    K = prms[0].K
    if any(p.K != K for p in prms):
        raise ValueError("multi_tl_norms requires a common K")
    if any(math.isinf(p.p) or math.isinf(p.q) for p in prms):
        return [tl_norm(f, p, bank) for p in prms]
    spec = f.spec
    accs = [np.zeros(spec.shape) for _ in prms]
    per_level = [[] for _ in prms]
    for k in range(K + 1):
        lk = local_mean(f, k, bank)
        mags = np.abs(lk.values)
        lp_cache: dict = {}
        for i, prm in enumerate(prms):
            w = 2.0 ** (k * prm.s) * mags
            key = (prm.s, prm.p)
            if key not in lp_cache:
                lp_cache[key] = 2.0 ** (k * prm.s) * lp_norm(mags, prm.p, spec)
            per_level[i].append(lp_cache[key])
            accs[i] += w**prm.q
    out = []
    for i, prm in enumerate(prms):
        agg = accs[i] ** (1.0 / prm.q)
        out.append(NormReport(lp_norm(agg, prm.p, spec), per_level[i], prm, K))
    return out


@dataclass
class CubeFunctionalTrace:
    value: float
    increments: list

    @property
    def partial_sums(self) -> list:
        out, acc = [], 0.0
        for inc in self.increments:
            acc += inc
            out.append(acc)
        return out


def _cube_slices(I: DyadicCube, spec: GridSpec) -> tuple:
    if I.level < 0 or I.level > spec.J:
        raise LevelTooFine("cube level outside grid range")
    block = spec.block(I.level)
    lim = spec.B * 2**I.level
    sls = []
    for v in I.index:
        if not -lim <= v < lim:
            raise ValueError(f"cube {I} does not fit the box")
        pos = v + lim
        sls.append(slice(pos * block, (pos + 1) * block))
    return tuple(sls)


def integrate_over_cube(values: np.ndarray, I: DyadicCube, spec: GridSpec) -> float:
    region = values[_cube_slices(I, spec)]
    return float(region.sum().real) * spec.cell_volume


def cube_functional(
    f: GridField, I: DyadicCube, bank: KernelBank, J_top: int
) -> CubeFunctionalTrace:
    """Partial sums of sum_j int_I L_j Lambda_j f with per-level increments."""
    spec = f.spec
    if J_top > spec.J - 2:
        raise LevelTooFine("J_top needs J >= J_top + 2")
    increments = []
    for j in range(J_top + 1):
        term = lj_lambda_j(f, j, bank)
        increments.append(integrate_over_cube(term.values, I, spec))
    return CubeFunctionalTrace(value=float(np.sum(increments)), increments=increments)
