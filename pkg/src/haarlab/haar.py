"""The Haar system on grid fields: evaluation, dual coefficients, dyadic
averaging, masked level operators, enumerations, partial sums, projections.

All coefficient arithmetic is exact block summation over grid cells (no
quadrature error), which is what makes biorthogonality and the martingale
identity hold at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import IndexOutsideBox, LevelTooFine, MaskOutOfRange
from .grid import GridField, GridSpec, broadcast_cells, cell_means


@dataclass(frozen=True)
class HaarIndex:
    """Index (eps, k, nu): eps = 0 only for the scaling functions at k = 0."""

    eps: tuple
    k: int
    nu: tuple

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("level must be >= 0")
        if not all(e in (0, 1) for e in self.eps):
            raise ValueError("eps entries must be 0/1")
        if self.k >= 1 and not any(self.eps):
            raise ValueError("eps = 0 is only allowed at level 0 (scaling)")
        if len(self.eps) != len(self.nu):
            raise ValueError("eps and nu must have equal length")

    @property
    def d(self) -> int:
        return len(self.nu)

    @property
    def is_scaling(self) -> bool:
        return not any(self.eps)

    @property
    def support_level(self) -> int:
        return self.k


def scaling_index(nu) -> HaarIndex:
    nu = tuple(int(v) for v in nu)
    return HaarIndex(eps=(0,) * len(nu), k=0, nu=nu)


def wavelet_index(eps, k, nu) -> HaarIndex:
    return HaarIndex(eps=tuple(int(e) for e in eps), k=int(k), nu=tuple(int(v) for v in nu))


def _h1(t):
    """1-D Haar mother on [0,1): +1 on [0,1/2), -1 on [1/2,1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[(t >= 0.0) & (t < 0.5)] = 1.0
    out[(t >= 0.5) & (t < 1.0)] = -1.0
    return out


def _h0(t):
    t = np.asarray(t, dtype=float)
    return ((t >= 0.0) & (t < 1.0)).astype(float)


def haar_eval(idx: HaarIndex, x) -> float:
    """Pointwise value of h^eps_{k,nu}; values lie in {-1, 0, 1}."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    val = 1.0
    for e, nui, xi in zip(idx.eps, idx.nu, x):
        t = 2.0**idx.k * xi - nui
        val *= float(_h1(t)) if e else float(_h0(t))
        if val == 0.0:
            return 0.0
    return val


def _nu_range(spec: GridSpec, level: int) -> tuple:
    """Valid nu per axis at a level: [-B 2^level, B 2^level)."""
    lim = spec.B * 2**level
    return (-lim, lim)


def _cell_pos(nu, spec: GridSpec, level: int):
    """Array position of cell nu at a level; raises if outside the box."""
    lo, hi = _nu_range(spec, level)
    pos = []
    for v in nu:
        if not lo <= v < hi:
            raise IndexOutsideBox(f"nu={nu} outside box at level {level}")
        pos.append(v - lo)
    return tuple(pos)


def haar_field(idx: HaarIndex, spec: GridSpec) -> GridField:
    """Exact sampling of h^eps_{k,nu} (constant on level-(k+1) cells)."""
    if idx.k + 1 > spec.J:
        raise LevelTooFine(f"haar level {idx.k} needs J >= {idx.k + 1}")
    fine = idx.k + 1
    c = spec.cells_per_axis(fine)
    cells = np.zeros((c,) * spec.d)
    base = _cell_pos(tuple(2 * v for v in idx.nu), spec, fine)
    for offs in product((0, 1), repeat=spec.d):
        sgn = 1.0
        for e, o in zip(idx.eps, offs):
            if e and o:
                sgn = -sgn
        cells[tuple(b + o for b, o in zip(base, offs))] = sgn
    vals = broadcast_cells(cells, spec, fine)
    x_lo = min(v * 2.0**-idx.k for v in idx.nu)
    x_hi = max((v + 1) * 2.0**-idx.k for v in idx.nu)
    margin = max(spec.B - max(abs(x_lo), abs(x_hi)), 0.0)
    return GridField(spec, vals, margin=margin)


def haar_coeff(f: GridField, idx: HaarIndex) -> float:
    """Dual coefficient u*(f) = 2^{kd} <f, h^eps_{k,nu}> by exact cell sums."""
    spec = f.spec
    if idx.k >= spec.J:
        raise LevelTooFine(f"haar_coeff level {idx.k} needs k <= J-1")
    fine = idx.k + 1
    m = cell_means(f.values, spec, fine)
    base = _cell_pos(tuple(2 * v for v in idx.nu), spec, fine)
    acc = 0.0
    for offs in product((0, 1), repeat=spec.d):
        sgn = 1.0
        for e, o in zip(idx.eps, offs):
            if e and o:
                sgn = -sgn
        acc += sgn * m[tuple(b + o for b, o in zip(base, offs))]
    # 2^{kd} * integral = 2^{kd} * sum_e sgn * mean_e * 2^{-(k+1)d}
    return acc * 0.5**spec.d


def _cell_margin(margin: float | None, N: int) -> float | None:
    """Support after cell operations grows to level-N cell edges."""
    if margin is None:
        return None
    return max(2.0**-N * np.floor(margin * 2.0**N), 0.0)


def dyadic_average(f: GridField, N: int, complement: bool = False) -> GridField:
    """E_N f (cell averages at level N); complement=True gives f - E_N f."""
    spec = f.spec
    if not 0 <= N <= spec.J:
        raise LevelTooFine(f"dyadic_average level {N} needs 0 <= N <= J")
    avg = broadcast_cells(cell_means(f.values, spec, N), spec, N)
    vals = f.values - avg if complement else avg
    return GridField(spec, vals, margin=_cell_margin(f.margin, N))


@dataclass
class MaskA:
    """Masking coefficients (nu, eps) -> a in [-1, 1]; absent keys give fill.

    arrays, when set, holds dense per-eps cell arrays and bypasses the
    sparse entries (used by randomized sign masks).
    """

    entries: dict = field(default_factory=dict)
    fill: float = 0.0
    arrays: dict | None = None

    @classmethod
    def constant(cls, value: float) -> "MaskA":
        return cls(entries={}, fill=value)

    def validate(self) -> None:
        if self.arrays is not None:
            if any(np.abs(a).max() > 1.0 + 1e-15 for a in self.arrays.values()):
                raise MaskOutOfRange("mask coefficients must satisfy |a| <= 1")
            return
        vals = list(self.entries.values()) + [self.fill]
        if any(abs(v) > 1.0 + 1e-15 for v in vals):
            raise MaskOutOfRange("mask coefficients must satisfy |a| <= 1")

    def dense(self, spec: GridSpec, N: int, eps: tuple) -> np.ndarray:
        """Mask as an array over the level-N cells meeting the box."""
        c = spec.cells_per_axis(N)
        if self.arrays is not None:
            return self.arrays[tuple(eps)]
        arr = np.full((c,) * spec.d, float(self.fill))
        for (nu, e), a in self.entries.items():
            if tuple(e) != tuple(eps):
                continue
            try:
                arr[_cell_pos(nu, spec, N)] = a
            except IndexOutsideBox:
                pass  # entries outside the box do not meet the grid
        return arr


def _eps_signs(eps: tuple, offs: tuple) -> float:
    sgn = 1.0
    for e, o in zip(eps, offs):
        if e and o:
            sgn = -sgn
    return sgn


def _level_coefficients(f: GridField, N: int) -> dict:
    """2^{Nd} <f, h^eps_{N, .}> for every eps in Upsilon, as cell arrays."""
    spec = f.spec
    m1 = cell_means(f.values, spec, N + 1)
    subs = {}
    for offs in product((0, 1), repeat=spec.d):
        sl = tuple(slice(o, None, 2) for o in offs)
        subs[offs] = m1[sl]
    out = {}
    for eps in product((0, 1), repeat=spec.d):
        if not any(eps):
            continue
        acc = None
        for offs, sub in subs.items():
            term = _eps_signs(eps, offs) * sub
            acc = term if acc is None else acc + term
        out[eps] = acc * 0.5**spec.d
    return out


def _assemble_level(coeff_times_mask: dict, spec: GridSpec, N: int, dtype) -> np.ndarray:
    """Sum_eps sum_nu c[eps][nu] h^eps_{N,nu} as a sample array."""
    c1 = spec.cells_per_axis(N + 1)
    cells = np.zeros((c1,) * spec.d, dtype=dtype)
    for eps, cf in coeff_times_mask.items():
        for offs in product((0, 1), repeat=spec.d):
            sl = tuple(slice(o, None, 2) for o in offs)
            cells[sl] += _eps_signs(eps, offs) * cf
    return broadcast_cells(cells, spec, N + 1)


def t_mask(f: GridField, N: int, a: MaskA) -> GridField:
    """Masked level operator: sum over (nu, eps) of a 2^{Nd} <f,h> h."""
    spec = f.spec
    if N + 1 > spec.J:
        raise LevelTooFine(f"t_mask level {N} needs N+1 <= J")
    a.validate()
    coeffs = _level_coefficients(f, N)
    trivial = a.arrays is None and a.fill == 0.0 and not a.entries
    weighted = {}
    for eps, cf in coeffs.items():
        if trivial:
            weighted[eps] = np.zeros_like(cf)
        else:
            weighted[eps] = cf * a.dense(spec, N, eps)
    vals = _assemble_level(weighted, spec, N, f.values.dtype)
    return GridField(spec, vals, margin=_cell_margin(f.margin, N + 1))


def scaling_project(f: GridField, mask: np.ndarray | None = None) -> GridField:
    """Projection onto the level-0 scaling functions (optionally masked)."""
    spec = f.spec
    m0 = cell_means(f.values, spec, 0)
    if mask is not None:
        m0 = m0 * mask
    return GridField(spec, broadcast_cells(m0, spec, 0), margin=_cell_margin(f.margin, 0))


# ---------------------------------------------------------------------------
# Enumerations


@dataclass
class Enumeration:
    """Ordered finite enumeration of Haar indices with a locality certificate."""

    items: list
    b: int | str = "unverified"
    flavor: str = "arbitrary"
    markers: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError("enumeration items must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    b: int | None
    witness: tuple | None  # (n, n_prime, nu0) positions are 1-based


def _supported_in(idx: HaarIndex, lo, hi) -> bool:
    """Support of idx inside the closed box prod [lo_i, hi_i]."""
    s = 2**idx.k
    for nui, lo_i, hi_i in zip(idx.nu, lo, hi):
        if nui < lo_i * s or nui + 1 > hi_i * s:
            return False
    return True


def check_admissible(
    e: Enumeration, strong: bool, b_max: int = 8, cube_range: tuple | None = None
) -> AdmissibilityReport:
    """Smallest b certifying (strong) admissibility over cubes meeting the
    truncation range, or a witness triple if every b <= b_max fails.
    """
    if not e.items:
        return AdmissibilityReport(True, 1, None)
    d = e.items[0].d
    if cube_range is None:
        lo_f = min(min(v * 2.0**-it.k for v in it.nu) for it in e.items)
        hi_f = max(max((v + 1) * 2.0**-it.k for v in it.nu) for it in e.items)
        cube_range = (int(np.floor(lo_f)) - 2, int(np.ceil(hi_f)) + 2)
    lo_c, hi_c = cube_range
    worst_gap = 0
    witness = None
    for nu0 in product(range(lo_c, hi_c), repeat=d):
        if strong:
            lo = [v - 2 for v in nu0]
            hi = [v + 3 for v in nu0]
        else:
            lo = list(nu0)
            hi = [v + 1 for v in nu0]
        by_level: dict = {}
        for pos, it in enumerate(e.items):
            if _supported_in(it, lo, hi):
                by_level.setdefault(it.k, []).append(pos)
        levels = sorted(by_level)
        for i, k in enumerate(levels):
            max_pos_k = max(by_level[k])
            for kp in levels[i + 1 :]:
                gap = kp - k
                min_pos_kp = min(by_level[kp])
                if max_pos_k > min_pos_kp and gap > worst_gap:
                    worst_gap = gap
                    witness = (max_pos_k + 1, min_pos_kp + 1, nu0)
    b = worst_gap + 1
    if b > b_max:
        return AdmissibilityReport(False, None, witness)
    return AdmissibilityReport(True, b, None)


def build_canonical_enumeration(
    k_max: int, box: tuple, d: int = 1
) -> Enumeration:
    """Scaling functions first, then wavelet levels 0..k_max, each level in
    lexicographic (nu, eps) order; markers R(m) satisfy S_{R(m)} = E_m for
    fields supported in the box.

    box is ((lo, hi),) * d in integer coordinates.
    """
    if isinstance(box[0], int):
        box = (box,) * d
    items = []
    for nu in product(*[range(lo, hi) for lo, hi in box]):
        items.append(scaling_index(nu))
    markers = {0: len(items)}
    eps_list = [e for e in product((0, 1), repeat=d) if any(e)]
    for k in range(0, k_max + 1):
        s = 2**k
        ranges = [range(lo * s, hi * s) for lo, hi in box]
        for nu in product(*ranges):
            for eps in eps_list:
                items.append(HaarIndex(eps=eps, k=k, nu=nu))
        markers[k + 1] = len(items)
    return Enumeration(items=items, b=1, flavor="strongly-admissible", markers=markers)


def _grouped_prefix(e: Enumeration, R: int):
    """Split the first R items into a scaling nu-set and per-level eps masks."""
    scaling = []
    by_level: dict = {}
    for it in e.items[:R]:
        if it.is_scaling:
            scaling.append(it.nu)
        else:
            by_level.setdefault(it.k, {}).setdefault(it.eps, []).append(it.nu)
    return scaling, by_level


def partial_sum(f: GridField, e: Enumeration, R: int) -> GridField:
    """S_R f = sum_{n <= R} u_n*(f) u_n."""
    spec = f.spec
    if not 1 <= R <= len(e.items):
        raise ValueError("R out of range")
    top = max((it.k for it in e.items[:R]), default=0)
    if top > spec.J - 1:
        raise LevelTooFine("enumeration prefix has levels beyond J-1")
    scaling, by_level = _grouped_prefix(e, R)
    out = np.zeros(spec.shape, dtype=f.values.dtype)
    if scaling:
        mask0 = np.zeros((spec.cells_per_axis(0),) * spec.d)
        for nu in scaling:
            mask0[_cell_pos(nu, spec, 0)] = 1.0
        out = out + scaling_project(f, mask0).values
    for k, eps_map in sorted(by_level.items()):
        mask = MaskA()
        for eps, nus in eps_map.items():
            for nu in nus:
                mask.entries[(nu, eps)] = 1.0
        out = out + t_mask(f, k, mask).values
    return GridField(spec, out, margin=_cell_margin(f.margin, 0))


def projection_PE(f: GridField, E) -> GridField:
    """P_E f = sum_{h in E} <f, h*> h for a finite index set E."""
    e = Enumeration(items=list(E), b="unverified", flavor="arbitrary")
    return partial_sum(f, e, len(e.items))


def haar_frequencies(E) -> list:
    """HF(E): the distinct Haar frequencies 2^k present in E."""
    return sorted({2**it.k for it in E})


# ---------------------------------------------------------------------------
# Enumeration serialization: "k nu_1 ... nu_d eps_bits" lines


def save_enumeration(e: Enumeration, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# b {e.b}\n")
        fh.write(f"# flavor {e.flavor}\n")
        markers = " ".join(f"{m}:{r}" for m, r in sorted(e.markers.items()))
        fh.write(f"# markers {markers}\n")
        for it in e.items:
            bits = sum(ei << i for i, ei in enumerate(it.eps))
            nus = " ".join(str(v) for v in it.nu)
            fh.write(f"{it.k} {nus} {bits}\n")


def load_enumeration(path: str) -> Enumeration:
    items = []
    b: int | str = "unverified"
    flavor = "arbitrary"
    markers: dict = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                _, key, *rest = line.split()
                if key == "b":
                    b = rest[0] if rest[0] == "unverified" else int(rest[0])
                elif key == "flavor":
                    flavor = rest[0]
                elif key == "markers":
                    for tok in rest:
                        m, r = tok.split(":")
                        markers[int(m)] = int(r)
                continue
            parts = line.split()
            k = int(parts[0])
            nu = tuple(int(v) for v in parts[1:-1])
            bits = int(parts[-1])
            eps = tuple((bits >> i) & 1 for i in range(len(nu)))
            items.append(HaarIndex(eps=eps, k=k, nu=nu))
    return Enumeration(items=items, b=b, flavor=flavor, markers=markers)
