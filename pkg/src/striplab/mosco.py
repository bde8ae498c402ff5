"""Galerkin discretisation of the boundary forms and resolvent convergence scans.

Each boundary line carries ``m`` hat functions of spacing ``delta`` on
``[-R, R]``. The correlation of two hats ``d`` nodes apart is
``rho_d(u) = delta N(d - u/delta)`` with ``N`` the centred cubic B-spline,
so every matrix entry is a one-dimensional integral of a kernel against a
piecewise cubic. Blocks are Toeplitz; only ``O(m)`` integrals are computed.

A scan fixes a test vector ``f`` and compares the resolvents
``(alpha M + A_ell)^{-1} M f`` along a schedule of ``ell`` with the resolvent
of the limit form, in the ``M``-norm.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import linalg

from .boundary import BoundaryData, Constant, GridFunction, parse_function
from .forms import JumpKernel, cauchy_kernel, cross_kernel, same_kernel
from .quadrature import composite_nodes

__all__ = [
    "FormKind",
    "GalerkinBasis",
    "MassMatrix",
    "FormMatrix",
    "MoscoScanReport",
    "bspline3",
    "assemble_mass",
    "assemble_form",
    "resolvent_apply",
    "semigroup_apply",
    "mosco_scan",
    "target_form",
    "SolverError",
]

PI = math.pi


class SolverError(RuntimeError):
    pass


class FormKind(str, enum.Enum):
    A0 = "A0"
    A1 = "A1"
    A2 = "A2"
    A = "A"
    AINF = "Ainf"
    SCALED = "scaled"  # ell * A


@dataclass(frozen=True)
class GalerkinBasis:
    R: float = 8.0
    m: int = 129

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("need at least three nodes per line")
        if not self.R > 0:
            raise ValueError("window must be positive")

    @property
    def delta(self) -> float:
        return 2.0 * self.R / (self.m - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.m)

    @property
    def dim(self) -> int:
        return 2 * self.m

    def interpolate(self, f: BoundaryData) -> np.ndarray:
        """Nodal coefficients ``(f-(x_i), f+(x_i))``."""
        x = self.nodes
        return np.concatenate([np.asarray(f.lower(x), float), np.asarray(f.upper(x), float)])

    def function(self, coef) -> BoundaryData:
        coef = np.asarray(coef, dtype=float)
        lo, up = coef[: self.m], coef[self.m:]
        return BoundaryData(GridFunction(lo, self.R), GridFunction(up, self.R))

    def params(self) -> dict:
        return {"R": self.R, "m": self.m, "delta": self.delta}


def bspline3(s):
    """Centred cubic B-spline, the self-correlation of the unit hat."""
    a = np.abs(np.asarray(s, dtype=float))
    inner = 2.0 / 3.0 - a * a + 0.5 * a ** 3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a <= 1.0, inner, np.where(a < 2.0, outer, 0.0))


def _toeplitz_block(first_row) -> np.ndarray:
    return linalg.toeplitz(first_row)


@dataclass
class MassMatrix:
    matrix: np.ndarray
    basis: GalerkinBasis

    @property
    def block(self) -> np.ndarray:
        return self.matrix[: self.basis.m, : self.basis.m]

    def norm(self, c) -> float:
        c = np.asarray(c, dtype=float)
        return math.sqrt(max(float(c @ self.matrix @ c), 0.0))


@dataclass
class FormMatrix:
    matrix: np.ndarray
    kind: FormKind
    ell: Optional[float]
    basis: GalerkinBasis
    error_bound: float = 0.0
    asymmetry: float = 0.0

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def lower_lower(self):
        return self.matrix[: self.m, : self.m]

    @property
    def upper_upper(self):
        return self.matrix[self.m:, self.m:]

    @property
    def lower_upper(self):
        return self.matrix[: self.m, self.m:]

    def value(self, c) -> float:
        c = np.asarray(c, dtype=float)
        return float(c @ self.matrix @ c)

    def __add__(self, other: "FormMatrix") -> "FormMatrix":
        return FormMatrix(self.matrix + other.matrix, FormKind.A, self.ell, self.basis,
                          self.error_bound + other.error_bound)

    def scaled(self, c: float, kind: FormKind | None = None) -> "FormMatrix":
        return FormMatrix(c * self.matrix, kind or self.kind, self.ell, self.basis,
                          abs(c) * self.error_bound)


def assemble_mass(basis: GalerkinBasis) -> MassMatrix:
    """Gram matrix of the hats: tridiagonal blocks ``(delta/6)(1, 4, 1)``."""
    row = np.zeros(basis.m)
    row[0] = 2.0 / 3.0 * basis.delta
    row[1] = basis.delta / 6.0
    block = _toeplitz_block(row)
    z = np.zeros_like(block)
    return MassMatrix(np.block([[block, z], [z, block]]), basis)


# --------------------------------------------------------------------------
# Toeplitz entries


def _bracket(d: int, s):
    """``2 N(d) - N(d - s) - N(d + s)`` for ``s >= 0``, cancellation-free near ``s = 0``."""
    s = np.asarray(s, dtype=float)
    general = 2.0 * bspline3(d) - bspline3(d - s) - bspline3(d + s)
    if d == 0:
        near = 2.0 * s * s - s ** 3
    elif abs(d) == 1:
        near = -s * s + (2.0 / 3.0) * s ** 3
    else:
        return general
    return np.where(s < 1.0, near, general)


def _unit_panels(lo: float, hi: float, sub: int) -> np.ndarray:
    """Edges at integers between ``lo`` and ``hi`` (in units of delta), each split ``sub`` times."""
    knots = np.arange(math.floor(lo), math.ceil(hi) + 1, dtype=float)
    knots = knots[(knots >= lo) & (knots <= hi)]
    knots = np.unique(np.concatenate([[lo, hi], knots]))
    if sub > 1:
        fine = [knots[:1]]
        for a, b in zip(knots[:-1], knots[1:]):
            fine.append(np.linspace(a, b, sub + 1)[1:])
        knots = np.concatenate(fine)
    return knots


def _gl(fun, edges, order):
    x, w, _ = composite_nodes(edges, order)
    xc, wc, _ = composite_nodes(edges, order // 2)
    fine = float(np.dot(w, fun(x)))
    return fine, abs(fine - float(np.dot(wc, fun(xc))))


def _subdivisions(kernel: JumpKernel, delta: float) -> int:
    if not math.isfinite(kernel.scale):
        return 1
    return max(1, int(math.ceil(2.0 * delta / kernel.scale)))


def same_side_entries(kernel: JumpKernel, basis: GalerkinBasis, order: int = 20):
    """First row ``S_d`` of the Toeplitz block of a same-line form.

    ``S_d = int k(u) [2 rho_d(0) - rho_d(u) - rho_d(-u)] du``.
    """
    delta, m = basis.delta, basis.m
    sub = _subdivisions(kernel, delta)
    row = np.zeros(m)
    err = 0.0
    for d in range(m):
        if d <= 1:
            # even integrand; bracket constant 2 N(d) beyond s = 3
            edges = _unit_panels(0.0, 3.0, sub)
            v, e = _gl(lambda s: kernel(s * delta) * _bracket(d, s), edges, order)
            tail = 2.0 * bspline3(d) * kernel.tail(3.0 * delta) / delta
            row[d] = 2.0 * delta * delta * (v + tail)
        else:
            edges = _unit_panels(d - 2.0, d + 2.0, sub)
            v, e = _gl(lambda s: kernel(s * delta) * bspline3(d - s), edges, order)
            row[d] = -2.0 * delta * delta * v
        err += 2.0 * delta * delta * e
    return row, err


def cross_side_entries(kernel: JumpKernel, basis: GalerkinBasis, order: int = 20):
    """First row ``C_d = int k(u) rho_d(u) du`` for an integrable kernel."""
    delta, m = basis.delta, basis.m
    sub = _subdivisions(kernel, delta)
    row = np.zeros(m)
    err = 0.0
    for d in range(m):
        edges = _unit_panels(d - 2.0, d + 2.0, sub)
        v, e = _gl(lambda s: kernel(s * delta) * bspline3(d - s), edges, order)
        row[d] = delta * delta * v
        err += delta * delta * e
    return row, err


def _same_block_form(kernel, basis, kind, ell, order):
    row, err = same_side_entries(kernel, basis, order)
    block = _toeplitz_block(row)
    z = np.zeros_like(block)
    return FormMatrix(np.block([[block, z], [z, block]]), kind, ell, basis, 2.0 * basis.m * err)


def _cross_block_form(kernel, basis, mass: MassMatrix, kind, ell, order):
    row, err = cross_side_entries(kernel, basis, order)
    C = _toeplitz_block(row)
    KM = kernel.total * mass.block
    return FormMatrix(np.block([[KM, -C], [-C, KM]]), kind, ell, basis, 2.0 * basis.m * err)


def assemble_form(kind, ell: Optional[float], basis: GalerkinBasis, order: int = 20) -> FormMatrix:
    """Stiffness matrix of a boundary form on the hat basis.

    ``A1``/``A2`` are the unweighted image forms of the strip of height
    ``pi ell``; ``A = A1/(2pi) + A2/(8pi)``; ``scaled`` is ``ell * A``;
    ``Ainf = (1/8pi) * 2 * sum of Gagliardo forms``; ``A0 = (1/2pi) int (f+ - f-)^2``.
    """
    kind = FormKind(kind)
    mass = assemble_mass(basis)
    if kind is FormKind.A0:
        M = mass.block
        out = FormMatrix(np.block([[M, -M], [-M, M]]) / (2.0 * PI), kind, None, basis, 0.0)
    elif kind is FormKind.AINF:
        out = _same_block_form(cauchy_kernel(2.0 / (8.0 * PI)), basis, kind, None, order)
    else:
        if ell is None:
            raise ValueError(f"form {kind.value} needs ell")
        if kind is FormKind.A1:
            out = _cross_block_form(cross_kernel(ell), basis, mass, kind, ell, order)
        elif kind is FormKind.A2:
            out = _same_block_form(same_kernel(ell), basis, kind, ell, order)
        else:
            a1 = _cross_block_form(cross_kernel(ell, 1.0 / (2.0 * PI)), basis, mass, kind, ell, order)
            a2 = _same_block_form(same_kernel(ell, 1.0 / (8.0 * PI)), basis, kind, ell, order)
            out = a1 + a2
            out.kind = kind
            if kind is FormKind.SCALED:
                out = out.scaled(ell, FormKind.SCALED)
    mat = out.matrix
    scale = max(float(np.max(np.abs(mat))), 1e-300)
    out.asymmetry = float(np.max(np.abs(mat - mat.T))) / scale
    out.matrix = 0.5 * (mat + mat.T)
    return out


# --------------------------------------------------------------------------
# resolvents


@dataclass
class ResolventResult:
    coef: np.ndarray
    residual: float


def resolvent_apply(A: FormMatrix, M: MassMatrix, alpha: float, f) -> ResolventResult:
    """Solve ``(alpha M + A) c = M f`` by Cholesky."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    f = np.asarray(f, dtype=float)
    lhs = alpha * M.matrix + A.matrix
    rhs = M.matrix @ f
    try:
        factor = linalg.cho_factor(lhs, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SolverError(f"resolvent matrix is not positive definite: {exc}") from None
    c = linalg.cho_solve(factor, rhs)
    res = float(np.linalg.norm(lhs @ c - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return ResolventResult(c, res)


def semigroup_apply(A: FormMatrix, M: MassMatrix, t: float, k: int, f) -> np.ndarray:
    """Backward Euler: ``k`` solves of ``(M + (t/k) A) c_{n+1} = M c_n``."""
    if not t > 0 or k < 1:
        raise ValueError("need t > 0 and k >= 1")
    tau = t / k
    factor = linalg.cho_factor(M.matrix + tau * A.matrix, lower=True)
    c = np.asarray(f, dtype=float).copy()
    for _ in range(k):
        c = linalg.cho_solve(factor, M.matrix @ c)
    return c


# --------------------------------------------------------------------------
# scans


def target_form(target, basis: GalerkinBasis, order: int = 20) -> FormMatrix:
    """Limit form of a scan: ``0`` gives ``A0``, ``inf`` gives ``Ainf``, else ``A`` at that ``ell``."""
    t = float(target)
    if t == 0.0:
        return assemble_form(FormKind.A0, None, basis, order)
    if math.isinf(t):
        return assemble_form(FormKind.AINF, None, basis, order)
    return assemble_form(FormKind.A, t, basis, order)


def _scan_form(target: float, ell: float, basis: GalerkinBasis, order: int) -> FormMatrix:
    kind = FormKind.SCALED if target == 0.0 else FormKind.A
    return assemble_form(kind, ell, basis, order)


@dataclass
class MoscoScanReport:
    target: float
    schedule: List[float]
    alpha: float
    label: str
    basis: dict
    gaps: List[float]
    relative_gaps: List[float]
    form_values: List[float]
    target_form_value: float
    residuals: List[float] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        g = self.relative_gaps
        return all(b < a for a, b in zip(g[:-1], g[1:]))

    @property
    def final_relative_gap(self) -> float:
        return self.relative_gaps[-1]

    def rows(self) -> List[dict]:
        return [{"ell": e, "gap": g, "relative_gap": r, "form_value": v}
                for e, g, r, v in zip(self.schedule, self.gaps, self.relative_gaps, self.form_values)]

    def to_dict(self) -> dict:
        tgt = self.target if math.isfinite(self.target) else "inf"
        return {"target": tgt, "schedule": self.schedule, "alpha": self.alpha, "label": self.label,
                "basis": self.basis, "gaps": self.gaps, "relative_gaps": self.relative_gaps,
                "form_values": self.form_values, "target_form_value": self.target_form_value,
                "residuals": self.residuals, "monotone": self.monotone,
                "final_relative_gap": self.final_relative_gap}


def mosco_scan(target, schedule: Sequence[float], alpha: float = 1.0,
               f: BoundaryData | str = "gauss(1)", basis: GalerkinBasis | None = None,
               order: int = 20, workers: int = 1) -> MoscoScanReport:
    """Resolvent gaps ``|G^ell f - G^target f|_M / |G^target f|_M`` along ``schedule``.

    ``target = 0`` compares ``ell * A^ell`` with ``A0``; a finite positive
    target compares ``A^ell`` with ``A^target``; ``inf`` compares with ``Ainf``.
    A string ``f`` names registry data for the lower line with zero above.
    """
    basis = basis or GalerkinBasis()
    if isinstance(f, str):
        label = f
        f = BoundaryData(parse_function(f), Constant(0.0))
    else:
        label = str(f.describe())
    target = float(target)
    M = assemble_mass(basis)
    coef = basis.interpolate(f)
    ref_form = target_form(target, basis, order)
    ref = resolvent_apply(ref_form, M, alpha, coef)
    ref_norm = M.norm(ref.coef)

    def one(ell):
        A = _scan_form(target, float(ell), basis, order)
        r = resolvent_apply(A, M, alpha, coef)
        return M.norm(r.coef - ref.coef), A.value(coef), r.residual

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, schedule))
    else:
        results = [one(e) for e in schedule]
    gaps = [r[0] for r in results]
    return MoscoScanReport(
        target=target, schedule=[float(e) for e in schedule], alpha=float(alpha), label=label,
        basis=basis.params(), gaps=gaps, relative_gaps=[g / ref_norm for g in gaps],
        form_values=[r[1] for r in results], target_form_value=ref_form.value(coef),
        residuals=[r[2] for r in results])
