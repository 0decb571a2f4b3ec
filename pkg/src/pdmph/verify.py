"""Quantitative verification suite.

Every check measures a residual of one operator identity on the interior
window, at several grid resolutions, and reports

  * the residual per level together with a conservative roundoff ceiling,
  * the observed convergence order (least-squares slope of log residual vs
    log h, excluding floor-dominated levels),
  * a deterministic verdict: pass, fail, or reported-only.

Residuals in a refinement study are always measured over one fixed
coordinate window derived from the coarsest level (index pad plus
8 h_coarse from each edge); index-based windows would creep toward the
domain edges under refinement and corrupt the observed orders.

A residual may legitimately sit below its rounding floor at every level
(for very smooth systems the truncation error underruns machine noise);
order fits are then unobservable and the check passes on the threshold
alone, with the floor recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, EigensolverError, InvalidDomainError
from .grid import (EPS, STENCIL_ABS_D1, STENCIL_ABS_D2, FLOOR_SAFETY, Grid,
                   diff_matrix, fd_floor, make_grid, observed_order)
from .operators import (CoefficientSet, OperatorMatrix, build_d, build_d_tilde,
                        build_eta_parity, build_eta_tilde,
                        build_eta_tilde_block, build_h_prime,
                        build_h_prime_block, build_h_prime_dagger, build_parity,
                        default_probes, tau_similarity_residual)
from .pipeline import (CATALOG, DressedSystem, GeneratingSpec,
                       assemble_potential, make_family)
from .profiles import MassProfile

PAD = 8                 # index pad for identity-check windows
ORDER_MIN = 3.5
EIG_BUDGET = 4001

DEFAULT_TOLERANCES = {
    "residual": 1e-6,          # finest-level residual for pass verdicts
    "order_min": ORDER_MIN,
    "neg_control": 1e-2,       # corrupted inputs must exceed this
    "symbol_dev_rel": 1e-6,    # probe-to-probe symbol agreement
    "c_stability": 1e-3,       # defect/zeroth-order constant across finest grids
    "exact_regime_defect": 1e-8,
    "gram_rel": 1e-6,
    "eig_backward": 1e-10,
    "eig_rel": 1e-6,
}


@dataclass
class CheckLevel:
    n: int
    h: float
    residual: float
    floor: float


@dataclass
class CheckResult:
    """Outcome of one named check across grid resolutions."""

    name: str
    law: str
    levels: list
    observed_order: float = None
    threshold: float = None
    verdict: str = "reported-only"
    notes: dict = field(default_factory=dict)

    @property
    def residuals(self):
        return [lv.residual for lv in self.levels]

    def to_dict(self):
        return {
            "name": self.name,
            "law": self.law,
            "levels": [{"n": lv.n, "h": lv.h, "residual": lv.residual,
                        "floor": lv.floor} for lv in self.levels],
            "observed_order": self.observed_order,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def _finish(result: CheckResult, tol, threshold=None, min_order=None):
    """Deterministic verdict from the recorded numbers."""
    threshold = tol["residual"] if threshold is None else threshold
    min_order = tol["order_min"] if min_order is None else min_order
    hs = [lv.h for lv in result.levels]
    rs = [lv.residual for lv in result.levels]
    fls = [lv.floor for lv in result.levels]
    order = observed_order(hs, rs, fls)
    result.observed_order = order
    result.threshold = threshold
    floor_dominated = all(r <= 10.0 * f for r, f in zip(rs, fls))
    if rs[-1] <= threshold and (order is None or order >= min_order):
        result.verdict = "pass"
        if order is None:
            result.notes["order"] = ("unobservable: residuals at or below the "
                                     "rounding floor" if floor_dominated else
                                     "unobservable: fewer than two floor-free levels")
    else:
        result.verdict = "fail"
    return result


@dataclass
class OperatorInputs:
    """Plain arrays the operator-level checks consume.

    Built from a dressed system, from the free preset (everything zero), or
    from a detuned companion function that deliberately breaks the
    first-order balance while the potential is still assembled from the
    same integrated relation.
    """

    grid: Grid
    bundle: object
    f: np.ndarray
    fp: np.ndarray
    g: np.ndarray
    gp: np.ndarray
    a: np.ndarray
    ap: np.ndarray
    V: np.ndarray

    @classmethod
    def from_dressed(cls, ds: DressedSystem):
        return cls(ds.grid, ds.bundle, ds.f, ds.fp, ds.g, ds.gp, ds.a, ds.ap, ds.V)

    @classmethod
    def free(cls, profile: MassProfile, grid: Grid):
        b = profile.sample(grid)
        z = np.zeros(grid.n)
        return cls(grid, b, z, z, z, z, z, z, np.zeros(grid.n, complex))

    @classmethod
    def detuned(cls, ds: DressedSystem, f0):
        """Replace f by a function that does not solve the first-order balance.

        f0 is a constant or a callable of the coordinate array; the potential
        is re-assembled from the detuned f so that all balances except the
        zeroth-order one still hold, which isolates a genuine
        multiplication-operator defect.
        """
        if callable(f0):
            f = np.asarray(f0(ds.grid.x), dtype=float)
            fp = diff_matrix(ds.grid, 1) @ f
        else:
            f = np.full(ds.grid.n, float(f0))
            fp = np.zeros(ds.grid.n)
        V = assemble_potential(f, fp, ds.g, ds.gp, ds.bundle, ds.spec.delta)
        return cls(ds.grid, ds.bundle, f, fp, ds.g, ds.gp, ds.a, ds.ap, V)

    def coefficients(self):
        return CoefficientSet.build(self.f, self.fp, self.g, self.gp,
                                    self.a, self.ap, self.bundle)

    @property
    def phi(self):
        return self.f + 1j * self.g


@dataclass
class SystemBuilder:
    """Rebuilds one configured system at any resolution (for refinement studies)."""

    kind: str                      # "family", "free"
    profile: MassProfile
    xmin: float
    xmax: float
    spec: GeneratingSpec = None
    corruption: tuple = None       # (target, amount) or None

    def grid(self, n):
        return make_grid(self.xmin, self.xmax, n)

    def dressed(self, n) -> DressedSystem:
        if self.kind != "family":
            raise InvalidDomainError("the free preset has no dressed system")
        ds = make_family(self.spec, self.profile, self.grid(n))
        if self.corruption is not None:
            apply_corruption(ds, *self.corruption)
        return ds

    def inputs(self, n) -> OperatorInputs:
        if self.kind == "free":
            return OperatorInputs.free(self.profile, self.grid(n))
        return OperatorInputs.from_dressed(self.dressed(n))


def apply_corruption(ds: DressedSystem, target, amount=0.1):
    """Deliberately damage a dressed system (negative-control fixtures)."""
    if target == "v-imag-flip":
        ds.V = ds.V.real - 1j * ds.V.imag
    elif target == "v-add-linear":
        ds.V = ds.V + amount * ds.grid.x
    elif target == "f-perturb":
        ds.f = ds.f * (1.0 + amount)
    else:
        raise InvalidDomainError(f"unknown corruption target {target!r}")
    return ds


def _window(grid: Grid, xmargin):
    return grid.interior_mask(PAD, xmargin)


def _xmargin(builder: SystemBuilder, ns):
    return PAD * (builder.xmax - builder.xmin) / (min(ns) - 1)


# ---------------------------------------------------------------------------
# coefficient-matching checks
# ---------------------------------------------------------------------------

def check_eq25(builder: SystemBuilder, ns, tol=None):
    """Potential-conjugation balance: V - conj(V) + 4i U g' must vanish.

    g' is taken by finite differences, independently of the analytic
    derivative used to assemble V, so the residual converges at the stencil
    order rather than cancelling identically.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    levels = []
    for n in ns:
        ds = builder.dressed(n)
        grid = ds.grid
        gp_fd = diff_matrix(grid, 1) @ ds.g
        res = ds.V - np.conj(ds.V) + 4j * ds.bundle.U * gp_fd
        w = _window(grid, xm)
        scale = max(1.0, np.abs(ds.V[w]).max())
        floor = fd_floor(grid.h, c1max=4.0 * np.abs(ds.bundle.U[w]).max()) / scale
        levels.append(CheckLevel(n, grid.h, np.abs(res[w]).max() / scale, floor))
    return _finish(CheckResult("eq25", "conjugation balance", levels), tol)


def check_eq26(builder: SystemBuilder, ns, tol=None):
    """Potential-gradient balance:
    conj(V)' = 2 f f' - 2 g g' - (U f)'' + 2i (U g')', all derivatives FD."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    levels = []
    for n in ns:
        ds = builder.dressed(n)
        grid = ds.grid
        D1 = diff_matrix(grid, 1)
        U = ds.bundle.U
        lhs = D1 @ np.conj(ds.V)
        rhs = (2.0 * ds.f * (D1 @ ds.f) - 2.0 * ds.g * (D1 @ ds.g)
               - D1 @ (D1 @ (U * ds.f)) + 2j * (D1 @ (U * (D1 @ ds.g))))
        w = _window(grid, xm)
        scale = max(1.0, np.abs(lhs[w]).max())
        floor = fd_floor(grid.h, c2max=np.abs(U[w]).max(),
                         c1max=1.0 + np.abs(ds.V[w]).max()) / scale
        levels.append(CheckLevel(n, grid.h, np.abs((lhs - rhs)[w]).max() / scale, floor))
    return _finish(CheckResult("eq26", "gradient balance", levels), tol)


def residual_eq28(inputs: OperatorInputs, xmargin=0.0):
    """Zeroth-order balance, evaluated term by term exactly as printed.

    Returns the sampled 12-term expression (finite differences throughout)
    together with the single-term-corrected variant in which the first
    term carries g instead of g'.  Reported, never pass/fail: the measured
    intertwining defect is the arbiter of which expression is structural.
    """
    grid = inputs.grid
    D1 = diff_matrix(grid, 1)
    U = inputs.bundle.U
    f, g = inputs.f, inputs.g
    Up, Upp, Uppp = D1 @ U, D1 @ (D1 @ U), D1 @ (D1 @ (D1 @ U))
    fp, fpp = D1 @ f, D1 @ (D1 @ f)
    gp, gpp, gppp = D1 @ g, D1 @ (D1 @ g), D1 @ (D1 @ (D1 @ g))
    common = (-4.0 * U * f**2 * gp + 4.0 * U**2 * fp * gp + 4.0 * U * Up * fp * g
              + 4.0 * U * Up * f * gp + 2.0 * U**2 * fpp * g + 3.0 * U**2 * Up * gpp
              + 2.0 * U * Upp * f * g - U**2 * Upp * gp - 2.0 * U * Up * Upp * g
              + U**3 * gppp - U**2 * Uppp * g)
    printed = common - 4.0 * U * f * fp * gp
    corrected = common - 4.0 * U * f * fp * g
    w = _window(grid, xmargin)
    return {"printed": printed, "corrected": corrected, "window": w,
            "max_printed": float(np.abs(printed[w]).max()),
            "max_corrected": float(np.abs(corrected[w]).max())}


# ---------------------------------------------------------------------------
# ground state, gauge, antilinear similarity
# ---------------------------------------------------------------------------

def check_groundstate(builder: SystemBuilder, ns, tol=None, state=None):
    """Annihilation and eigen-residuals of the constructed ground state.

    Returns two results: max |D~ xi| / max |xi| and max |(H' - delta) xi|
    / max |xi| over the common window.  `state` optionally replaces xi by an
    externally supplied wavefunction sampler (used to measure the catalog's
    printed states, reported-only).
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    lv_ann, lv_eig = [], []
    for n in ns:
        ds = builder.dressed(n)
        grid, b = ds.grid, ds.bundle
        xi = ds.xi if state is None else state(ds)
        dt = build_d_tilde(ds.phi, ds.a, b, grid)
        coeffs = ds_coefficients(ds)
        hp = build_h_prime(ds.V, ds.a, ds.ap, b, grid, coeffs)
        w = _window(grid, xm)
        nrm = np.abs(xi[w]).max()
        amax = nrm and np.abs(xi).max() / nrm
        r_ann = np.abs((dt.mat @ xi)[w]).max() / nrm
        r_eig = np.abs((hp.mat @ xi - ds.energy * xi)[w]).max() / nrm
        fl_ann = fd_floor(grid.h, c1max=np.abs(b.U[w]).max(),
                          c0max=np.abs(ds.phi[w]).max(), amp=amax)
        fl_eig = fd_floor(grid.h, c2max=np.abs(b.U[w]**2).max(),
                          c1max=2.0 * np.abs(coeffs.M1[w]).max(),
                          c0max=np.abs(ds.V[w]).max(), amp=amax)
        lv_ann.append(CheckLevel(n, grid.h, r_ann, fl_ann))
        lv_eig.append(CheckLevel(n, grid.h, r_eig, fl_eig))
    suffix = "" if state is None else "-supplied-state"
    r1 = _finish(CheckResult("groundstate" + suffix, "first-order annihilation", lv_ann), tol)
    r2 = _finish(CheckResult("groundstate-eigen" + suffix, "eigen-residual", lv_eig), tol)
    if state is not None:
        r1.verdict = r2.verdict = "reported-only"
    return r1, r2


def ds_coefficients(ds: DressedSystem):
    return CoefficientSet.build(ds.f, ds.fp, ds.g, ds.gp, ds.a, ds.ap, ds.bundle)


def check_gauge_equivalence(builder: SystemBuilder, ns, tol=None):
    """Gauge identity: D~(Lambda psi) = Lambda (D psi), measured on the window."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    levels = []
    unit_mod = 0.0
    for n in ns:
        ds = builder.dressed(n)
        grid, b = ds.grid, ds.bundle
        d = build_d(ds.phi, b, grid)
        dt = build_d_tilde(ds.phi, ds.a, b, grid)
        lhs = dt.mat @ (ds.Lambda * ds.psi)
        rhs = ds.Lambda * (d.mat @ ds.psi)
        w = _window(grid, xm)
        nrm = np.abs((ds.Lambda * ds.psi)[w]).max()
        amax = np.abs(ds.psi).max() / nrm
        floor = fd_floor(grid.h, c1max=2.0 * np.abs(b.U[w]).max(),
                         c0max=np.abs(ds.phi[w]).max() + np.abs(ds.a[w]).max(),
                         amp=amax)
        levels.append(CheckLevel(n, grid.h, np.abs((lhs - rhs)[w]).max() / nrm, floor))
        unit_mod = max(unit_mod, float(np.abs(np.abs(ds.Lambda) - 1.0).max()))
    res = _finish(CheckResult("gauge", "gauge equivalence", levels), tol)
    res.notes["max_unit_modulus_defect"] = unit_mod
    return res


def check_tau(builder: SystemBuilder, ns, tol=None, probes=8):
    """Antilinear similarity between H' and its adjoint through the tau phase."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    levels = []
    for n in ns:
        ds = builder.dressed(n)
        grid, b = ds.grid, ds.bundle
        coeffs = ds_coefficients(ds)
        hp = build_h_prime(ds.V, ds.a, ds.ap, b, grid, coeffs)
        hpd = build_h_prime_dagger(ds.V, ds.a, ds.ap, b, grid, coeffs)
        r = tau_similarity_residual(hp, hpd, ds.tau_phase,
                                    default_probes(grid, probes), PAD, xm)
        w = _window(grid, xm)
        floor = FLOOR_SAFETY * EPS * (
            1.0 + np.abs(ds.tau_phase[w]).max()) * (
            1.0 + STENCIL_ABS_D1 * 2.0 * np.abs(coeffs.M1[w]).max()
            / (grid.h * max(1.0, np.abs(ds.V[w]).max())))
        levels.append(CheckLevel(n, grid.h, r, floor))
    return _finish(CheckResult("tau", "antilinear similarity", levels), tol)


# ---------------------------------------------------------------------------
# metric operator checks
# ---------------------------------------------------------------------------

def check_eta(builder: SystemBuilder, ns, tol=None, probes=8):
    """Metric Hermiticity and the dual construction, by probe actions.

    Both residuals are relative to the metric action scale.  Entrywise
    matrix comparisons are meaningless here: the conjugate transpose of a
    discretized operator differs entrywise from the discretization of the
    formal adjoint at O(1/h) while their actions on smooth vectors agree at
    the stencil order.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    lv_h, lv_d = [], []
    for n in ns:
        inp = builder.inputs(n)
        grid, b = inp.grid, inp.bundle
        coeffs = inp.coefficients()
        eta = build_eta_tilde(coeffs, b, grid, mode="direct")
        eta_p = build_eta_tilde(coeffs, b, grid, mode="product", phi=inp.phi, a=inp.a)
        etaH = eta.mat.conj().T
        w = _window(grid, xm)
        r_h = r_d = scale = 0.0
        for v in default_probes(grid, probes):
            ev = eta.mat @ v
            scale = max(scale, np.abs(ev[w]).max())
            r_h = max(r_h, np.abs((ev - etaH @ v)[w]).max())
            r_d = max(r_d, np.abs((ev - eta_p.mat @ v)[w]).max())
        scale = max(scale, 1e-300)
        fl = fd_floor(grid.h, c2max=np.abs(b.U[w]**2).max(),
                      c1max=2.0 * np.abs(coeffs.K[w]).max(),
                      c0max=np.abs(coeffs.L[w]).max()) / scale
        lv_h.append(CheckLevel(n, grid.h, r_h / scale, fl))
        lv_d.append(CheckLevel(n, grid.h, r_d / scale, fl))
    r1 = _finish(CheckResult("eta-hermiticity", "metric Hermiticity", lv_h), tol)
    r2 = _finish(CheckResult("eta-dual", "metric dual construction", lv_d), tol)
    return r1, r2


def check_parity_eta(builder: SystemBuilder, n, tol=None):
    """Parity-based metric on a symmetric grid: P^2 = 1 and Hermiticity.

    This matrix has a single entry per row, so Hermiticity is measured
    entrywise.  It holds exactly when the gauge function and U are even;
    odd gauges are expected to break it, which negative-control tests
    exercise.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    ds = builder.dressed(n)
    grid, b = ds.grid, ds.bundle
    P = build_parity(grid)
    p2 = float(np.abs(P.mat @ P.mat - np.eye(grid.n)).max())
    eta = build_eta_parity(ds.a, b, grid)
    herm = float(np.abs(eta.mat - eta.mat.conj().T).max())
    res = CheckResult("parity-eta", "parity metric Hermiticity",
                      [CheckLevel(n, grid.h, herm, 64.0 * EPS)])
    res.notes["parity_squared_defect"] = p2
    res.threshold = 1e-12
    res.verdict = "pass" if (p2 == 0.0 and herm <= 1e-12) else "fail"
    return res


# ---------------------------------------------------------------------------
# intertwining defect
# ---------------------------------------------------------------------------

def _operator_amplification(grid, c2, c1, c0, w):
    return (STENCIL_ABS_D2 * np.abs(c2[w]).max() / grid.h**2
            + 2.0 * STENCIL_ABS_D1 * np.abs(c1[w]).max() / grid.h
            + np.abs(c0[w]).max() + 1.0)


def check_intertwining(builder: SystemBuilder, ns, tol=None, probes=8, detune=None):
    """Defect of the metric intertwining relation, with zeroth-order analysis.

    Per level the defect Delta = eta H' - H'^ eta is applied to smooth
    probes; the headline residual is max |Delta v| relative to the action
    scale max |eta (H' v)| on the window.  At the two finest levels the
    pointwise ratios (Delta v)/v are compared across probes; if they agree,
    the defect is a pure multiplication operator whose symbol is fitted
    against the sampled zeroth-order balance in both printed and corrected
    forms, and the fitted constants are reported with their cross-grid
    stability.

    With `detune` set, the companion function is replaced (see
    OperatorInputs.detuned) so the defect is genuinely nonzero; for
    consistently constructed systems the defect vanishes identically and
    only the convergence of the residual toward the rounding floor is
    asserted.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    xm = _xmargin(builder, ns)
    levels = []
    per_level = []
    for n in ns:
        inp = builder.inputs(n)
        if detune is not None:
            inp = OperatorInputs.detuned(builder.dressed(n), detune)
        grid, b = inp.grid, inp.bundle
        coeffs = inp.coefficients()
        eta = build_eta_tilde(coeffs, b, grid, mode="direct")
        hp = build_h_prime(inp.V, inp.a, inp.ap, b, grid, coeffs)
        hpd = build_h_prime_dagger(inp.V, inp.a, inp.ap, b, grid, coeffs)
        w = _window(grid, xm)
        pr = default_probes(grid, probes)
        worst = scale = hv_max = ev_max = 0.0
        syms = []
        for v in pr:
            hv = hp.mat @ v
            ev = eta.mat @ v
            dv = eta.mat @ hv - hpd.mat @ ev
            worst = max(worst, np.abs(dv[w]).max())
            scale = max(scale, np.abs((eta.mat @ hv)[w]).max())
            hv_max = max(hv_max, np.abs(hv[w]).max())
            ev_max = max(ev_max, np.abs(ev[w]).max())
            m = w & (np.abs(v) >= 0.3 * np.abs(v[w]).max())
            sym = np.full(grid.n, np.nan + 0j)
            sym[m] = dv[m] / v[m]
            syms.append(sym)
        scale = max(scale, 1e-300)
        # roundoff model: noise of the inner matvec (amplification times its
        # input) is rough, so the outer stencil re-amplifies it fully
        a_eta = _operator_amplification(grid, b.U**2, 2.0 * coeffs.K, coeffs.L, w)
        a_h = _operator_amplification(grid, b.U**2, 2.0 * coeffs.M1,
                                      coeffs.N1 + inp.V, w)
        floor = FLOOR_SAFETY * EPS * (a_eta * a_h + a_eta * hv_max + a_h * ev_max) / scale
        levels.append(CheckLevel(n, grid.h, worst / scale, floor))
        per_level.append((grid, w, syms, inp, worst, scale))

    res = CheckResult("intertwining", "metric intertwining", levels)
    res.notes["detune"] = detune if detune is None or np.isscalar(detune) else "callable"

    # zeroth-order structure at the two finest levels
    cs = {"printed": [], "corrected": []}
    devs, fits = [], {"printed": [], "corrected": []}
    symbol_scales = []
    for grid, w, syms, inp, worst, scale in per_level[-2:]:
        arr = np.array(syms)
        filled = ~np.isnan(arr)
        cnt = filled.sum(axis=0)
        have = cnt > 0
        S = np.full(grid.n, np.nan + 0j)
        S[have] = np.nansum(np.where(filled, arr, 0.0), axis=0)[have] / cnt[have]
        symbol_scale = np.abs(S[have]).max() if have.any() else 0.0
        symbol_scales.append(float(symbol_scale))
        dev = 0.0
        for i in range(len(syms)):
            for j in range(i + 1, len(syms)):
                both = ~np.isnan(syms[i]) & ~np.isnan(syms[j])
                if both.any():
                    dev = max(dev, float(np.abs(syms[i][both] - syms[j][both]).max()))
        devs.append(dev / max(symbol_scale, 1e-300))
        r28 = residual_eq28(inp, xmargin=0.0)
        for form in ("printed", "corrected"):
            R = r28[form]
            mfit = have & (np.abs(R) >= 0.05 * np.abs(R[w]).max())
            if mfit.any() and np.abs(R[mfit]).max() > 0:
                c = complex(np.sum(S[mfit] * R[mfit]) / np.sum(R[mfit] ** 2))
                fit = float(np.abs(S[mfit] - c * R[mfit]).max()
                            / max(symbol_scale, 1e-300))
            else:
                c, fit = 0j, float("nan")
            cs[form].append(c)
            fits[form].append(fit)

    res.notes["symbol_scale"] = symbol_scales
    res.notes["probe_symbol_deviation_rel"] = devs
    for form in ("printed", "corrected"):
        res.notes[f"c_{form}"] = [[c.real, c.imag] for c in cs[form]]
        res.notes[f"fit_residual_{form}"] = fits[form]
        if len(cs[form]) == 2 and abs(cs[form][1]) > 0:
            res.notes[f"c_{form}_stability"] = (abs(cs[form][0] - cs[form][1])
                                                / abs(cs[form][1]))

    # regime: a genuine multiplication-operator defect is h-independent, so
    # its residual does not decay under refinement; truncation or rounding
    # residuals either decay or sit below the floor ceiling
    ratio = levels[0].residual / max(levels[-1].residual, 1e-300)
    defect_is_genuine = (levels[-1].residual > 10.0 * levels[-1].floor
                         and ratio < 2.0)
    res.notes["defect_regime"] = "genuine" if defect_is_genuine else "vanishing"
    res.notes["residual_decay_ratio"] = float(ratio)
    if defect_is_genuine:
        ok = (devs[-1] <= tol["symbol_dev_rel"]
              and res.notes.get("c_printed_stability", 1.0) <= tol["c_stability"]
              and fits["printed"][-1] <= 10.0 * tol["c_stability"])
        res.observed_order = None
        res.threshold = tol["symbol_dev_rel"]
        res.verdict = "pass" if ok else "fail"
    else:
        _finish(res, tol, threshold=max(tol["residual"], 20.0 * levels[-1].floor))
    return res


# ---------------------------------------------------------------------------
# spectral checks
# ---------------------------------------------------------------------------

@dataclass
class SpectralResult:
    """Dense eigendecomposition of the interior-block Hamiltonian."""

    grid: Grid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    backward_error: float = 0.0
    solver: str = "eig"
    pairing: list = None
    counts: dict = None

    def classify(self, tol_rel=1e-6):
        E = self.eigenvalues
        labels = np.empty(len(E), dtype=object)
        scale = np.maximum(1.0, np.abs(E))
        is_real = np.abs(E.imag) <= tol_rel * scale
        labels[is_real] = "real"
        idx = np.where(~is_real)[0]
        for i in idx:
            d = np.abs(E - np.conj(E[i]))
            d[i] = np.inf
            labels[i] = "paired" if d.min() <= tol_rel * scale[i] else "unpaired"
        self.pairing = list(labels)
        self.counts = {k: int(np.sum(labels == k)) for k in ("real", "paired", "unpaired")}
        return self.counts


def eigendecompose(h_block: OperatorMatrix, backward_tol=1e-10) -> SpectralResult:
    """All eigenpairs of the Dirichlet interior block, with a backward-error contract.

    Hermitian blocks (within rounding) go through the symmetric solver,
    which also guarantees exactly real eigenvalues; everything else through
    the general dense solver.  Solver failures and contract violations
    surface as explicit errors.
    """
    mat = h_block.mat
    m = mat.shape[0]
    if m > EIG_BUDGET:
        raise BudgetExceededError(
            f"dense eigensolve of size {m} exceeds the budget ({EIG_BUDGET})")
    scale = np.abs(mat).max()
    hermitian = np.abs(mat - mat.conj().T).max() <= 1e-12 * scale
    try:
        if hermitian:
            if np.abs(mat.imag).max() == 0.0:
                w, v = np.linalg.eigh(mat.real)
            else:
                w, v = np.linalg.eigh(mat)
            w = w.astype(complex)
            solver = "eigh"
        else:
            w, v = np.linalg.eig(mat)
            order = np.argsort(w.real, kind="stable")
            w, v = w[order], v[:, order]
            solver = "eig"
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigensolver failed: {exc}") from None
    if not np.all(np.isfinite(w)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")
    hfro = np.linalg.norm(mat, "fro")
    resid = np.linalg.norm(mat @ v - v * w[None, :], "fro") / (hfro * np.sqrt(m))
    if resid > backward_tol:
        raise EigensolverError(
            f"eigensolver backward error {resid:.3e} exceeds contract {backward_tol:.1e}")
    sr = SpectralResult(h_block.grid, w, v, float(resid), solver)
    sr.classify()
    return sr


def _spectral_window_counts(spectral: SpectralResult, cap):
    E = spectral.eigenvalues
    sel = E.real <= cap
    labels = np.array(spectral.pairing, dtype=object)[sel]
    return {k: int(np.sum(labels == k)) for k in ("real", "paired", "unpaired")}


def check_spectrum(builder: SystemBuilder, eig_levels, tol=None):
    """Dense spectra at the two finest eig levels with pairing bookkeeping.

    The pairing counts are compared inside a fixed spectral window where the
    coarser grid resolves modes with sub-percent dispersion; counts may shift
    by at most 2 per class near the truncation edge.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    eig_levels = sorted(eig_levels)[-2:]
    spectra = []
    levels = []
    for n in eig_levels:
        sp = spectral_for(builder, n, tol)
        spectra.append(sp)
        levels.append(CheckLevel(n, sp.grid.h, sp.backward_error, EPS))
    res = CheckResult("spectrum", "dense spectrum bookkeeping", levels)
    # compare counts only over the part of the spectrum the coarser grid
    # resolves with sub-percent dispersion (phase per step <= 0.8 rad)
    re0 = spectra[0].eigenvalues.real
    cap = re0.min() + 0.64 / spectra[0].grid.h**2
    counts = [_spectral_window_counts(sp, cap) for sp in spectra]
    res.notes["window_cap"] = float(cap)
    res.notes["counts"] = counts
    res.notes["solver"] = [sp.solver for sp in spectra]
    stable = all(abs(counts[0][k] - counts[1][k]) <= 2 for k in counts[0])
    ok = stable and all(lv.residual <= tol["eig_backward"] for lv in levels)
    res.threshold = tol["eig_backward"]
    res.verdict = "pass" if ok else "fail"
    res.observed_order = None
    res.notes["order"] = "not applicable to spectral bookkeeping"
    return res, spectra[-1]


def spectral_for(builder: SystemBuilder, n, tol):
    """Eigendecompose the configured system's Dirichlet block at resolution n."""
    inp = builder.inputs(n)
    hb = build_h_prime_block(inp.V, inp.a, inp.ap, inp.bundle, inp.grid)
    return eigendecompose(hb, tol["eig_backward"])


def check_eq29(builder: SystemBuilder, n, tol=None):
    """Spectral structure of the metric-weighted Gram matrix.

    G_jk = <v_j | w eta | v_k> over the computed eigenbasis.  The exact
    statement (vanishing norms for nonreal eigenvalues, orthogonality except
    between conjugate pairs) holds exactly as far as the intertwining holds
    *on the eigenvectors*, wall effects included, so the governing defect is
    measured as max_k |(H'^H W eta - W eta H') v_k| relative to the metric
    action on v_k.  Below the exact-regime threshold the structure is
    asserted at the relative tolerance; above it the same numbers are
    emitted reported-only with defect-scaled tolerances.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    inp = builder.inputs(n)
    grid, b = inp.grid, inp.bundle
    coeffs = inp.coefficients()
    hb = build_h_prime_block(inp.V, inp.a, inp.ap, b, grid)
    eb = build_eta_tilde_block(coeffs, b, grid)
    sp = eigendecompose(hb, tol["eig_backward"])
    V = sp.eigenvectors
    E = sp.eigenvalues
    m = len(E)
    weta = grid.h * eb.mat
    etaV = weta @ V
    G = V.conj().T @ etaV
    gram_herm = float(np.abs(G - G.conj().T).max() / max(np.abs(G).max(), 1e-300))

    scale_e = np.maximum(1.0, np.abs(E))
    nonreal = np.abs(E.imag) > tol["eig_rel"] * scale_e
    gd = np.abs(np.diag(G))
    gscale = float(np.median(gd)) or 1.0

    # defect of the weighted intertwining on the eigenvectors; the exact
    # identity (conj(E_j) - E_k) G_jk = v_j^H C v_k makes |C v_k|/gscale the
    # quantity that bounds relative Gram structure violations
    C = hb.mat.conj().T @ weta - weta @ hb.mat
    CV = C @ V
    num = np.linalg.norm(CV, axis=0)
    defect = float(np.max(num / (gscale * scale_e)))

    # property (i): nonreal eigenvalues have vanishing metric norm
    viol_i = float((gd[nonreal] / gscale).max()) if nonreal.any() else 0.0
    # property (ii): off-structure entries vanish unless conjugate-paired
    conj_gap = np.abs(E.conj()[:, None] - E[None, :])
    offstruct = (conj_gap > tol["eig_rel"] * np.maximum(1.0, np.abs(E))[None, :])
    np.fill_diagonal(offstruct, False)
    viol_ii = float((np.abs(G)[offstruct] / gscale).max()) if offstruct.any() else 0.0

    gaps = conj_gap[offstruct]
    gap = float(gaps.min()) if gaps.size else 1.0
    tol_scaled = max(tol["exact_regime_defect"], 10.0 * defect / max(gap, 1e-300))

    res = CheckResult("eq29", "metric Gram structure",
                      [CheckLevel(n, grid.h, max(viol_i, viol_ii), EPS)])
    res.notes.update({
        "defect_on_eigenvectors": defect,
        "exact_regime": defect < tol["exact_regime_defect"],
        "gram_scale": gscale,
        "violation_i_rel": viol_i,
        "violation_ii_rel": viol_ii,
        "min_constrained_gap": gap,
        "defect_scaled_tolerance": tol_scaled,
        "gram_hermiticity_rel": gram_herm,
        "counts": sp.counts,
        "solver": sp.solver,
    })
    res.observed_order = None
    res.notes["order"] = "not applicable to Gram structure"
    if defect < tol["exact_regime_defect"]:
        res.threshold = tol["gram_rel"]
        res.verdict = "pass" if max(viol_i, viol_ii) <= tol["gram_rel"] else "fail"
    else:
        res.threshold = tol_scaled
        res.verdict = "reported-only"
    return res, sp


# ---------------------------------------------------------------------------
# suite orchestration
# ---------------------------------------------------------------------------

CHECK_NAMES = ("eq25", "eq26", "eq28", "intertwining", "groundstate", "gauge",
               "tau", "eta-hermiticity", "parity-eta", "spectrum", "eq29")


def run_suite(builder: SystemBuilder, checks, ns, tol=None, probes=8,
              eig_levels=None, detune=None, jobs=1):
    """Run the requested checks; returns (results, spectral summary, findings).

    Results come back in the canonical check order regardless of job count,
    so report payloads are deterministic.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    unknown = set(checks) - set(CHECK_NAMES)
    if unknown:
        raise InvalidDomainError(f"unknown checks: {sorted(unknown)}")
    eig_levels = eig_levels or [max(201, ns[0] // 2), ns[0]]

    tasks = []
    if "eq25" in checks:
        tasks.append(("eq25", lambda: [check_eq25(builder, ns, tol)]))
    if "eq26" in checks:
        tasks.append(("eq26", lambda: [check_eq26(builder, ns, tol)]))
    if "eq28" in checks:
        def _eq28():
            inp = builder.inputs(ns[-1])
            r = residual_eq28(inp, _xmargin(builder, ns))
            cr = CheckResult("eq28", "zeroth-order balance (sampled)",
                             [CheckLevel(ns[-1], inp.grid.h, r["max_printed"], 0.0)])
            cr.notes["max_printed"] = r["max_printed"]
            cr.notes["max_corrected"] = r["max_corrected"]
            cr.verdict = "reported-only"
            return [cr]
        tasks.append(("eq28", _eq28))
    if "intertwining" in checks:
        tasks.append(("intertwining",
                      lambda: [check_intertwining(builder, ns, tol, probes, detune)]))
    if "groundstate" in checks and builder.kind == "family":
        tasks.append(("groundstate", lambda: list(check_groundstate(builder, ns, tol))))
    if "gauge" in checks and builder.kind == "family":
        tasks.append(("gauge", lambda: [check_gauge_equivalence(builder, ns, tol)]))
    if "tau" in checks and builder.kind == "family":
        tasks.append(("tau", lambda: [check_tau(builder, ns, tol, probes)]))
    if "eta-hermiticity" in checks:
        tasks.append(("eta-hermiticity", lambda: list(check_eta(builder, ns, tol, probes))))
    if "parity-eta" in checks:
        grid = builder.grid(ns[0])
        if grid.parity_capable:
            tasks.append(("parity-eta", lambda: [check_parity_eta(builder, ns[0], tol)]))
    spectral_summary = None
    results = []
    outputs = {}

    def run_task(item):
        name, fn = item
        return name, fn()

    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            for name, out in ex.map(run_task, tasks):
                outputs[name] = out
    else:
        for item in tasks:
            name, out = run_task(item)
            outputs[name] = out
    for name, _ in tasks:
        results.extend(outputs[name])

    if "spectrum" in checks:
        try:
            sres, sp = check_spectrum(builder, eig_levels, tol)
            spectral_summary = spectral_payload(sp)
        except EigensolverError as exc:
            sres = _solver_failure("spectrum", exc)
        results.append(sres)
    if "eq29" in checks:
        try:
            eres, sp = check_eq29(builder, eig_levels[-1], tol)
            if spectral_summary is None:
                spectral_summary = spectral_payload(sp)
        except EigensolverError as exc:
            eres = _solver_failure("eq29", exc)
        results.append(eres)

    findings = _standing_findings(builder, ns)
    return results, spectral_summary, findings


def _solver_failure(name, exc):
    """Eigensolver failures surface as explicit failed checks, never silently,
    and never abort the rest of the suite."""
    res = CheckResult(name, "dense eigendecomposition", [])
    res.verdict = "fail"
    res.notes["error"] = str(exc)
    return res


def spectral_payload(sp: SpectralResult, cap=64):
    E = sp.eigenvalues[np.argsort(sp.eigenvalues.real, kind="stable")][:cap]
    return {
        "solver": sp.solver,
        "backward_error": sp.backward_error,
        "counts": sp.counts,
        "eigenvalues_re": [float(e.real) for e in E],
        "eigenvalues_im": [float(e.imag) for e in E],
        "listed": int(len(E)),
        "total": int(len(sp.eigenvalues)),
    }


def _standing_findings(builder: SystemBuilder, ns):
    """Structured notes on printed-form discrepancies, measured per run."""
    findings = []
    if builder.kind != "family":
        return findings
    ds = builder.dressed(ns[0])
    if ds.printed_vmu is not None:
        gap = float(np.abs(ds.V_mu - ds.printed_vmu).max())
        findings.append({
            "id": "mass-gradient-term-form",
            "detail": ("sampled mass-gradient term uses the closure-consistent form "
                       "(5 mu''^2 - 2 mu' mu''')/(4 mu'^4); the catalog-printed form "
                       "mu'''/mu'^3 - (5/4) mu''^2/mu'^4 differs on this grid by"),
            "max_abs_difference": gap,
        })
    if ds.analytic and ds.spec.family in CATALOG:
        r1, r2 = check_groundstate(builder, ns[:2],
                                   state=printed_state_sampler(ds.spec.family))
        findings.append({
            "id": "printed-ground-state",
            "detail": ("catalog-printed wavefunction fed through the first-order "
                       "annihilation check; the quadrature-built state is the one "
                       "that annihilates (see groundstate check)"),
            "printed_state_residuals": [lv.residual for lv in r1.levels],
        })
    return findings


TRACEABLE = ("eq25", "eq26", "eq28", "groundstate", "gauge")


def residual_trace(builder: SystemBuilder, check: str, n: int, path):
    """Write the pointwise residual of one traceable check as CSV (x, residual).

    Traces are diagnostic sidecars; thresholds and verdicts always come from
    the window statistics of the named checks.
    """
    if check not in TRACEABLE:
        raise InvalidDomainError(
            f"check {check!r} has no pointwise trace (traceable: {TRACEABLE})")
    ds = builder.dressed(n)
    grid, b = ds.grid, ds.bundle
    D1 = diff_matrix(grid, 1)
    if check == "eq25":
        res = np.abs(ds.V - np.conj(ds.V) + 4j * b.U * (D1 @ ds.g))
    elif check == "eq26":
        lhs = D1 @ np.conj(ds.V)
        rhs = (2.0 * ds.f * (D1 @ ds.f) - 2.0 * ds.g * (D1 @ ds.g)
               - D1 @ (D1 @ (b.U * ds.f)) + 2j * (D1 @ (b.U * (D1 @ ds.g))))
        res = np.abs(lhs - rhs)
    elif check == "eq28":
        res = np.abs(residual_eq28(OperatorInputs.from_dressed(ds))["printed"])
    elif check == "groundstate":
        dt = build_d_tilde(ds.phi, ds.a, b, grid)
        res = np.abs(dt.mat @ ds.xi) / np.abs(ds.xi).max()
    else:
        d = build_d(ds.phi, b, grid)
        dt = build_d_tilde(ds.phi, ds.a, b, grid)
        res = (np.abs(dt.mat @ (ds.Lambda * ds.psi) - ds.Lambda * (d.mat @ ds.psi))
               / np.abs(ds.psi).max())
    with open(path, "w") as fh:
        fh.write("x,residual\n")
        for xi, ri in zip(grid.x, res):
            fh.write(f"{xi:.16e},{ri:.16e}\n")
    return path


def printed_state_sampler(family):
    """Samplers for the catalog's printed ground-state expressions (reported-only)."""
    def sample(ds: DressedSystem):
        b = ds.bundle
        mu, U, alpha = b.mu, b.U, ds.spec.alpha
        if family == "harmonic3d":
            s = np.sqrt(mu) / U * np.exp(-0.5j * alpha * mu**2)
        elif family == "morse":
            s = np.exp(-0.5 * alpha * mu) / U * np.exp((2j / alpha) * np.exp(-alpha * mu))
        elif family == "scarf2":
            s = (1.0 / (U * np.sqrt(np.cosh(alpha * mu)))
                 * np.exp(-(1j / alpha) * np.arctan(np.tanh(0.5 * alpha * mu))))
        elif family == "gen-poschl-teller":
            s = (1.0 / (U * np.sqrt(np.sinh(alpha * mu)))
                 * np.tanh(0.5 * alpha * mu) ** (-2j / alpha))
        elif family == "poschl-teller":
            s = (1.0 / (U * np.sqrt(np.sinh(2.0 * alpha * mu)))
                 * np.tanh(alpha * mu) ** (-2j / alpha))
        else:
            raise InvalidDomainError(f"no printed state for family {family!r}")
        return s / s[ds.anchor]
    return sample
