"""Generating-function pipeline.

A real nonvanishing generating function g fixes everything else:

    f      = (U' g - U g') / (2 g)                  (companion function)
    V      = f^2 - g^2 - (U f)' - 2i U g' + delta   (complex potential)
    V_eff  = delta - g^2 - g'^2/(4 g^2 mu'^2) + g''/(2 g mu'^2)
             - g' mu'' / (2 g mu'^3) - 2i g'/mu'    (mass-free shape)
    xi     ~ exp[- int f/U - i int (g - a)/U]       (ground state, energy delta)

with the gauge pair psi = xi at a = 0 and xi = Lambda psi,
Lambda = exp[i int a/U].  The five catalog families sample g as a function
of the mass integral mu, so one shape serves every mass profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DomainViolationError, GeneratingFunctionZeroError,
                     IOFormatError, InvalidDomainError)
from .grid import Grid, GridFunction, cumint, diff_matrix
from .profiles import MassProfile, ProfileBundle

G_ZERO_TOL = 1e-12

FAMILIES = ("harmonic3d", "morse", "scarf2", "gen-poschl-teller", "poschl-teller")

#: family name -> (g(mu) formula, default domain, needs mu > 0)
CATALOG = {
    "harmonic3d":        ("alpha*mu",                 (0.15, 10.0), True),
    "morse":             ("exp(-alpha*mu)",           (-2.0, 10.0), False),
    "scarf2":            ("sech(alpha*mu)",           (-8.0, 8.0),  False),
    "gen-poschl-teller": ("cosech(alpha*mu)",         (0.25, 12.0), True),
    "poschl-teller":     ("sech(alpha*mu)*cosech(alpha*mu)", (0.25, 12.0), True),
}


@dataclass(frozen=True)
class GeneratingSpec:
    """Which g to use, with the family parameter, energy offset and gauge.

    gauge_a is one of ("zero",), ("scaled-g", c) for a = c*g, or
    ("table", xs, values).  Only real gauges are representable: the
    third-derivative balance of the intertwining relation forces the
    momentum-shift function to be real, so no imaginary part is admitted
    anywhere in the construction.
    """

    family: str
    alpha: float = 1.0
    delta: float = 0.0
    gauge_a: tuple = ("zero",)
    g_table: tuple = None  # (xs, values) for family == "custom-table"

    def __post_init__(self):
        if self.family not in FAMILIES and self.family != "custom-table":
            raise InvalidDomainError(f"unknown family {self.family!r}")
        if self.family != "custom-table" and not self.alpha > 0:
            raise InvalidDomainError(f"family parameter alpha must be > 0, got {self.alpha}")
        if self.family == "custom-table" and self.g_table is None:
            raise InvalidDomainError("custom-table family needs g_table samples")


@dataclass
class DressedSystem:
    """Everything derived from one (g, a, delta, profile) choice on a grid.

    Derivative arrays of g are closed-form for catalog families (chain rule
    through mu) and finite-difference for custom tables; `analytic` records
    which.  `printed_reference` carries the catalog's closed-form effective
    potential for cross-checking, None for custom tables.
    """

    grid: Grid
    bundle: ProfileBundle
    spec: GeneratingSpec
    g: np.ndarray
    gp: np.ndarray
    gpp: np.ndarray
    gppp: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    a: np.ndarray
    ap: np.ndarray
    V: np.ndarray
    V_eff: np.ndarray
    V_mu: np.ndarray
    psi: np.ndarray
    xi: np.ndarray
    Lambda: np.ndarray
    tau_phase: np.ndarray
    energy: complex
    anchor: int
    analytic: bool = True
    printed_reference: np.ndarray = None
    printed_vmu: np.ndarray = None

    @property
    def phi(self):
        return self.f + 1j * self.g

    @property
    def A(self):
        return self.a


def _check_nonvanishing(g):
    if np.any(np.abs(g) < G_ZERO_TOL) or not np.all(np.isfinite(g)):
        raise GeneratingFunctionZeroError(
            "generating function vanishes (or is singular) on the grid")


def _g_chain(family, alpha, mu):
    """g and its first three mu-derivatives for a catalog family."""
    if family == "harmonic3d":
        G = alpha * mu
        G1 = np.full_like(mu, alpha)
        G2 = np.zeros_like(mu)
        G3 = np.zeros_like(mu)
    elif family == "morse":
        G = np.exp(-alpha * mu)
        G1, G2, G3 = -alpha * G, alpha**2 * G, -alpha**3 * G
    elif family == "scarf2":
        s = 1.0 / np.cosh(alpha * mu)
        t = np.tanh(alpha * mu)
        G = s
        G1 = -alpha * s * t
        G2 = alpha**2 * s * (1.0 - 2.0 * s**2)
        G3 = -alpha**3 * s * t * (1.0 - 6.0 * s**2)
    elif family == "gen-poschl-teller":
        sh = np.sinh(alpha * mu)
        c = 1.0 / sh
        k = np.cosh(alpha * mu) / sh
        G = c
        G1 = -alpha * c * k
        G2 = alpha**2 * c * (1.0 + 2.0 * c**2)
        G3 = -alpha**3 * c * k * (1.0 + 6.0 * c**2)
    elif family == "poschl-teller":
        sh = np.sinh(2.0 * alpha * mu)
        c = 1.0 / sh
        k = np.cosh(2.0 * alpha * mu) / sh
        G = 2.0 * c
        G1 = -4.0 * alpha * c * k
        G2 = 8.0 * alpha**2 * c * (1.0 + 2.0 * c**2)
        G3 = -16.0 * alpha**3 * c * k * (1.0 + 6.0 * c**2)
    else:
        raise InvalidDomainError(f"no closed-form chain for family {family!r}")
    return G, G1, G2, G3


def compute_f(g: GridFunction, bundle: ProfileBundle, gp=None) -> GridFunction:
    """Companion function in mass-integral form: -g'/(2 mu' g) - mu''/(2 mu'^2)."""
    gv = np.asarray(g.values, dtype=float)
    _check_nonvanishing(gv)
    if gp is None:
        gp = diff_matrix(g.grid, 1) @ gv
    f = -gp / (2.0 * bundle.mup * gv) - bundle.mupp / (2.0 * bundle.mup**2)
    return GridFunction(g.grid, f)


def compute_f_eq33(g: GridFunction, bundle: ProfileBundle, gp=None) -> GridFunction:
    """Companion function in kinetic-weight form: (U' g - U g') / (2 g).

    Algebraically identical to :func:`compute_f` since mu' = 1/U; both are
    kept as independent routes and their pointwise agreement is a
    standing self-test.
    """
    gv = np.asarray(g.values, dtype=float)
    _check_nonvanishing(gv)
    if gp is None:
        gp = diff_matrix(g.grid, 1) @ gv
    f = (bundle.Up * gv - bundle.U * gp) / (2.0 * gv)
    return GridFunction(g.grid, f)


def assemble_potential(f, fp, g, gp, bundle: ProfileBundle, delta=0.0):
    """Complex potential V = f^2 - g^2 - (U f)' - 2i U g' + delta."""
    return (f**2 - g**2 - (bundle.Up * f + bundle.U * fp)
            - 2j * bundle.U * gp + delta)


def effective_potential(g, gp, gpp, bundle: ProfileBundle, delta=0.0):
    """Mass-free potential shape and the mass-gradient term.

    Returns (V_eff, V_mu) with V = V_eff - V_mu.  V_mu is the term removed
    when the problem is mapped onto the mass-integral coordinate,

        V_mu = (5 mu''^2 - 2 mu' mu''') / (4 mu'^4),

    which is the unique expression closing V = V_eff - V_mu against
    :func:`assemble_potential`; it vanishes for constant mass.
    """
    _check_nonvanishing(g)
    mup, mupp, muppp = bundle.mup, bundle.mupp, bundle.muppp
    V_eff = (delta - g**2 - gp**2 / (4.0 * g**2 * mup**2)
             + gpp / (2.0 * g * mup**2) - gp * mupp / (2.0 * g * mup**3)
             - 2j * gp / mup)
    V_mu = (5.0 * mupp**2 - 2.0 * mup * muppp) / (4.0 * mup**4)
    return V_eff, V_mu


def printed_vmu(bundle: ProfileBundle):
    """Mass-gradient term in its catalog-printed form, mu'''/mu'^3 - (5/4) mu''^2/mu'^4.

    Kept for reporting only: it does not close V = V_eff - V_mu for
    position-dependent mass (the two forms agree only when mu'' = mu''' = 0)
    and every report carries the measured discrepancy.
    """
    return bundle.muppp / bundle.mup**3 - 1.25 * bundle.mupp**2 / bundle.mup**4


def printed_potential(family, alpha, mu):
    """Catalog closed-form effective potentials as functions of the mass integral."""
    if family == "harmonic3d":
        return -alpha**2 * mu**2 - 1.0 / (4.0 * mu**2) - 2j * alpha
    if family == "morse":
        e = np.exp(-alpha * mu)
        return -e**2 + 2j * alpha * e + alpha**2 / 4.0
    if family == "scarf2":
        s = 1.0 / np.cosh(alpha * mu)
        t = np.tanh(alpha * mu)
        return -(1.0 + 0.75 * alpha**2) * s**2 + 2j * alpha * s * t + alpha**2 / 4.0
    if family == "gen-poschl-teller":
        sh = np.sinh(alpha * mu)
        c = 1.0 / sh
        k = np.cosh(alpha * mu) / sh
        return -(1.0 - 0.75 * alpha**2) * c**2 + 2j * alpha * c * k + alpha**2 / 4.0
    if family == "poschl-teller":
        c = 1.0 / np.sinh(alpha * mu)
        s = 1.0 / np.cosh(alpha * mu)
        return ((0.75 * alpha**2 - 1.0 + 2j * alpha) * c**2
                - (0.75 * alpha**2 - 1.0 - 2j * alpha) * s**2 + alpha**2)
    raise InvalidDomainError(f"no printed form for family {family!r}")


def ground_state(f, g, a, bundle: ProfileBundle, anchor=None):
    """Ground-state pair (psi, xi, Lambda) from cumulative quadrature.

    psi = exp[- int f/U - i int g/U] solves the ungauged first-order
    annihilation condition; Lambda = exp[i int a/U] is the unit-modulus
    gauge factor and xi = Lambda psi.  All integrals share one anchor node
    where the state is normalized to exactly 1.
    """
    grid = bundle.grid
    if anchor is None:
        anchor = grid.index_nearest(0.0)
    U = bundle.U
    P = cumint(f / U, grid, anchor)
    Q = cumint(g / U, grid, anchor)
    R = cumint(a / U, grid, anchor)
    psi = np.exp(-P - 1j * Q)
    Lambda = np.exp(1j * R)
    xi = Lambda * psi
    return psi, xi, Lambda


def _gauge_arrays(spec: GeneratingSpec, grid: Grid, g, gp):
    mode = spec.gauge_a[0]
    if mode == "zero":
        return np.zeros(grid.n), np.zeros(grid.n)
    if mode == "scaled-g":
        c = float(spec.gauge_a[1])
        return c * g, c * gp
    if mode == "table":
        xs = np.asarray(spec.gauge_a[1], dtype=float)
        vals = np.asarray(spec.gauge_a[2], dtype=float)
        from scipy.interpolate import CubicSpline
        if grid.x[0] < xs[0] or grid.x[-1] > xs[-1]:
            raise InvalidDomainError("gauge table does not cover the grid")
        a = CubicSpline(xs, vals)(grid.x)
        return a, diff_matrix(grid, 1) @ a
    raise InvalidDomainError(f"unknown gauge mode {spec.gauge_a[0]!r}")


def load_g_table(path):
    """Two-column CSV (x, g) -> (xs, values) for a custom-table generating function."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except Exception as exc:
        raise IOFormatError(f"could not read generating-function table {path}: {exc}") from None
    if data.shape[1] != 2:
        raise IOFormatError(f"generating-function table {path} must have two columns")
    xs = data[:, 0]
    if not np.all(np.diff(xs) > 0):
        raise IOFormatError("generating-function table x column must be strictly increasing")
    return xs, data[:, 1]


def make_family(spec: GeneratingSpec, profile: MassProfile, grid: Grid) -> DressedSystem:
    """Build the full dressed system for one family/profile/grid choice."""
    bundle = profile.sample(grid)
    mu = bundle.mu

    if spec.family == "custom-table":
        xs, vals = spec.g_table
        if grid.x[0] < xs[0] or grid.x[-1] > xs[-1]:
            raise InvalidDomainError("generating-function table does not cover the grid")
        from scipy.interpolate import CubicSpline
        g = CubicSpline(xs, vals)(grid.x)
        _check_nonvanishing(g)
        D1 = diff_matrix(grid, 1)
        gp = D1 @ g
        gpp = D1 @ gp
        gppp = D1 @ gpp
        analytic = False
        reference = None
    else:
        _, _, needs_positive_mu = CATALOG[spec.family]
        if needs_positive_mu and np.any(mu <= 0):
            raise DomainViolationError(
                f"family {spec.family!r} needs mu > 0 on the whole grid "
                f"(min mu = {mu.min():.6g}); move xmin to the right of the zero of mu")
        with np.errstate(over="raise", divide="raise"):
            try:
                G, G1, G2, G3 = _g_chain(spec.family, spec.alpha, mu)
            except FloatingPointError:
                raise DomainViolationError(
                    f"family {spec.family!r} hits a singularity on this grid") from None
        g = G
        gp = G1 * bundle.mup
        gpp = G2 * bundle.mup**2 + G1 * bundle.mupp
        gppp = (G3 * bundle.mup**3 + 3.0 * G2 * bundle.mup * bundle.mupp
                + G1 * bundle.muppp)
        analytic = True
        reference = printed_potential(spec.family, spec.alpha, mu)
    _check_nonvanishing(g)

    mup, mupp, muppp = bundle.mup, bundle.mupp, bundle.muppp
    f = -gp / (2.0 * mup * g) - mupp / (2.0 * mup**2)
    if analytic:
        G1 = gp / mup
        G2 = (gpp - G1 * mupp) / mup**2
        fp = (-mup * (G2 / (2.0 * g) - G1**2 / (2.0 * g**2))
              - muppp / (2.0 * mup**2) + mupp**2 / mup**3)
    else:
        fp = diff_matrix(grid, 1) @ f

    a, ap = _gauge_arrays(spec, grid, g, gp)

    V = assemble_potential(f, fp, g, gp, bundle, spec.delta)
    V_eff, V_mu = effective_potential(g, gp, gpp, bundle, spec.delta)

    anchor = grid.index_nearest(0.0)
    psi, xi, Lambda = ground_state(f, g, a, bundle, anchor)
    tau_phase = -2.0 * cumint(a / bundle.U, grid, anchor)

    return DressedSystem(
        grid=grid, bundle=bundle, spec=spec,
        g=g, gp=gp, gpp=gpp, gppp=gppp, f=f, fp=fp, a=a, ap=ap,
        V=V, V_eff=V_eff, V_mu=V_mu, psi=psi, xi=xi, Lambda=Lambda,
        tau_phase=tau_phase, energy=complex(spec.delta), anchor=anchor,
        analytic=analytic, printed_reference=reference,
        printed_vmu=printed_vmu(bundle))


def catalog_rows(family=None):
    """Rows for the catalog listing: name, g form, default domain, constraints."""
    names = [family] if family else list(FAMILIES)
    rows = []
    for name in names:
        if name not in CATALOG:
            raise InvalidDomainError(f"unknown family {name!r}")
        formula, domain, positive = CATALOG[name]
        rows.append({
            "family": name,
            "g": formula,
            "default_domain": list(domain),
            "alpha": "alpha > 0",
            "constraint": "mu > 0 on grid" if positive else "none",
        })
    return rows


CSV_COLUMNS = ("x", "m", "U", "mu", "g", "f", "a", "V_re", "V_im",
               "Veff_re", "Veff_im", "Vmu", "psi_re", "psi_im", "xi_re", "xi_im")


def to_csv(ds: DressedSystem, path):
    """Write the dressed system as CSV with a fixed column order, 17 significant digits."""
    b = ds.bundle
    cols = (ds.grid.x, b.m, b.U, b.mu, ds.g, ds.f, ds.a,
            ds.V.real, ds.V.imag, ds.V_eff.real, ds.V_eff.imag, ds.V_mu,
            ds.psi.real, ds.psi.imag, ds.xi.real, ds.xi.imag)
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(ds.grid.n):
            fh.write(",".join(f"{c[i]:.16e}" for c in cols) + "\n")
