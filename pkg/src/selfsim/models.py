"""Coupled-model coefficient fields and their structural hypotheses.

A scalar or small-system coupling model packages the coefficient fields
A0, A1 (time/space coefficients) and B0 (viscosity), built from two
half-model data sets (gamma_-, f_-) and (gamma_+, f_+) by interpolation in
the color variable v, together with the structural constants (coercivity,
Lipschitz, speed bound, band data) estimated by deterministic tensor-grid
sampling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ModelConstructionError(ValueError):
    """Raised when supplied half-model data violates a structural hypothesis."""


def finite_difference(fn: Callable, step: float = 1e-6) -> Callable:
    def dfn(x):
        return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2.0 * step)
    return dfn


def affine_blend(v):
    """Weight of the v = +1 endpoint; the default smooth connection in v."""
    return (1.0 + np.asarray(v)) / 2.0


# ---------------------------------------------------------------------------
# scalar model


@dataclass(frozen=True)
class ScalarCouplingModel:
    A0: Callable
    A1: Callable
    B0: Callable
    gamma_minus: Callable
    gamma_plus: Callable
    f_minus: Callable
    f_plus: Callable
    c1: float
    c2: float
    c3: float
    omega0: float
    omega1: float
    Lambda: float
    u_domain: tuple[float, float]
    name: str = "scalar"

    def lam(self, u, v):
        return self.A1(u, v) / self.A0(u, v)

    def G(self, u, v):
        return self.A0(u, v) / self.B0(u, v)

    def contains(self, u) -> bool:
        lo, hi = self.u_domain
        return bool(np.all(u >= lo - 1e-12) and np.all(u <= hi + 1e-12))


def build_scalar_model(
    gamma_minus: Callable,
    gamma_plus: Callable,
    f_minus: Callable,
    f_plus: Callable,
    u_domain: tuple[float, float] = (-1.5, 1.5),
    B0: Callable | None = None,
    blend: Callable | None = None,
    d_gamma_minus: Callable | None = None,
    d_gamma_plus: Callable | None = None,
    d_f_minus: Callable | None = None,
    d_f_plus: Callable | None = None,
    samples: int = 64,
    name: str = "scalar",
) -> ScalarCouplingModel:
    """Assemble A0, A1 by blending the v = -1 and v = +1 endpoint values.

    The endpoints are pinned to the half-model data, A0(u, -+1) = gamma'_-+(u)
    and A1(u, -+1) = (f_-+ o gamma_-+)'(u); in between, the default is the
    affine blend in v (a user blend must satisfy w(-1) = 0, w(1) = 1).
    """
    w = blend if blend is not None else affine_blend
    if abs(w(-1.0)) > 1e-12 or abs(w(1.0) - 1.0) > 1e-12:
        raise ModelConstructionError("blend must map v=-1 to 0 and v=1 to 1")

    dgm = d_gamma_minus or finite_difference(gamma_minus)
    dgp = d_gamma_plus or finite_difference(gamma_plus)
    dfm = d_f_minus or finite_difference(f_minus)
    dfp = d_f_plus or finite_difference(f_plus)

    def A0(u, v):
        weight = w(v)
        return (1.0 - weight) * dgm(u) + weight * dgp(u)

    def A1(u, v):
        weight = w(v)
        return ((1.0 - weight) * dfm(gamma_minus(u)) * dgm(u)
                + weight * dfp(gamma_plus(u)) * dgp(u))

    if B0 is None:
        def B0(u, v):  # noqa: A001 - shadow on purpose
            return np.ones_like(np.asarray(u, dtype=float) + np.asarray(v, dtype=float))

    us = np.linspace(u_domain[0], u_domain[1], samples)
    vs = np.linspace(-1.0, 1.0, samples)
    UU, VV = np.meshgrid(us, vs, indexing="ij")

    if np.any(dgm(us) <= 0) or np.any(dgp(us) <= 0):
        raise ModelConstructionError("gamma_+- must be strictly increasing on the u domain")

    a0 = np.asarray(A0(UU, VV), dtype=float)
    a1 = np.asarray(A1(UU, VV), dtype=float)
    b0 = np.asarray(B0(UU, VV), dtype=float)
    if np.any(a0 <= 0):
        raise ModelConstructionError("sampled A0 violates positivity")
    if np.any(b0 <= 0):
        raise ModelConstructionError("sampled B0 violates positivity")

    du = us[1] - us[0]
    dv = vs[1] - vs[0]

    def lipschitz(f2d):
        gu = np.abs(np.gradient(f2d, du, axis=0)).max()
        gv = np.abs(np.gradient(f2d, dv, axis=1)).max()
        return float(max(gu, gv))

    return ScalarCouplingModel(
        A0=A0, A1=A1, B0=B0,
        gamma_minus=gamma_minus, gamma_plus=gamma_plus,
        f_minus=f_minus, f_plus=f_plus,
        c1=float(a0.min()), c2=float(b0.min()), c3=float(b0.max()),
        omega0=lipschitz(a0), omega1=lipschitz(a1),
        Lambda=float(np.abs(a1 / a0).max()),
        u_domain=(float(u_domain[0]), float(u_domain[1])),
        name=name,
    )


# ---------------------------------------------------------------------------
# system model


@dataclass(frozen=True)
class SystemCouplingModel:
    N: int
    A0: Callable
    A1: Callable
    B0: Callable
    m: int
    delta0: float
    lam_low: np.ndarray
    lam_high: np.ndarray
    eta: float
    nu: float
    M: float
    u_ref: np.ndarray
    name: str = "system"

    def A(self, u, v) -> np.ndarray:
        return np.asarray(self.A1(u, v)) @ np.linalg.inv(np.asarray(self.A0(u, v)))

    def B(self, u, v) -> np.ndarray:
        return np.asarray(self.B0(u, v)) @ np.linalg.inv(np.asarray(self.A0(u, v)))

    def in_ball(self, u, slack: float = 1e-9) -> bool:
        return bool(np.linalg.norm(np.asarray(u) - self.u_ref) <= self.delta0 + slack)

    def ball_samples(self, count: int) -> np.ndarray:
        """Deterministic low-discrepancy-ish samples of the state ball."""
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((count, self.N))
        radii = rng.random(count) ** (1.0 / self.N)
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * radii[:, None] * self.delta0
        return self.u_ref[None, :] + pts


def _eig_lambda(A: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvals(A)
    if np.max(np.abs(w.imag)) > 1e-9 * max(1.0, np.max(np.abs(w.real))):
        raise ModelConstructionError("complex eigenvalues: loss of hyperbolicity")
    return np.sort(w.real)


def build_p_system_model(
    p_minus: Callable,
    p_plus: Callable,
    tau_domain: tuple[float, float] = (0.5, 2.0),
    dp_minus: Callable | None = None,
    dp_plus: Callable | None = None,
    delta0: float | None = None,
    samples: int = 24,
    name: str = "p-system",
) -> SystemCouplingModel:
    """Two p-systems with pressure laws p_+-(tau), coupled by averaging the
    flux Jacobians in v; A0 = B0 = I so eta = 0 and the coupling strength nu
    is carried entirely by the v-dependence of the eigenvectors.
    """
    dpm = dp_minus or finite_difference(p_minus)
    dpp = dp_plus or finite_difference(p_plus)

    taus = np.linspace(tau_domain[0], tau_domain[1], samples)
    if np.any(dpm(taus) >= 0) or np.any(dpp(taus) >= 0):
        raise ModelConstructionError("p'_+- must be negative on tau_domain (hyperbolicity)")

    def pbar_prime(tau, v):
        wv = affine_blend(v)
        return wv * dpp(tau) + (1.0 - wv) * dpm(tau)

    def A1(u, v):
        tau = u[0]
        return np.array([[0.0, -1.0], [pbar_prime(tau, v), 0.0]])

    eye = np.eye(2)

    def A0(u, v):
        return eye

    B0 = A0

    tau0 = 0.5 * (tau_domain[0] + tau_domain[1])
    u_ref = np.array([tau0, 0.0])
    gap0 = 2.0 * np.sqrt(-pbar_prime(tau0, 0.0))
    if delta0 is None:
        delta0 = min(gap0 / 4.0, 0.45 * (tau_domain[1] - tau_domain[0]))

    def make(d0: float) -> SystemCouplingModel:
        # speed bands over the state ball x color interval
        tgrid = np.linspace(max(tau_domain[0], tau0 - d0),
                            min(tau_domain[1], tau0 + d0), samples)
        vgrid = np.linspace(-1.0, 1.0, samples)
        TT, VV = np.meshgrid(tgrid, vgrid, indexing="ij")
        c = np.sqrt(-pbar_prime(TT, VV))
        lam_low = np.array([-c.max(), c.min()])
        lam_high = np.array([-c.min(), c.max()])
        margin = 1e-9 + 1e-6 * c.max()
        lam_low -= margin
        lam_high += margin
        if lam_high[0] >= lam_low[1]:
            raise ModelConstructionError("speed bands overlap; shrink delta0 or tau_domain")
        return SystemCouplingModel(
            N=2, A0=A0, A1=A1, B0=B0,
            m=int(np.argmin(np.minimum(np.abs(lam_low), np.abs(lam_high)))) + 1,
            delta0=float(d0),
            lam_low=lam_low, lam_high=lam_high,
            eta=0.0, nu=0.0,
            M=float(lam_high[-1] + 0.5),
            u_ref=u_ref, name=name,
        )

    # shrink the state ball until eigenvector near-orthogonality holds
    # across sampled state pairs
    model = make(delta0)
    for _ in range(12):
        worst_diag, worst_off = _near_orthogonality(model, samples, seed=0)
        if worst_diag >= 1.0 - model.delta0 and worst_off <= model.delta0:
            break
        model = make(model.delta0 * 0.6)
    else:
        raise ModelConstructionError("could not find a state ball satisfying "
                                     "eigenvector near-orthogonality")
    from .spectral import estimate_eta_nu
    eta, nu = estimate_eta_nu(model, sample_count=samples)
    return dataclasses.replace(model, eta=float(eta), nu=float(nu))


def system_from_scalar(model: ScalarCouplingModel, u_center: float,
                       delta0: float | None = None, samples: int = 64) -> SystemCouplingModel:
    """Wrap a scalar model as an N = 1 system for cross-solver comparison."""
    if delta0 is None:
        lo, hi = model.u_domain
        delta0 = min(u_center - lo, hi - u_center)
        if delta0 <= 0:
            raise ModelConstructionError("u_center outside the scalar model domain")

    def wrap(f):
        def mat(u, v):
            return np.array([[float(f(float(u[0]), float(v)))]])
        return mat

    us = np.linspace(u_center - delta0, u_center + delta0, samples)
    vs = np.linspace(-1.0, 1.0, samples)
    UU, VV = np.meshgrid(us, vs, indexing="ij")
    lam = np.asarray(model.lam(UU, VV), dtype=float)
    B = np.asarray(model.B0(UU, VV), dtype=float) / np.asarray(model.A0(UU, VV), dtype=float)

    sys_model = SystemCouplingModel(
        N=1,
        A0=wrap(model.A0), A1=wrap(model.A1), B0=wrap(model.B0),
        m=1, delta0=float(delta0),
        lam_low=np.array([lam.min() - 1e-9]),
        lam_high=np.array([lam.max() + 1e-9]),
        eta=float(np.abs(B - 1.0).max()), nu=0.0,
        M=float(max(abs(lam.min()), abs(lam.max())) + 1.0),
        u_ref=np.array([float(u_center)]),
        name=model.name + "-as-system",
    )
    from .spectral import estimate_eta_nu
    eta, nu = estimate_eta_nu(sys_model, sample_count=min(samples, 24))
    return dataclasses.replace(sys_model, eta=float(eta), nu=float(nu))


# ---------------------------------------------------------------------------
# hypothesis validation


def _check(name: str, extremal: float, passed: bool) -> dict:
    return {"name": name, "extremal": float(extremal), "passed": bool(passed)}


def validate_hypotheses(model, sample_count: int = 64, seed: int = 0) -> dict:
    """Sampled verification of the structural hypotheses; failures are report
    entries, never exceptions, and the report is deterministic for a fixed
    sample_count and seed."""
    if isinstance(model, ScalarCouplingModel):
        checks = _validate_scalar(model, sample_count)
    elif isinstance(model, SystemCouplingModel):
        checks = _validate_system(model, sample_count, seed)
    else:
        raise TypeError(f"unknown model type {type(model)!r}")
    return {"model": model.name, "checks": checks,
            "passed": all(c["passed"] for c in checks)}


def _validate_scalar(model: ScalarCouplingModel, n: int) -> list[dict]:
    us = np.linspace(model.u_domain[0], model.u_domain[1], n)
    vs = np.linspace(-1.0, 1.0, n)
    UU, VV = np.meshgrid(us, vs, indexing="ij")
    a0 = np.asarray(model.A0(UU, VV), dtype=float)
    b0 = np.asarray(model.B0(UU, VV), dtype=float)
    lam = np.abs(np.asarray(model.A1(UU, VV), dtype=float) / a0)

    dgm = finite_difference(model.gamma_minus)
    dgp = finite_difference(model.gamma_plus)
    dfm = finite_difference(model.f_minus)
    dfp = finite_difference(model.f_plus)
    cons = max(
        np.abs(np.asarray(model.A0(us, -1.0)) - dgm(us)).max(),
        np.abs(np.asarray(model.A0(us, 1.0)) - dgp(us)).max(),
        np.abs(np.asarray(model.A1(us, -1.0)) - dfm(model.gamma_minus(us)) * dgm(us)).max(),
        np.abs(np.asarray(model.A1(us, 1.0)) - dfp(model.gamma_plus(us)) * dgp(us)).max(),
    )

    du, dv = us[1] - us[0], vs[1] - vs[0]
    a1 = np.asarray(model.A1(UU, VV), dtype=float)
    lip0 = max(np.abs(np.gradient(a0, du, axis=0)).max(), np.abs(np.gradient(a0, dv, axis=1)).max())
    lip1 = max(np.abs(np.gradient(a1, du, axis=0)).max(), np.abs(np.gradient(a1, dv, axis=1)).max())

    return [
        _check("A0 >= c1 > 0", a0.min(), a0.min() >= model.c1 - 1e-12 and model.c1 > 0),
        _check("c2 <= B0 <= c3", b0.min(), model.c2 - 1e-12 <= b0.min() and b0.max() <= model.c3 + 1e-12),
        _check("|A1/A0| <= Lambda", lam.max(), lam.max() <= model.Lambda + 1e-12),
        _check("endpoint consistency with gamma_+-, f_+-", cons, cons <= 1e-6),
        _check("Lipschitz bound omega0", lip0, lip0 <= model.omega0 * (1 + 1e-9) + 1e-12),
        _check("Lipschitz bound omega1", lip1, lip1 <= model.omega1 * (1 + 1e-9) + 1e-12),
    ]


def _near_orthogonality(model: SystemCouplingModel, n: int, seed: int,
                        ) -> tuple[float, float]:
    """Worst sampled l_i(u1).r_i(u2) diagonal and off-diagonal magnitudes
    across state pairs in the ball (hypothesis of approximate biorthogonality
    uniformly over the ball)."""
    from .spectral import eig_decomposition

    rng = np.random.default_rng(seed)
    pts = model.ball_samples(n)
    worst_diag, worst_off = 1.0, 0.0
    pair_idx = rng.integers(0, len(pts), size=(min(32, n), 2))
    for k1, k2 in pair_idx:
        v = rng.uniform(-1.0, 1.0)
        try:
            _, r1, l1 = eig_decomposition(model.A(pts[k1], v))
            _, r2, _ = eig_decomposition(model.A(pts[k2], v))
        except ModelConstructionError:
            continue
        cross = l1 @ r2.T
        worst_diag = min(worst_diag, float(np.diag(cross).min()))
        off = cross - np.diag(np.diag(cross))
        worst_off = max(worst_off, float(np.abs(off).max()))
    return worst_diag, worst_off


def _validate_system(model: SystemCouplingModel, n: int, seed: int) -> list[dict]:
    from .spectral import eig_decomposition

    pts = model.ball_samples(n)
    vs = np.linspace(-1.0, 1.0, 9)

    min_det = np.inf
    band_ok = True
    worst_band = 0.0
    max_bnorm = 0.0
    hyperbolic = True
    for u in pts:
        for v in vs:
            A0 = np.asarray(model.A0(u, v), dtype=float)
            min_det = min(min_det, abs(np.linalg.det(A0)))
            try:
                lam, _, _ = eig_decomposition(model.A(u, v))
            except ModelConstructionError:
                hyperbolic = False
                continue
            dev = np.maximum(model.lam_low - lam, lam - model.lam_high).max()
            worst_band = max(worst_band, dev)
            band_ok = band_ok and dev <= 1e-9
            max_bnorm = max(max_bnorm, np.linalg.norm(model.B(u, v) - np.eye(model.N), 2))

    gaps = model.lam_low[1:] - model.lam_high[:-1] if model.N > 1 else np.array([np.inf])

    # eigenvector near-orthogonality across state pairs in the ball
    worst_diag, worst_off = _near_orthogonality(model, n, seed)

    return [
        _check("A0 invertible on samples", min_det, min_det > 1e-12),
        _check("real separated eigenvalues", float(hyperbolic), hyperbolic),
        _check("eigenvalues inside bands", worst_band, band_ok),
        _check("bands disjoint", float(gaps.min()), bool(gaps.min() > 0)),
        _check("|B - I| <= eta", max_bnorm, max_bnorm <= model.eta + 1e-9),
        _check("l_i . r_i >= 1 - delta0", worst_diag, worst_diag >= 1.0 - model.delta0 - 1e-9),
        _check("|l_i . r_j| <= delta0 (i != j)", worst_off, worst_off <= model.delta0 + 1e-9),
    ]


# ---------------------------------------------------------------------------
# presets and declarative configs


def preset_model(name: str, **kwargs):
    key = name.lower()
    if key == "burgers-identical":
        ident = lambda u: np.asarray(u, dtype=float)
        burgers = lambda u: np.asarray(u, dtype=float) ** 2 / 2.0
        defaults = dict(u_domain=(-1.5, 1.5), name="burgers-identical",
                        d_gamma_minus=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                        d_gamma_plus=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                        d_f_minus=lambda u: np.asarray(u, dtype=float),
                        d_f_plus=lambda u: np.asarray(u, dtype=float))
        defaults.update(kwargs)
        return build_scalar_model(ident, ident, burgers, burgers, **defaults)
    if key == "linear-advection-pair":
        a = kwargs.pop("a", -0.5)
        b = kwargs.pop("b", 0.5)
        ident = lambda u: np.asarray(u, dtype=float)
        defaults = dict(u_domain=(-1.5, 1.5), name="linear-advection-pair",
                        d_gamma_minus=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                        d_gamma_plus=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                        d_f_minus=lambda u: np.full_like(np.asarray(u, dtype=float), a),
                        d_f_plus=lambda u: np.full_like(np.asarray(u, dtype=float), b))
        defaults.update(kwargs)
        return build_scalar_model(ident, ident,
                                  lambda u: a * np.asarray(u, dtype=float),
                                  lambda u: b * np.asarray(u, dtype=float),
                                  **defaults)
    if key == "p-system":
        km = kwargs.pop("k_minus", 1.0)
        kp = kwargs.pop("k_plus", 1.2)
        defaults = dict(tau_domain=(0.5, 2.0), name="p-system",
                        dp_minus=lambda t: -km / np.asarray(t, dtype=float) ** 2,
                        dp_plus=lambda t: -kp / np.asarray(t, dtype=float) ** 2)
        defaults.update(kwargs)
        return build_p_system_model(lambda t: km / np.asarray(t, dtype=float),
                                    lambda t: kp / np.asarray(t, dtype=float),
                                    **defaults)
    raise KeyError(f"unknown model preset {name!r}")


def _callable_from_spec(spec) -> Callable:
    """Polynomial (list of coefficients, low order first) or tabulated data."""
    if isinstance(spec, dict) and "table" in spec:
        xs = np.asarray(spec["table"]["x"], dtype=float)
        ys = np.asarray(spec["table"]["y"], dtype=float)
        return lambda u: np.interp(u, xs, ys)
    coeffs = np.asarray(spec, dtype=float)
    return lambda u: np.polynomial.polynomial.polyval(np.asarray(u, dtype=float), coeffs)


def model_from_config(cfg: dict):
    """Declarative model: {"kind": "scalar", "gamma_minus": [...], ...} with
    polynomial coefficient lists or {"table": {"x": [...], "y": [...]}}."""
    kind = cfg.get("kind", "preset")
    if kind == "preset":
        return preset_model(cfg["name"], **cfg.get("options", {}))
    if kind == "scalar":
        kw = {}
        if "u_domain" in cfg:
            kw["u_domain"] = tuple(cfg["u_domain"])
        if "B0" in cfg:
            b0 = _callable_from_spec(cfg["B0"])
            kw["B0"] = lambda u, v: b0(u) + 0.0 * np.asarray(v, dtype=float)
        return build_scalar_model(
            _callable_from_spec(cfg["gamma_minus"]),
            _callable_from_spec(cfg["gamma_plus"]),
            _callable_from_spec(cfg["f_minus"]),
            _callable_from_spec(cfg["f_plus"]),
            name=cfg.get("name", "scalar-config"), **kw)
    if kind == "p-system":
        kw = {}
        if "tau_domain" in cfg:
            kw["tau_domain"] = tuple(cfg["tau_domain"])
        return build_p_system_model(
            _callable_from_spec(cfg["p_minus"]),
            _callable_from_spec(cfg["p_plus"]),
            name=cfg.get("name", "p-system-config"), **kw)
    raise KeyError(f"unknown model kind {kind!r}")
