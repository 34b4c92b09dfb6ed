"""Small-system self-similar viscous Riemann solver.

The state derivative is decomposed in the generalized eigenbasis,
A0 u_xi = sum_j a_j r_hat_j, and each characteristic coefficient is written as
a_i = tau_i phi*_i + theta_i: a wave strength times the fundamental measure of
its family plus a small correction.  The solve is a three-level fixed point:

  1. correction: theta = T(u, tau, theta), a contraction in the weighted
     sup-norm ||theta|| = sum_k sup |theta_k| / sum_h phi*_h;
  2. strength:   tau such that the reconstructed profile hits u(M) = u_R,
     solved by a frozen-Jacobian Newton iteration on the strength matrix;
  3. state:      outer Picard iteration on u itself (the eigenfields are
     frozen at the current iterate during the two inner solves).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .color import ColorProfile
from .grid import GridFunction, default_grid_size, uniform_grid
from .measures import WaveMeasureSet, build_phi_star
from .models import SystemCouplingModel
from .quadrature import weighted_transfer
from .spectral import align_to, solve_generalized_eigen

PHI_SUM_FLOOR = 1e-300


class SmallnessViolation(RuntimeError):
    """Data or iterate outside the regime where the contractions are valid."""


class ContractionFailure(RuntimeError):
    def __init__(self, stage: str, estimate: float):
        super().__init__(f"{stage}: measured contraction factor {estimate:.3f} >= 1")
        self.stage = stage
        self.estimate = estimate


class EnvelopeViolation(RuntimeError):
    def __init__(self, k: int, xi: float, ratio: float):
        super().__init__(
            f"correction component {k + 1} exceeds its admissible envelope "
            f"at xi={xi:.4f} (ratio {ratio:.3f})")
        self.family = k
        self.xi = xi


@dataclass(frozen=True)
class SystemSolveConfig:
    eps: float
    p: float = 1.0
    M: float | None = None
    grid_size: int | None = None
    fix_tol: float = 1e-12
    max_iters: int = 400
    strength_tol: float = 1e-9
    strength_max_iters: int = 60
    outer_tol: float = 1e-8
    outer_max_iters: int = 40
    relaxation: float = 1.0
    envelope_constant: float | None = None  # fitted from a probe when None
    u_step_scale: float = 1e-5  # x delta0 for state-direction differences
    v_step: float = 1e-5
    xi_step: float = 1e-5

    def __post_init__(self):
        if self.eps <= 0 or self.p <= 0:
            raise ValueError("eps and p must be positive")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")


@dataclass(frozen=True)
class CoefficientFields:
    """Grid samples of the eigenstructure and the interaction coefficients.

    ``eta_pi[i, j] = -l_hat_i . (B d_xi r_hat_j)`` stores the product
    eta * pi_ij directly, so that models with B = I (eta = 0) carry a clean
    zero instead of a 0/0 normalization.
    """

    xi: np.ndarray
    psi: np.ndarray           # (n,)
    mu: np.ndarray            # (n, N)
    lambda_hat: np.ndarray    # (n, N)
    d: np.ndarray             # (n, N)
    r_hat: np.ndarray         # (n, N, N), [point, family, component]
    l_hat: np.ndarray         # (n, N, N)
    eta_pi: np.ndarray        # (n, N, N)
    kappa: np.ndarray         # (n, N, N, N)
    sigma: np.ndarray         # (n, N, N)
    A0_inv: np.ndarray        # (n, N, N)

    @property
    def N(self) -> int:
        return self.mu.shape[1]

    def pi(self, eta: float) -> np.ndarray | None:
        """pi itself, defined only when eta > 0."""
        if eta <= 0:
            return None
        return self.eta_pi / eta


def assemble_coefficients(model: SystemCouplingModel, U: np.ndarray,
                          v: np.ndarray, xi: np.ndarray, psi: np.ndarray,
                          config: SystemSolveConfig) -> CoefficientFields:
    """Pointwise eigendata plus the central-difference coefficients of the
    characteristic ODE system, sign-matched along the grid."""
    n = len(xi)
    N = model.N
    U = np.asarray(U, dtype=float).reshape(n, N)
    hu = config.u_step_scale * model.delta0
    hv = config.v_step
    hx = config.xi_step

    mu = np.empty((n, N))
    lam = np.empty((n, N))
    dd = np.empty((n, N))
    R = np.empty((n, N, N))
    L = np.empty((n, N, N))
    eta_pi = np.empty((n, N, N))
    kappa = np.empty((n, N, N, N))
    sigma = np.empty((n, N, N))
    A0_inv = np.empty((n, N, N))

    prev = None
    for k in range(n):
        u, vk, x = U[k], float(v[k]), float(xi[k])
        base = solve_generalized_eigen(model, u, vk, x)
        if prev is not None:
            base = align_to(prev, base)
        prev = base.r_hat
        mu[k], lam[k], dd[k] = base.mu, base.lambda_hat, base.d
        R[k], L[k] = base.r_hat, base.l_hat
        A0_inv[k] = np.linalg.inv(np.asarray(model.A0(u, vk), dtype=float))
        B = model.B(u, vk)
        rcols = base.r_hat.T  # columns are r_hat_j

        # partial d/dxi of the eigenvectors at fixed (u, v)
        hi = align_to(base.r_hat, solve_generalized_eigen(model, u, vk, x + hx))
        lo = align_to(base.r_hat, solve_generalized_eigen(model, u, vk, x - hx))
        dxi_r = (hi.r_hat.T - lo.r_hat.T) / (2.0 * hx)
        eta_pi[k] = -(base.l_hat @ (B @ dxi_r))

        # directional state derivatives of B r_hat_j
        DBr = np.empty((N, N, N))  # [component, family j, direction m]
        for m in range(N):
            e = np.zeros(N)
            e[m] = hu
            hi = align_to(base.r_hat, solve_generalized_eigen(model, u + e, vk, x))
            lo = align_to(base.r_hat, solve_generalized_eigen(model, u - e, vk, x))
            DBr[:, :, m] = (model.B(u + e, vk) @ hi.r_hat.T
                            - model.B(u - e, vk) @ lo.r_hat.T) / (2.0 * hu)
        w = A0_inv[k] @ rcols  # columns A0^{-1} r_hat_k
        # kappa[i, j, l] = - l_i . (D_u(B r_j) A0^{-1} r_l)
        kappa[k] = -np.einsum("ia,ajm,ml->ijl", base.l_hat, DBr, w)

        # color derivative of B r_hat_j
        hi = align_to(base.r_hat, solve_generalized_eigen(model, u, vk + hv, x))
        lo = align_to(base.r_hat, solve_generalized_eigen(model, u, vk - hv, x))
        dv_Br = (model.B(u, vk + hv) @ hi.r_hat.T
                 - model.B(u, vk - hv) @ lo.r_hat.T) / (2.0 * hv)
        sigma[k] = base.l_hat @ dv_Br

    return CoefficientFields(xi=xi, psi=np.asarray(psi, dtype=float),
                             mu=mu, lambda_hat=lam, d=dd, r_hat=R, l_hat=L,
                             eta_pi=eta_pi, kappa=kappa, sigma=sigma,
                             A0_inv=A0_inv)


def build_measures(model: SystemCouplingModel, coeffs: CoefficientFields,
                   eps: float) -> WaveMeasureSet:
    return build_phi_star(coeffs.xi, coeffs.mu, eps, model.lam_low, model.lam_high)


def weighted_norm(theta: np.ndarray, measures: WaveMeasureSet) -> float:
    """E-norm: sum over families of sup |theta_k| / sum_h phi*_h."""
    denom = np.maximum(measures.phi_sum(), PHI_SUM_FLOOR)
    return float(np.sum(np.max(np.abs(theta) / denom[:, None], axis=0)))


def envelope_bound(tau: np.ndarray, eta: float, nu: float, A: float) -> float:
    t = float(np.linalg.norm(tau))
    return A * (eta * t + t * t + nu * t)


def envelope_ratio(theta: np.ndarray, measures: WaveMeasureSet) -> np.ndarray:
    """Per-point, per-family ratio |theta_k| / sum_h phi*_h."""
    denom = np.maximum(measures.phi_sum(), PHI_SUM_FLOOR)
    return np.abs(theta) / denom[:, None]


def correction_map(measures: WaveMeasureSet, coeffs: CoefficientFields,
                   tau: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """One application of the correction map T(u, tau, theta)."""
    a = tau[None, :] * measures.phi + theta
    source = (np.einsum("nkj,nj->nk", coeffs.eta_pi, a)
              + np.einsum("nkjl,nj,nl->nk", coeffs.kappa, a, a)
              + np.einsum("nkj,nj->nk", coeffs.sigma, a) * coeffs.psi[:, None])
    out = np.empty_like(theta)
    for k in range(measures.N):
        out[:, k] = weighted_transfer(measures.log_phi[:, k], source[:, k],
                                      measures.xi, int(measures.c_index[k]))
    return out


def fit_envelope_constant(measures: WaveMeasureSet, coeffs: CoefficientFields,
                          tau: np.ndarray, eta: float, nu: float) -> float:
    """A = 4 x the envelope ratio measured on one probe application at
    theta = 0 (with a floor for degenerate probes)."""
    t = float(np.linalg.norm(tau))
    scale = eta * t + t * t + nu * t
    if scale <= 0:
        return 1.0
    probe = correction_map(measures, coeffs, tau, np.zeros_like(measures.phi))
    c_fit = float(envelope_ratio(probe, measures).max()) / scale
    return max(4.0 * c_fit, 1e-6)


def solve_correction(measures: WaveMeasureSet, coeffs: CoefficientFields,
                     tau: np.ndarray, eta: float, nu: float, A: float,
                     fix_tol: float = 1e-12, max_iters: int = 400,
                     ) -> tuple[np.ndarray, int, float]:
    """Picard iteration of the correction map from theta = 0; returns
    (theta, iterations, measured contraction factor)."""
    theta = np.zeros_like(measures.phi)
    bound = envelope_bound(tau, eta, nu, A)
    alpha = 0.0
    prev_update = None
    for it in range(1, max_iters + 1):
        new = correction_map(measures, coeffs, tau, theta)
        update = weighted_norm(new - theta, measures)
        if prev_update is not None and prev_update > 0:
            alpha = max(alpha, update / prev_update)
            if it > 3 and update / prev_update >= 1.0:
                raise ContractionFailure("correction map", update / prev_update)
        prev_update = update
        theta = new
        if update <= fix_tol * max(float(np.linalg.norm(tau)), 1.0):
            break
    else:
        raise ContractionFailure("correction map (no convergence)", alpha)

    ratio = envelope_ratio(theta, measures)
    worst = float(ratio.max())
    if worst > bound * (1.0 + 1e-9) + 1e-15:
        flat = int(np.argmax(ratio))
        n_idx, k_idx = np.unravel_index(flat, ratio.shape)
        raise EnvelopeViolation(int(k_idx), float(measures.xi[n_idx]),
                                worst / max(bound, 1e-300))
    return theta, it, alpha


def strength_matrix(measures: WaveMeasureSet, coeffs: CoefficientFields,
                    weight_A0_inv: bool = False) -> tuple[np.ndarray, float]:
    """Matrix with k-th column int phi*_k r_hat_k dxi (optionally with the
    A0^{-1} weight used by the boundary-matching Newton update); returns the
    matrix and the norm beta of its inverse."""
    N = measures.N
    C = np.empty((N, N))
    for k in range(N):
        cols = coeffs.r_hat[:, k, :]  # (n, N)
        if weight_A0_inv:
            cols = np.einsum("nab,nb->na", coeffs.A0_inv, cols)
        C[:, k] = np.trapezoid(measures.phi[:, k][:, None] * cols, measures.xi, axis=0)
    if abs(np.linalg.det(C)) < 1e-12:
        raise SmallnessViolation("strength matrix singular to tolerance; "
                                 "band separation insufficient")
    beta = float(np.linalg.norm(np.linalg.inv(C), 2))
    return C, beta


def reconstruct_u(measures: WaveMeasureSet, coeffs: CoefficientFields,
                  a: np.ndarray, u_left: np.ndarray) -> np.ndarray:
    """Integrate A0 u_xi = sum_j a_j r_hat_j from u(-M) = u_left."""
    s = np.einsum("nj,njb->nb", a, coeffs.r_hat)
    du = np.einsum("nab,nb->na", coeffs.A0_inv, s)
    return u_left[None, :] + GridFunction(measures.xi, du).cumtrapz().values


def solve_strength(measures: WaveMeasureSet, coeffs: CoefficientFields,
                   u_left: np.ndarray, u_right: np.ndarray,
                   eta: float, nu: float, A: float, delta: float,
                   config: SystemSolveConfig,
                   ) -> tuple[np.ndarray, np.ndarray, dict]:
    """Newton iteration (frozen Jacobian = strength matrix) on the boundary
    condition u(M) = u_R; returns (tau, theta, info)."""
    Ct, _ = strength_matrix(measures, coeffs, weight_A0_inv=True)
    Ct_inv = np.linalg.inv(Ct)
    jump = u_right - u_left

    tau = Ct_inv @ jump
    alphas = []
    theta = np.zeros_like(measures.phi)
    for it in range(1, config.strength_max_iters + 1):
        if np.linalg.norm(tau) > delta * (1.0 + 1e-9):
            raise SmallnessViolation(
                f"strength |tau|={np.linalg.norm(tau):.3e} escaped the "
                f"admissible ball of radius {delta:.3e}")
        theta, _, alpha = solve_correction(measures, coeffs, tau, eta, nu, A,
                                           config.fix_tol, config.max_iters)
        alphas.append(alpha)
        a = tau[None, :] * measures.phi + theta
        u_end = reconstruct_u(measures, coeffs, a, u_left)[-1]
        res = u_right - u_end
        if np.linalg.norm(res) <= config.strength_tol:
            break
        tau = tau + Ct_inv @ res
    else:
        raise ContractionFailure("strength solve (no convergence)",
                                 float(np.linalg.norm(res)))
    return tau, theta, {"iterations": it, "correction_alphas": alphas,
                        "residual": float(np.linalg.norm(res))}


@dataclass(frozen=True)
class SystemSolveState:
    u: GridFunction
    v: GridFunction
    tau: np.ndarray
    theta: np.ndarray
    a: np.ndarray
    measures: WaveMeasureSet
    coefficients: CoefficientFields
    weighted_norm_theta: float
    boundary_residual: float
    outer_iterations: int
    outer_residual: float
    tv_u: float
    sup_eps_du: float
    beta: float
    envelope_constant: float
    delta: float
    contraction_estimates: tuple[float, ...]
    eps: float
    u_left: np.ndarray = field(default=None)
    u_right: np.ndarray = field(default=None)


def admissible_jump_radius(model: SystemCouplingModel, delta: float) -> float:
    A0_norm = float(np.linalg.norm(model.A0(model.u_ref, 0.0), 2))
    return delta / (2.0 * A0_norm)


def solve_system(model: SystemCouplingModel, config: SystemSolveConfig,
                 u_left, u_right) -> SystemSolveState:
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    if not (model.in_ball(u_left) and model.in_ball(u_right)):
        raise SmallnessViolation("Riemann data outside the model state ball")

    delta = model.delta0 / 4.0
    r = admissible_jump_radius(model, delta)
    jump = float(np.linalg.norm(u_right - u_left))
    if jump > r:
        raise SmallnessViolation(
            f"|u_R - u_L| = {jump:.3e} exceeds the admissible radius {r:.3e}")

    M = config.M if config.M is not None else model.M
    n = config.grid_size if config.grid_size is not None else default_grid_size(M, config.eps)
    xi = uniform_grid(M, n)
    profile = ColorProfile(config.eps, config.p, M)
    v = profile.evaluate_v(xi)
    psi = profile.evaluate_psi(xi)

    blend = (v[:, None] + 1.0) / 2.0
    U = u_left[None, :] + (u_right - u_left)[None, :] * blend

    eta, nu = model.eta, model.nu
    A = config.envelope_constant
    outer_res = 0.0
    alphas: list[float] = []
    scale = max(jump, 1.0)

    for outer in range(1, config.outer_max_iters + 1):
        coeffs = assemble_coefficients(model, U, v, xi, psi, config)
        measures = build_measures(model, coeffs, config.eps)
        if A is None:
            Ct, _ = strength_matrix(measures, coeffs, weight_A0_inv=True)
            tau0 = np.linalg.solve(Ct, u_right - u_left)
            A = fit_envelope_constant(measures, coeffs, tau0, eta, nu)
        tau, theta, info = solve_strength(measures, coeffs, u_left, u_right,
                                          eta, nu, A, delta, config)
        alphas.extend(info["correction_alphas"])
        a = tau[None, :] * measures.phi + theta
        U_new = reconstruct_u(measures, coeffs, a, u_left)
        outer_res = float(np.abs(U_new - U).max()) / scale
        U = (1.0 - config.relaxation) * U + config.relaxation * U_new
        if outer_res <= config.outer_tol:
            U = U_new
            break
    else:
        raise ContractionFailure("outer state iteration (no convergence)", outer_res)

    for row in U:
        if not model.in_ball(row, slack=1e-6):
            raise SmallnessViolation("converged profile leaves the state ball")

    u_fn = GridFunction(xi, U)
    du = np.gradient(U, xi, axis=0)
    _, beta = strength_matrix(measures, coeffs)
    return SystemSolveState(
        u=u_fn, v=GridFunction(xi, v),
        tau=tau, theta=theta, a=a,
        measures=measures, coefficients=coeffs,
        weighted_norm_theta=weighted_norm(theta, measures),
        boundary_residual=float(np.linalg.norm(U[-1] - u_right)),
        outer_iterations=outer, outer_residual=outer_res,
        tv_u=u_fn.tv(),
        sup_eps_du=float(config.eps * np.linalg.norm(du, axis=1).max()),
        beta=beta, envelope_constant=float(A), delta=delta,
        contraction_estimates=tuple(alphas),
        eps=config.eps, u_left=u_left, u_right=u_right,
    )
