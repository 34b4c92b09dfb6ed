"""Generalized eigenstructure of the self-similar first-order system.

At each (u, v, xi) the operator pencil (-xi I + A(u, v), B(u, v)) is
diagonalized: (-xi I + A) r_hat_i = mu_i B r_hat_i, with r_hat_i of unit
Euclidean norm and left covectors l_hat_i satisfying l_hat_i . (B r_hat_j) =
delta_ij.  The derived quantities lambda_hat_i = r_hat_i . A r_hat_i and
d_i = 1 / (r_hat_i . B r_hat_i) give mu_i = (-xi + lambda_hat_i) d_i exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import ModelConstructionError, SystemCouplingModel


class HyperbolicityError(ValueError):
    """Complex eigenvalues encountered; records the offending point."""

    def __init__(self, u, v, xi):
        super().__init__(f"complex eigenvalues at u={np.asarray(u)}, v={v}, xi={xi}")
        self.point = (np.asarray(u).copy(), float(v), float(xi))


# condition number of the eigenvector matrix beyond which a near-defective
# warning is attached to the result
DEFECTIVE_COND = 1e8


@dataclass(frozen=True)
class SpectralData:
    mu: np.ndarray            # (N,)
    r_hat: np.ndarray         # (N, N), row i = right eigenvector of family i
    l_hat: np.ndarray         # (N, N), row i = left covector of family i
    lambda_hat: np.ndarray    # (N,)
    d: np.ndarray             # (N,)
    residual: float
    warnings: tuple[str, ...] = ()


def _fix_signs(R: np.ndarray) -> np.ndarray:
    """Columns of R get the deterministic sign: largest-|.| component > 0."""
    R = R.copy()
    for j in range(R.shape[1]):
        k = int(np.argmax(np.abs(R[:, j])))
        if R[k, j] < 0:
            R[:, j] = -R[:, j]
    return R


def eig_decomposition(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real sorted eigenvalues of A with unit right eigenvectors (rows) and
    left covectors (rows) normalized so that l_i . r_j = delta_ij."""
    w, V = np.linalg.eig(np.asarray(A, dtype=float))
    if np.max(np.abs(w.imag)) > 1e-9 * max(1.0, np.max(np.abs(w.real))):
        raise ModelConstructionError("complex eigenvalues: loss of hyperbolicity")
    order = np.argsort(w.real)
    V = V[:, order].real
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    V = _fix_signs(V)
    L = np.linalg.inv(V)
    return w.real[order], V.T, L


def solve_generalized_eigen(model: SystemCouplingModel, u, v: float, xi: float) -> SpectralData:
    u = np.asarray(u, dtype=float)
    A = model.A(u, v)
    B = model.B(u, v)
    pencil = np.linalg.solve(B, -xi * np.eye(model.N) + A)
    w, V = np.linalg.eig(pencil)
    if np.max(np.abs(w.imag)) > 1e-9 * max(1.0, np.max(np.abs(w.real))):
        raise HyperbolicityError(u, v, xi)
    V = V.real
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    V = _fix_signs(V)

    lam_hat = np.einsum("ji,jk,ki->i", V, A, V)
    order = np.argsort(lam_hat)
    V = V[:, order]
    lam_hat = lam_hat[order]

    d = 1.0 / np.einsum("ji,jk,ki->i", V, B, V)
    mu = (-xi + lam_hat) * d
    L = np.linalg.inv(B @ V)   # rows l_hat_i: l_hat_i . (B r_hat_j) = delta_ij

    res = np.linalg.norm((-xi * np.eye(model.N) + A) @ V - (B @ V) * mu[None, :], 2)
    warnings = ()
    if np.linalg.cond(V) > DEFECTIVE_COND:
        warnings = ("near-defective eigenvector basis",)

    return SpectralData(mu=mu, r_hat=V.T.copy(), l_hat=L.copy(),
                        lambda_hat=lam_hat, d=d, residual=float(res),
                        warnings=warnings)


def align_to(reference: np.ndarray, data: SpectralData) -> SpectralData:
    """Flip eigenvector signs of ``data`` to continue ``reference`` (rows)."""
    flips = np.sign(np.einsum("ij,ij->i", reference, data.r_hat))
    flips[flips == 0] = 1.0
    if np.all(flips == 1.0):
        return data
    return SpectralData(
        mu=data.mu, r_hat=data.r_hat * flips[:, None],
        l_hat=data.l_hat * flips[:, None],
        lambda_hat=data.lambda_hat, d=data.d,
        residual=data.residual, warnings=data.warnings)


def spectral_sweep(model: SystemCouplingModel, u_of_xi, v_of_xi, xi_grid: np.ndarray) -> dict:
    """Eigendata along a xi grid with sign continuity, for fields u(xi), v(xi)
    given as arrays of shape (n, N) and (n,)."""
    n = len(xi_grid)
    U = np.asarray(u_of_xi, dtype=float).reshape(n, model.N)
    Vc = np.asarray(v_of_xi, dtype=float).reshape(n)
    mu = np.empty((n, model.N))
    lam = np.empty((n, model.N))
    d = np.empty((n, model.N))
    R = np.empty((n, model.N, model.N))
    L = np.empty((n, model.N, model.N))
    prev = None
    for k in range(n):
        data = solve_generalized_eigen(model, U[k], Vc[k], xi_grid[k])
        if prev is not None:
            data = align_to(prev, data)
        prev = data.r_hat
        mu[k], lam[k], d[k] = data.mu, data.lambda_hat, data.d
        R[k], L[k] = data.r_hat, data.l_hat
    return {"xi": xi_grid, "mu": mu, "lambda_hat": lam, "d": d, "r_hat": R, "l_hat": L}


def estimate_eta_nu(model: SystemCouplingModel, sample_count: int = 24,
                    v_step: float = 1e-5) -> tuple[float, float]:
    """eta = max sampled operator-norm distance of B from the identity;
    nu = max sampled |l_hat_i . d/dv (B r_hat_j)| by central differences."""
    pts = model.ball_samples(sample_count)
    vs = np.linspace(-1.0 + v_step, 1.0 - v_step, 9)
    xis = np.linspace(-model.M, model.M, 5)
    eye = np.eye(model.N)
    eta = 0.0
    nu = 0.0
    for u in pts:
        for v in vs:
            eta = max(eta, float(np.linalg.norm(model.B(u, v) - eye, 2)))
            for xi in xis:
                base = solve_generalized_eigen(model, u, v, xi)
                hi = align_to(base.r_hat, solve_generalized_eigen(model, u, v + v_step, xi))
                lo = align_to(base.r_hat, solve_generalized_eigen(model, u, v - v_step, xi))
                dBr = (model.B(u, v + v_step) @ hi.r_hat.T
                       - model.B(u, v - v_step) @ lo.r_hat.T) / (2.0 * v_step)
                nu = max(nu, float(np.abs(base.l_hat @ dBr).max()))
    return eta, nu


def check_xi_derivatives(model: SystemCouplingModel, u, v: float, xi: float,
                         step: float = 1e-5) -> dict:
    """Finite-difference d/dxi of r_hat and mu, with a Richardson half-step
    consistency estimate; for B = I these are 0 and -1 exactly."""
    base = solve_generalized_eigen(model, u, v, xi)

    def fd(h):
        hi = align_to(base.r_hat, solve_generalized_eigen(model, u, v, xi + h))
        lo = align_to(base.r_hat, solve_generalized_eigen(model, u, v, xi - h))
        return (hi.r_hat - lo.r_hat) / (2.0 * h), (hi.mu - lo.mu) / (2.0 * h)

    dr, dmu = fd(step)
    dr_half, dmu_half = fd(step / 2.0)
    return {
        "d_r_norm": np.linalg.norm(dr, axis=1),
        "d_mu": dmu,
        "d_mu_plus_one": np.abs(dmu + 1.0),
        "richardson_r": float(np.abs(dr - dr_half).max()),
        "richardson_mu": float(np.abs(dmu - dmu_half).max()),
        "eta": model.eta,
    }
