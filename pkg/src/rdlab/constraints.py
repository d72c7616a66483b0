"""Residual corrections restoring discrete conservation for primitive-variable
Euler schemes, plus the auxiliary entropy (pressure) correction.

Working variables are the primitives W = (rho, u, e) with e the internal
energy per unit volume, p = (gamma - 1) e.  A scheme updating W is made
conservative in (rho, rho*u, E) by adding a uniform per-element correction to
the velocity residuals first (r_u^K) and then to the energy residuals
(r_e^K), each solving the element conserved-balance equation exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleStateError, InfeasibleCorrectionError

DENSITY_TOL = 1e-12


@dataclass
class CorrectionReport:
    r_u: np.ndarray               # per-element velocity correction
    r_e: np.ndarray               # per-element energy correction
    defect_m_before: np.ndarray
    defect_m_after: np.ndarray
    defect_e_before: np.ndarray
    defect_e_after: np.ndarray


def conserved_increment_matrix(w_p, w_p1):
    """Lower-triangular matrix M with M @ (delta rho, delta u, delta e) =
    (delta rho, delta(rho u), delta E), exact for the pair of states.

    Rows: (1, 0, 0); (u_p, rho_p1, 0); (u_p^2/2, rho_p1 (u_p + u_p1)/2, 1).
    ``w_p``/``w_p1`` are primitive states (..., 3); returns (..., 3, 3).
    """
    w_p = np.asarray(w_p, dtype=float)
    w_p1 = np.asarray(w_p1, dtype=float)
    u_p = w_p[..., 1]
    u_p1 = w_p1[..., 1]
    rho_p1 = w_p1[..., 0]
    M = np.zeros(w_p.shape[:-1] + (3, 3))
    M[..., 0, 0] = 1.0
    M[..., 1, 0] = u_p
    M[..., 1, 1] = rho_p1
    M[..., 2, 0] = 0.5 * u_p * u_p
    M[..., 2, 1] = 0.5 * rho_p1 * (u_p + u_p1)
    M[..., 2, 2] = 1.0
    return M


def map_residuals_to_conserved(phi, w_p, w_p1):
    """Per-DOF conserved residuals M_sigma @ phi_sigma; phi is (#K, 3)."""
    M = conserved_increment_matrix(w_p, w_p1)
    return np.einsum("...ij,...j->...i", M, np.asarray(phi, dtype=float))


def velocity_correction(phi_rho, phi_u, rho_p1, u_p, target_m):
    """Uniform velocity-residual correction closing the momentum balance.

    Solves sum_sigma [rho_p1 (phi_u + r_u) + u_p phi_rho] = target_m for the
    scalar r_u; density residuals are final and stay untouched.
    """
    rho_p1 = np.asarray(rho_p1, dtype=float)
    denom = rho_p1.sum()
    if denom < DENSITY_TOL:
        raise InadmissibleStateError(f"element density sum {denom}")
    current = float(np.sum(rho_p1 * phi_u + np.asarray(u_p) * phi_rho))
    return (float(target_m) - current) / denom


def energy_correction(phi_rho, phi_u, phi_e, w_p, w_p1, target_e):
    """Uniform energy-residual correction closing the total-energy balance.

    ``phi_u`` must already contain the velocity correction.  The mapped
    energy residual of DOF sigma is the third row of the increment matrix
    applied to (phi_rho, phi_u, phi_e)_sigma.
    """
    phi = np.stack([phi_rho, phi_u, phi_e], axis=-1)
    mapped = map_residuals_to_conserved(phi, w_p, w_p1)[..., 2]
    n = mapped.shape[0]
    return (float(target_e) - float(mapped.sum())) / n


def divided_difference_rho_kappa(rho_p, rho_p1, kappa):
    """Divided difference of rho -> rho^(-kappa) between two iterates.

    At coincidence the derivative branch -kappa * rho_p^(-(kappa+1)) is used.
    """
    rho_p = np.asarray(rho_p, dtype=float)
    rho_p1 = np.asarray(rho_p1, dtype=float)
    same = rho_p1 == rho_p
    denom = np.where(same, 1.0, rho_p1 - rho_p)
    dd = (rho_p1 ** (-kappa) - rho_p ** (-kappa)) / denom
    deriv = -kappa * rho_p ** (-(kappa + 1.0))
    out = np.where(same, deriv, dd)
    return out if out.ndim else float(out)


def entropy_pressure_correction(rho_p, kappa, E1, E2, tol=1e-11):
    """Minimum-norm pressure corrections (r_p)_sigma satisfying

        sum_sigma (r_p)_sigma = E1
        sum_sigma rho_sigma^(-kappa) (r_p)_sigma = E2.

    Raises an infeasibility error when the two rows are linearly dependent
    (uniform density) and the data are incompatible.
    """
    rho_p = np.asarray(rho_p, dtype=float)
    n = rho_p.shape[0]
    A = np.vstack([np.ones(n), rho_p ** (-kappa)])
    b = np.array([float(E1), float(E2)], dtype=float)
    r, *_ = np.linalg.lstsq(A, b, rcond=None)
    defect = np.abs(A @ r - b)
    scale = 1.0 + np.abs(b)
    if np.any(defect > tol * scale):
        raise InfeasibleCorrectionError(
            "entropy correction constraints are incompatible; "
            f"row defects {defect.tolist()}"
        )
    return r
