"""Deferred-correction time stepping with a lumped mass pairing.

The pairing <<u, v>> lumps each element with the weight C_K = |K|/#K, so no
mass matrix is inverted.  Each correction sweep solves

    <<u^(p+1), v>> = <<u^(p), v>> - <u^(p) - u^n, v> - dt * A(u^(p), v),

where <., .> is the consistent pairing and A collects the space residuals of
the chosen time-average.  Two averages are built: the frozen flux at t_n
(forward Euler, one sweep) and the arithmetic average of t_n and t_{n+1}
(Crank-Nicholson, two sweeps for second order).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class DecConfig:
    method: str = "cn"          # "euler" (weights 1,0) or "cn" (1/2,1/2)
    iterations: int | None = None
    cfl: float = 0.3

    def __post_init__(self):
        if self.method not in ("euler", "cn"):
            raise ValueError(f"unknown time method {self.method!r}")
        if self.iterations is None:
            self.iterations = 1 if self.method == "euler" else 2
        if self.iterations < 1:
            raise ValueError("iteration count must be >= 1")

    @property
    def weights(self):
        return (1.0, 0.0) if self.method == "euler" else (0.5, 0.5)


def lumped_mass(disc):
    """Per-DOF lumped mass and per-element C_K = |K|/#K."""
    C = disc.measure / disc.nloc
    mass = np.zeros(disc.dofmap.n_dofs)
    for e in range(disc.mesh.n_elements):
        mass[disc.dofmap.element_dofs[e]] += C[e]
    return mass, C


def element_mass_matrix(disc, e):
    """Consistent element mass matrix int_K phi_i phi_j."""
    phi = disc.vq_phi
    w = disc.vq_w * disc.measure[e]
    return np.einsum("q,qi,qj->ij", w, phi, phi)


def mass_apply(disc, w):
    """Consistent mass action <w, phi_sigma> for a DOF field w (ndof, m)."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] != disc.dofmap.n_dofs:
        w = w.T
    out = np.zeros_like(w)
    for e in range(disc.mesh.n_elements):
        dofs = disc.dofmap.element_dofs[e]
        Me = element_mass_matrix(disc, e)
        out[dofs] += Me @ w[dofs]
    return out


def time_flux_average(states, weights, law, n):
    """Weighted average of the normal flux over sub-time states."""
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"time weights must sum to 1, got {weights.sum()}")
    out = None
    for w, u in zip(weights, states):
        fn = np.einsum("...dm,d->...m", law.flux(np.asarray(u, dtype=float)), n)
        out = w * fn if out is None else out + w * fn
    return out


def stable_dt(disc, u, cfl):
    """CFL time step from the smallest element and largest wave speed."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[0] != disc.dofmap.n_dofs:
        u = u.T
    speed = 0.0
    for k in range(disc.mesh.dim):
        n = np.zeros(disc.mesh.dim)
        n[k] = 1.0
        speed = max(speed, float(np.max(disc.law.max_wave_speed(u, n))))
    speed *= np.sqrt(disc.mesh.dim)
    if speed <= 0.0:
        return np.inf
    if disc.mesh.dim == 1:
        hmin = float(disc.measure.min())
    else:
        hmin = float((2.0 * disc.measure / disc.diameter).min())
    return cfl * hmin / speed


def _residual(disc, u, scheme, u_b):
    R, _ = disc.assemble(u, scheme, u_b)
    return R


def dec_step(disc, u_n, dt, scheme, config, u_b=None, mass=None):
    """One time slab of the deferred-correction iteration."""
    if mass is None:
        mass, _ = lumped_mass(disc)
    u_n = np.asarray(u_n, dtype=float)
    dtmax = stable_dt(disc, u_n, config.cfl)
    if dt > dtmax * (1.0 + 1e-12):
        warnings.warn(
            f"time step {dt} exceeds the CFL bound {dtmax}", RuntimeWarning
        )
    w0, w1 = config.weights
    R_n = _residual(disc, u_n, scheme, u_b)
    if config.method == "euler" and config.iterations == 1:
        return u_n - dt * R_n / mass[:, None]
    u_p = u_n
    for _ in range(config.iterations):
        R_p = _residual(disc, u_p, scheme, u_b)
        A = dt * (w0 * R_n + w1 * R_p)
        rhs = mass[:, None] * u_p - mass_apply(disc, u_p - u_n) - A
        u_p = rhs / mass[:, None]
    return u_p


def dec_run(disc, u0, t_end, scheme, config, u_b=None, dt=None, log=None):
    """March to ``t_end``; returns (final state, times list).

    ``log``, if given, is called after each step with
    (t, u, total lumped mass per component, residual infinity norm).
    """
    mass, _ = lumped_mass(disc)
    u = np.array(u0, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    t = 0.0
    times = [0.0]
    while t < t_end - 1e-14:
        step = dt if dt is not None else stable_dt(disc, u, config.cfl)
        step = min(step, t_end - t)
        u = dec_step(disc, u, step, scheme, config, u_b=u_b, mass=mass)
        t += step
        times.append(t)
        if log is not None:
            R = _residual(disc, u, scheme, u_b)
            log(t, u, mass @ u, float(np.abs(R).max()))
    return u, times
