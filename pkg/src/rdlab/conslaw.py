"""Conservation law descriptors: fluxes, Jacobian actions, entropy pairs.

States are numpy arrays of shape (..., m). ``flux`` returns (..., d, m) and
``jac_n`` the m-by-m matrix of the normal-flux Jacobian, shape (..., m, m).
"""

from __future__ import annotations

import numpy as np

from .errors import InadmissibleStateError

ADMISSIBLE_TOL = 1e-12


class ConservationLaw:
    """Base descriptor; subclasses set ``m`` (components) and ``dim``."""

    m = 1
    dim = 1
    name = "abstract"
    has_entropy = False

    def flux(self, u):
        raise NotImplementedError

    def jac_n(self, u, n):
        raise NotImplementedError

    def max_wave_speed(self, u, n):
        """Spectral radius of the normal Jacobian, vectorised over states."""
        a = self.jac_n(u, n)
        if self.m == 1:
            return np.abs(a[..., 0, 0])
        return np.abs(np.linalg.eigvals(a)).max(axis=-1)

    # entropy pair interface (scalar laws with the square entropy)
    def entropy(self, u):
        raise NotImplementedError

    def entropy_var(self, u):
        raise NotImplementedError

    def entropy_flux(self, u):
        raise NotImplementedError


class Advection(ConservationLaw):
    """Linear transport with constant speed vector ``a``."""

    has_entropy = True

    def __init__(self, a):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.dim = self.a.shape[0]
        self.name = "advection"

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        return self.a.reshape((1,) * (u.ndim - 1) + (self.dim, 1)) * u[..., None, :]

    def jac_n(self, u, n):
        u = np.asarray(u, dtype=float)
        an = float(np.dot(self.a, n))
        return np.full(u.shape[:-1] + (1, 1), an)

    def entropy(self, u):
        return 0.5 * np.asarray(u)[..., 0] ** 2

    def entropy_var(self, u):
        return np.asarray(u, dtype=float).copy()

    def entropy_flux(self, u):
        e = self.entropy(u)
        return self.a * e[..., None]


class Burgers(ConservationLaw):
    """f(u) = u^2/2 along a fixed direction (default the x axis in 2D)."""

    has_entropy = True

    def __init__(self, dim=1, direction=None):
        self.dim = dim
        if direction is None:
            direction = np.zeros(dim)
            direction[0] = 1.0
        self.d = np.asarray(direction, dtype=float)
        self.name = "burgers"

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        f = 0.5 * u[..., 0] ** 2
        return self.d.reshape((1,) * (u.ndim - 1) + (self.dim, 1)) * f[..., None, None]

    def jac_n(self, u, n):
        u = np.asarray(u, dtype=float)
        dn = float(np.dot(self.d, n))
        return (u[..., 0] * dn)[..., None, None]

    def entropy(self, u):
        return 0.5 * np.asarray(u)[..., 0] ** 2

    def entropy_var(self, u):
        return np.asarray(u, dtype=float).copy()

    def entropy_flux(self, u):
        g = np.asarray(u)[..., 0] ** 3 / 3.0
        return self.d * g[..., None]


class CubicTransport(ConservationLaw):
    """The v-form of Burgers under u = v^3: flux v^4/4, 1D only."""

    def __init__(self):
        self.name = "cubic"

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        return (0.25 * u[..., 0] ** 4)[..., None, None]

    def jac_n(self, u, n):
        u = np.asarray(u, dtype=float)
        return (u[..., 0] ** 3 * float(n[0]))[..., None, None]


def burgers_flux(u):
    return 0.5 * np.asarray(u, dtype=float) ** 2


def entropy_pair_burgers(u):
    """Square-entropy quadruple (E, v, theta, g) for 1D Burgers."""
    u = np.asarray(u, dtype=float)
    E = 0.5 * u**2
    v = u
    theta = v**3 / 6.0
    g = u**3 / 3.0
    return E, v, theta, g


def rh_shock_speed(uL, uR, law):
    """Jump speed (f(uR)-f(uL))/(uR-uL); characteristic speed if uL == uR."""
    uL = np.atleast_1d(np.asarray(uL, dtype=float))
    uR = np.atleast_1d(np.asarray(uR, dtype=float))
    n = np.zeros(law.dim)
    n[0] = 1.0
    if np.array_equal(uL, uR):
        return float(law.jac_n(uL, n)[0, 0])
    fL = law.flux(uL)[0]  # first spatial direction
    fR = law.flux(uR)[0]
    return float((fR[0] - fL[0]) / (uR[0] - uL[0]))


# ---------------------------------------------------------------------------
# compressible Euler (perfect gas)


def _check_admissible(rho, p):
    rho = np.asarray(rho)
    p = np.asarray(p)
    if np.any(rho < ADMISSIBLE_TOL) or np.any(p < ADMISSIBLE_TOL):
        raise InadmissibleStateError(
            f"min density {rho.min()}, min pressure {p.min()}"
        )


def primitive_from_conserved(u, gamma=1.4):
    """(rho, m, E) -> (rho, v, p); vectorised over leading axes."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1] - 2
    rho = u[..., 0]
    if np.any(rho < ADMISSIBLE_TOL):
        raise InadmissibleStateError(f"min density {rho.min()}")
    v = u[..., 1 : 1 + d] / rho[..., None]
    ke = 0.5 * rho * np.sum(v * v, axis=-1)
    p = (gamma - 1.0) * (u[..., -1] - ke)
    _check_admissible(rho, p)
    out = np.empty_like(u)
    out[..., 0] = rho
    out[..., 1 : 1 + d] = v
    out[..., -1] = p
    return out


def conserved_from_primitive(w, gamma=1.4):
    """(rho, v, p) -> (rho, m, E)."""
    w = np.asarray(w, dtype=float)
    d = w.shape[-1] - 2
    rho, p = w[..., 0], w[..., -1]
    _check_admissible(rho, p)
    v = w[..., 1 : 1 + d]
    out = np.empty_like(w)
    out[..., 0] = rho
    out[..., 1 : 1 + d] = rho[..., None] * v
    out[..., -1] = p / (gamma - 1.0) + 0.5 * rho * np.sum(v * v, axis=-1)
    return out


def euler_flux(u, gamma=1.4):
    """Flux tensor of conserved Euler state(s), shape (..., d, m)."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1] - 2
    w = primitive_from_conserved(u, gamma)
    rho, v, p = w[..., 0], w[..., 1 : 1 + d], w[..., -1]
    E = u[..., -1]
    f = np.zeros(u.shape[:-1] + (d, u.shape[-1]))
    for k in range(d):
        f[..., k, 0] = rho * v[..., k]
        for i in range(d):
            f[..., k, 1 + i] = rho * v[..., k] * v[..., i]
        f[..., k, 1 + k] += p
        f[..., k, -1] = v[..., k] * (E + p)
    return f


def sound_speed(rho, p, gamma=1.4):
    _check_admissible(rho, p)
    return np.sqrt(gamma * np.asarray(p) / np.asarray(rho))


class Euler(ConservationLaw):
    """Conserved-variable perfect-gas Euler system in ``dim`` dimensions."""

    def __init__(self, gamma=1.4, dim=2):
        self.gamma = float(gamma)
        self.dim = dim
        self.m = dim + 2
        self.name = "euler"

    def flux(self, u):
        return euler_flux(u, self.gamma)

    def jac_n(self, u, n):
        u = np.asarray(u, dtype=float)
        d = self.dim
        g = self.gamma
        k = g - 1.0
        w = primitive_from_conserved(u, g)
        rho, v, p = w[..., 0], w[..., 1 : 1 + d], w[..., -1]
        n = np.asarray(n, dtype=float)
        vn = np.sum(v * n, axis=-1)
        q2 = np.sum(v * v, axis=-1)
        H = (u[..., -1] + p) / rho
        A = np.zeros(u.shape[:-1] + (self.m, self.m))
        A[..., 0, 1 : 1 + d] = n
        for i in range(d):
            A[..., 1 + i, 0] = 0.5 * k * q2 * n[i] - v[..., i] * vn
            for j in range(d):
                A[..., 1 + i, 1 + j] = v[..., i] * n[j] - k * v[..., j] * n[i]
            A[..., 1 + i, 1 + i] += vn
            A[..., 1 + i, -1] = k * n[i]
        A[..., -1, 0] = (0.5 * k * q2 - H) * vn
        A[..., -1, 1 : 1 + d] = H[..., None] * n - k * v * vn[..., None]
        A[..., -1, -1] = g * vn
        return A

    def max_wave_speed(self, u, n):
        w = primitive_from_conserved(np.asarray(u, dtype=float), self.gamma)
        d = self.dim
        vn = np.sum(w[..., 1 : 1 + d] * np.asarray(n), axis=-1)
        a = sound_speed(w[..., 0], w[..., -1], self.gamma)
        return np.abs(vn) + a * float(np.linalg.norm(n))


# ---------------------------------------------------------------------------
# name-based construction for config files


def make_law(spec, dim=None):
    """Build a law from a config string such as ``advection(1,0.5)``."""
    spec = spec.strip()
    args = []
    name = spec
    if "(" in spec:
        if not spec.endswith(")"):
            raise ValueError(f"malformed law spec: {spec!r}")
        name, rest = spec.split("(", 1)
        body = rest[:-1].strip()
        if body:
            args = [float(t) for t in body.split(",")]
    name = name.strip().lower()
    if name == "burgers":
        return Burgers(dim=dim or 1)
    if name == "cubic":
        return CubicTransport()
    if name == "advection":
        if not args:
            args = [1.0] if (dim or 1) == 1 else [1.0, 0.0]
        return Advection(args)
    if name == "euler":
        gamma = args[0] if args else 1.4
        return Euler(gamma=gamma, dim=dim or 2)
    raise ValueError(f"unknown conservation law: {name!r}")
