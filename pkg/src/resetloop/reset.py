"""Reset elements and their sinusoidal-input frequency-domain engine.

A reset element is a linear filter whose leading ("resetting") states are
multiplied by per-state factors gamma_i whenever the driving error signal
crosses zero.  The jump injects nonlinearity: under a unit sinusoid the
steady-state output contains the excitation frequency plus odd harmonics.
This module computes those complex harmonic gains in closed form:

* ``describing_function`` gives the first-harmonic gain, the quantity used
  for loop shaping;
* ``hosidf`` gives the gain of the n-th output harmonic (exactly zero for
  even n);
* ``harmonic_spectrum`` stacks both for n = 1, 3, 5, ...

Everything is a pure function of immutable inputs; per-frequency
evaluations are independent and may run in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .lti import (
    SingularFrequencyError,
    StateSpace,
    TransferFunction,
    tf_to_ss,
)

_HURWITZ_TOL = 1e-9
_COND_LIMIT = 1e14


class ResetSystem:
    """State-space filter with a diagonal reset map on its leading states.

    The base flow is ``xdot = A x + B e``, ``y = C x + D e``; whenever the
    input e crosses zero the first ``n_r`` states jump to ``gamma_i * x_i``
    while the remaining states are untouched.  ``gamma_i = 1`` means no
    reset, ``gamma_i = 0`` a full reset to zero.

    The base A must be Hurwitz unless ``allow_marginal`` is set (the
    resetting integrator has A = 0; the jumps themselves keep it bounded).
    """

    def __init__(self, base: StateSpace, n_r: int, gamma, allow_marginal=False):
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        if not (0 <= n_r <= base.order):
            raise ValueError(f"n_r must lie in [0, {base.order}], got {n_r}")
        if gamma.shape != (n_r,):
            raise ValueError(f"gamma must have length n_r = {n_r}")
        if np.any(gamma < -1.0) or np.any(gamma > 1.0):
            raise ValueError("each gamma_i must lie in [-1, 1]")
        re = np.real(np.linalg.eigvals(base.A)) if base.order else np.array([])
        if np.any(re > _HURWITZ_TOL):
            raise ValueError("base A has eigenvalues in the open right half plane")
        if np.any(np.abs(re) <= _HURWITZ_TOL) and not allow_marginal:
            raise ValueError("base A is marginal; pass allow_marginal=True if intended")
        gamma.setflags(write=False)
        self.base = base
        self.n_r = int(n_r)
        self.gamma = gamma
        self.allow_marginal = bool(allow_marginal)

    @property
    def order(self):
        return self.base.order

    @property
    def is_linear(self):
        return self.n_r == 0 or bool(np.all(self.gamma == 1.0))

    def reset_matrix(self):
        """Full jump map: blockdiag(diag(gamma), I)."""
        d = np.ones(self.order)
        d[: self.n_r] = self.gamma
        return np.diag(d)

    def with_gamma(self, gamma):
        return ResetSystem(self.base, self.n_r, gamma, allow_marginal=self.allow_marginal)

    def __repr__(self):
        return (f"ResetSystem(order={self.order}, n_r={self.n_r}, "
                f"gamma={np.array2string(self.gamma, separator=', ')})")


def clegg() -> ResetSystem:
    """Resetting integrator: 1/s with its single state zeroed at input
    zero crossings."""
    base = StateSpace([[0.0]], [[1.0]], [[1.0]], 0.0)
    return ResetSystem(base, 1, [0.0], allow_marginal=True)


def fore(omega_r, gamma=0.0) -> ResetSystem:
    """First-order reset lag 1/(s/omega_r + 1) with resetting state."""
    if omega_r <= 0:
        raise ValueError("omega_r must be positive")
    base = StateSpace([[-omega_r]], [[omega_r]], [[1.0]], 0.0)
    return ResetSystem(base, 1, [float(gamma)])


def sore(omega_r, damping=1.0, gamma=0.0) -> ResetSystem:
    """Second-order reset lag 1/((s/omega_r)^2 + 2*damping*s/omega_r + 1)
    with both states resetting.  ``gamma`` may be a scalar (applied to both
    states) or a pair."""
    if omega_r <= 0:
        raise ValueError("omega_r must be positive")
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if g.size == 1:
        g = np.repeat(g, 2)
    A = np.array([[0.0, 1.0], [-omega_r**2, -2.0 * damping * omega_r]])
    B = np.array([[0.0], [1.0]])
    C = np.array([[omega_r**2, 0.0]])
    return ResetSystem(StateSpace(A, B, C, 0.0), 2, g)


def lag_chain(pole_omegas, gammas) -> ResetSystem:
    """Cascade of unity-DC first-order lags 1/(s/w_p + 1), one resetting
    state per pole.  State i is the output of section i, so the jump map
    diag(gamma) scales each pole's section independently."""
    p = np.asarray(pole_omegas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p <= 0):
        raise ValueError("pole frequencies must be positive")
    if g.shape != p.shape:
        raise ValueError("gamma length must match the pole count")
    n = p.size
    A = np.diag(-p)
    for i in range(1, n):
        A[i, i - 1] = p[i]
    B = np.zeros((n, 1))
    B[0, 0] = p[0]
    C = np.zeros((1, n))
    C[0, -1] = 1.0
    return ResetSystem(StateSpace(A, B, C, 0.0), n, g)


@dataclass(frozen=True)
class HarmonicResponse:
    """Complex gain of one output harmonic over a frequency grid.

    ``order`` is the harmonic index n >= 1 of the response component at
    n*omega under unit-sinusoid excitation at omega.  Even orders exist
    only as exact zeros.
    """

    omega: np.ndarray
    order: int
    values: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if omega.shape != values.shape or omega.ndim != 1:
            raise ValueError("omega and values must be 1-D and the same length")
        if self.order < 1:
            raise ValueError("harmonic order must be >= 1")
        if self.order % 2 == 0 and np.any(values != 0):
            raise ValueError("even harmonics are exactly zero for reset elements")
        omega.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    def mag_db(self):
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.values))

    def phase_deg(self, unwrapped=True):
        ph = np.angle(self.values)
        if unwrapped:
            ph = np.unwrap(ph)
        return np.degrees(ph)


def _frequency_matrices(A, omega):
    """Shared per-frequency pieces: E = e^{(pi/omega) A}, Delta = I + E,
    Lambda^-1 = (omega^2 I + A^2)^-1.  All real-valued."""
    n = A.shape[0]
    eye = np.eye(n)
    E = expm((np.pi / omega) * A)
    delta = eye + E
    lam = omega**2 * eye + A @ A
    if np.linalg.cond(lam) > _COND_LIMIT:
        raise SingularFrequencyError(
            f"Lambda(omega) singular at omega = {omega:g} rad/s",
            omega=omega, cond=np.linalg.cond(lam))
    lam_inv = np.linalg.solve(lam, eye)
    return E, delta, lam_inv


def theta_d(rs: ResetSystem, omega) -> np.ndarray:
    """Jump-induced correction matrix entering the first-harmonic gain.

    Real n x n matrix; identically zero when the jump map is the identity
    (all gamma_i = 1).  Raises SingularFrequencyError when the resolvent
    of the jump recursion, I + A_R e^{(pi/omega)A}, is singular at omega.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if rs.is_linear:
        # identity jump map: the resolvent collapses and the correction is
        # exactly zero, so skip the (possibly ill-conditioned) formula
        return np.zeros((rs.order, rs.order))
    A = rs.base.A
    AR = rs.reset_matrix()
    E, delta, lam_inv = _frequency_matrices(A, omega)
    delta_r = np.eye(rs.order) + AR @ E
    cond = np.linalg.cond(delta_r)
    if cond > _COND_LIMIT:
        raise SingularFrequencyError(
            f"I + A_R e^(pi A/omega) singular at omega = {omega:g} rad/s "
            f"(condition estimate {cond:.3g})", omega=omega, cond=cond)
    gamma_r = np.linalg.solve(delta_r, AR @ delta @ lam_inv)
    return -(2.0 * omega**2 / np.pi) * delta @ (gamma_r - lam_inv)


def describing_function(rs: ResetSystem, grid) -> HarmonicResponse:
    """First-harmonic complex gain of the reset element on a grid.

    Reduces exactly to the linear frequency response of the base when all
    gamma_i = 1.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid must be positive")
    A, B, C, D = rs.base.A, rs.base.B, rs.base.C, rs.base.D
    eye = np.eye(rs.order)
    vals = np.empty(grid.shape, dtype=complex)
    for i, w in enumerate(grid):
        th = theta_d(rs, w)
        M = 1j * w * eye - A
        try:
            x = np.linalg.solve(M, (eye + 1j * th) @ B)
        except np.linalg.LinAlgError as exc:
            raise SingularFrequencyError(
                f"j omega I - A singular at omega = {w:g} rad/s (marginal pole "
                "on the grid)", omega=w) from exc
        vals[i] = (C @ x)[0, 0] + D
    return HarmonicResponse(grid, 1, vals)


def hosidf(rs: ResetSystem, grid, n: int) -> HarmonicResponse:
    """Complex gain of the n-th output harmonic (n >= 2) under unit
    sinusoidal excitation.

    Even orders are exact zeros by construction (they are not evaluated,
    which avoids spurious numerical residue).  The same short circuit
    applies in the no-reset limit gamma = 1, where every harmonic above
    the first vanishes identically.
    """
    grid = np.asarray(grid, dtype=float)
    if n < 2:
        raise ValueError("hosidf() covers n >= 2; use describing_function for n = 1")
    if np.any(grid <= 0):
        raise ValueError("grid must be positive")
    if n % 2 == 0 or rs.is_linear:
        return HarmonicResponse(grid, n, np.zeros(grid.shape, dtype=complex))
    A, B, C = rs.base.A, rs.base.B, rs.base.C
    AR = rs.reset_matrix()
    eye = np.eye(rs.order)
    vals = np.empty(grid.shape, dtype=complex)
    for i, w in enumerate(grid):
        E, delta, lam_inv = _frequency_matrices(A, w)
        delta_r = eye + AR @ E
        cond = np.linalg.cond(delta_r)
        if cond > _COND_LIMIT:
            raise SingularFrequencyError(
                f"I + A_R e^(pi A/omega) singular at omega = {w:g} rad/s",
                omega=w, cond=cond)
        gamma_r = np.linalg.solve(delta_r, AR @ delta @ lam_inv)
        M = A - 1j * n * w * eye
        x = np.linalg.solve(M, delta @ (gamma_r - lam_inv) @ B)
        vals[i] = (-2.0 * w**2 / (1j * np.pi)) * (C @ x)[0, 0]
    return HarmonicResponse(grid, n, vals)


def harmonic_spectrum(rs: ResetSystem, grid, n_max: int):
    """Orders 1, 3, 5, ..., n_max of the harmonic response (list of
    HarmonicResponse)."""
    if n_max < 1 or n_max % 2 == 0:
        raise ValueError("n_max must be odd and >= 1")
    out = [describing_function(rs, grid)]
    for n in range(3, n_max + 1, 2):
        out.append(hosidf(rs, grid, n))
    return out


def describing_function_gamma_batch(base: StateSpace, n_r, gammas, grid) -> np.ndarray:
    """First-harmonic gains for many gamma vectors at once.

    ``gammas`` is (G, n_r); returns a (G, len(grid)) complex array.  The
    frequency-only matrices are shared across the batch and the jump
    resolvent is solved with batched linear algebra, which is what makes
    exhaustive reset-map tuning affordable.
    """
    gammas = np.asarray(gammas, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if gammas.ndim != 2 or gammas.shape[1] != n_r:
        raise ValueError("gammas must be (G, n_r)")
    n = base.order
    G = gammas.shape[0]
    A, B, C, D = base.A, base.B, base.C, base.D
    eye = np.eye(n)
    # full diagonal of the jump map per batch entry
    diag = np.ones((G, n))
    diag[:, :n_r] = gammas
    out = np.empty((G, grid.size), dtype=complex)
    for k, w in enumerate(grid):
        E, delta, lam_inv = _frequency_matrices(A, w)
        M0 = delta @ lam_inv
        # diag(g) @ X scales rows of X
        delta_r = eye[None, :, :] + diag[:, :, None] * E[None, :, :]
        rhs = diag[:, :, None] * M0[None, :, :]
        gamma_r = np.linalg.solve(delta_r, rhs)
        theta = -(2.0 * w**2 / np.pi) * np.einsum("ij,gjk->gik", delta, gamma_r - lam_inv[None, :, :])
        wrow = np.linalg.solve((1j * w * eye - A).T, C.T).reshape(1, n)
        rhsB = np.einsum("gij,j->gi", eye[None, :, :] + 1j * theta, B[:, 0])
        out[:, k] = rhsB @ wrow[0] + D
    return out


def save_harmonics(path, responses):
    """Harmonic CSV: `freq_hz,order,mag_db,phase_deg`.  Even orders are
    omitted (they are exactly zero)."""
    from .lti import to_hz

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("freq_hz,order,mag_db,phase_deg\n")
        for hr in responses:
            if hr.order % 2 == 0:
                continue
            mag = hr.mag_db()
            ph = hr.phase_deg()
            for w, m, p in zip(hr.omega, mag, ph):
                fh.write(f"{float(to_hz(w))!r},{hr.order},{float(m)!r},{float(p)!r}\n")



def from_transfer_function(tf: TransferFunction, n_r, gamma, allow_marginal=False) -> ResetSystem:
    """Realize a proper transfer function and mark its first n_r canonical
    states as resetting.  Prefer the dedicated constructors (clegg, fore,
    sore, lag_chain) when the state-to-pole correspondence matters."""
    return ResetSystem(tf_to_ss(tf), n_r, gamma, allow_marginal=allow_marginal)
