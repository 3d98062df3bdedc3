"""Explicit inverse problem for rational Weyl functions with negative D.

A rational Weyl function with value (i/2)|D| at infinity and nonnegative
imaginary part on the upper half-plane admits a state-space realization

    phi(z) = (i/2)|D| + psi1_0* (gamma - z I)^-1 psi2

whose matrix gamma satisfies

    gamma - gamma* = i (psi1_0 - psi2) D^-1 (psi1_0 - psi2)*.

From such a realization the parameter matrices of the generating system are
recovered in closed form; feeding them back through :mod:`weylkit.gbdt`
reproduces phi and the Hamiltonian.
"""

from dataclasses import dataclass

import numpy as np

from . import defaults
from ._linalg import eigmin_hermitian, rel_residual, resolvent_apply
from .exceptions import DomainError, StructuralError, ValidationError
from .gbdt import GbdtParams, weyl_pair

__all__ = [
    "Realization",
    "validate_realization",
    "params_from_realization",
    "realization_from_params",
    "realization_from_pole_data",
]


@dataclass(frozen=True)
class Realization:
    """State-space data (gamma, psi1_0, psi2, D) of a rational Weyl function."""

    d: np.ndarray         # (p,) real, all entries < 0
    gamma: np.ndarray     # (n, n)
    psi1_0: np.ndarray    # (n, p)
    psi2: np.ndarray      # (n, p)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if np.any(d >= 0.0):
            raise DomainError("realizations require D < 0 entrywise")
        gamma = np.asarray(self.gamma, dtype=complex)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
            raise StructuralError("gamma must be square")
        n, p = gamma.shape[0], d.size
        psi1_0 = np.asarray(self.psi1_0, dtype=complex)
        psi2 = np.asarray(self.psi2, dtype=complex)
        if psi1_0.shape != (n, p) or psi2.shape != (n, p):
            raise StructuralError(f"psi matrices must have shape {(n, p)}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "psi1_0", psi1_0)
        object.__setattr__(self, "psi2", psi2)

    @property
    def n(self):
        return self.gamma.shape[0]

    @property
    def p(self):
        return self.d.size

    def phi(self, z):
        """Evaluate the realized Weyl function at z."""
        res = resolvent_apply(self.gamma, z, self.psi2, what="gamma matrix")
        return 0.5j * np.diag(np.abs(self.d)) + self.psi1_0.conj().T @ res


def validate_realization(r, grid, tol=defaults.IDENTITY_TOL):
    """Check the gamma identity, Herglotz positivity on ``grid``, and the
    value at infinity.  Returns a report dict, never raises."""
    grid = [complex(z) for z in np.asarray(grid).ravel()]
    if not grid:
        raise StructuralError("validation grid must be nonempty")
    if any(z.imag <= 0 for z in grid):
        raise DomainError("validation grid must lie in the open upper half-plane")
    diff = r.psi1_0 - r.psi2
    dinv = np.diag(1.0 / r.d).astype(complex)
    residual = r.gamma - r.gamma.conj().T - 1j * diff @ dinv @ diff.conj().T
    scale = (np.linalg.norm(r.gamma, 2) if r.n else 0.0) + 1.0
    identity_rel = rel_residual(residual, scale)
    herglotz_min = min(
        eigmin_hermitian((r.phi(z) - r.phi(z).conj().T) / 2j) for z in grid
    )
    R = 1e6
    at_inf = r.phi(1j * R) - 0.5j * np.diag(np.abs(r.d))
    inf_err = float(np.linalg.norm(at_inf, 2))
    return {
        "passed": bool(
            identity_rel < tol and herglotz_min >= -tol and inf_err < 1e-4
        ),
        "identity_residual": identity_rel,
        "herglotz_min": herglotz_min,
        "value_at_infinity_error": inf_err,
        "n": r.n,
        "p": r.p,
    }


def params_from_realization(r, grid=None):
    """Recover the generating parameter matrices from a valid realization.

    lambda1 = (psi1_0 + psi2)/2, lambda2 = (psi1_0 - psi2) D^-1 and
    alpha = gamma + i psi2 lambda2*; the output satisfies the parameter
    identity whenever the input satisfies the gamma identity.
    """
    if grid is None:
        grid = [1j, 2j, 1 + 1j]
    report = validate_realization(r, grid)
    if not report["passed"]:
        raise ValidationError("realization failed validation", report)
    dinv = np.diag(1.0 / r.d).astype(complex)
    lambda1 = 0.5 * (r.psi1_0 + r.psi2)
    lambda2 = (r.psi1_0 - r.psi2) @ dinv
    alpha = r.gamma + 1j * r.psi2 @ lambda2.conj().T
    return GbdtParams(d=r.d.copy(), alpha=alpha, lambda1=lambda1, lambda2=lambda2)


def realization_from_params(params):
    """Realize the Weyl function of a D < 0 parameter set.

    Exact algebraic inverse of :func:`params_from_realization`.
    """
    if not params.d_negative:
        raise DomainError("realization_from_params requires D < 0")
    pair = weyl_pair(params)
    return Realization(
        d=params.d.copy(), gamma=pair.gamma, psi1_0=pair.psi1_0, psi2=pair.psi2
    )


def realization_from_pole_data(poles, residues, d, rank_tol=1e-12):
    """Assemble a realization from simple poles and residue matrices.

    phi(z) = (i/2)|D| + sum_m R_m / (mu_m - z) with each residue factored
    rank-revealingly.  The gamma identity is *not* automatic for arbitrary
    pole data; the assembled realization is validated and rejected when it
    fails the identity or Herglotz positivity.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    p = d.size
    poles = [complex(m) for m in poles]
    for i, mu in enumerate(poles):
        if mu.imag > -1e-10:
            raise DomainError(
                f"pole {mu} lies in (or within 1e-10 of) the closed upper half-plane"
            )
        for nu in poles[:i]:
            if abs(mu - nu) < 1e-10:
                raise StructuralError(f"poles {mu} and {nu} are not distinct")
    if len(poles) != len(residues):
        raise StructuralError("need one residue matrix per pole")

    gamma_blocks, c_blocks, b_blocks = [], [], []
    for mu, res in zip(poles, residues):
        res = np.asarray(res, dtype=complex)
        if res.shape != (p, p):
            raise StructuralError(f"residues must be {p} x {p}")
        u, s, vh = np.linalg.svd(res)
        rank = int(np.sum(s > rank_tol * (s[0] if s.size and s[0] > 0 else 1.0)))
        if rank == 0:
            continue
        root = np.sqrt(s[:rank])
        c_blocks.append(u[:, :rank] * root)          # p x r
        b_blocks.append(root[:, None] * vh[:rank])   # r x p
        gamma_blocks.append(mu * np.eye(rank, dtype=complex))
    if gamma_blocks:
        from scipy.linalg import block_diag

        gamma = block_diag(*gamma_blocks).astype(complex)
        psi1_0 = np.vstack([c.conj().T for c in c_blocks])
        psi2 = np.vstack(b_blocks)
    else:
        gamma = np.zeros((0, 0), dtype=complex)
        psi1_0 = np.zeros((0, p), dtype=complex)
        psi2 = np.zeros((0, p), dtype=complex)
    r = Realization(d=d, gamma=gamma, psi1_0=psi1_0, psi2=psi2)
    report = validate_realization(r, [1j, 2j, 0.5 + 1j])
    if not report["passed"]:
        raise ValidationError(
            "pole/residue data violates the gamma identity or Herglotz positivity",
            report,
        )
    return r
