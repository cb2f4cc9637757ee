"""Spectral verification of the linear error recursion.

When the current density covers the desired support, the density-feedback
synthesis drives the error e = desired - current through the linear update
e <- (I - L / d_chsn) e, where L is the Laplacian of the self-loop-free
recurrent graph.  This module checks, from eigenvalues alone, that the
update contracts on the zero-sum subspace the error lives in, and bounds how
fast the squared error shrinks per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LaplacianView

__all__ = [
    "SYMMETRY_TOL",
    "CERT_TOL",
    "SpectralReport",
    "symmetric_eigenvalues",
    "linear_error_update",
    "contraction_certificate",
    "convergence_rate_bounds",
]

# Max absolute asymmetry accepted by the symmetric eigensolver.
SYMMETRY_TOL = 1e-12
# Slack for certificate comparisons against exact spectral statements.
CERT_TOL = 1e-9


def symmetric_eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if a.size and float(np.abs(a - a.T).max()) > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric within {SYMMETRY_TOL}")
    return np.linalg.eigvalsh(a)


def _check_d_chsn(view: LaplacianView, d_chsn: float) -> float:
    d = float(d_chsn)
    if d <= view.max_degree:
        raise ValueError(f"d_chsn={d} must strictly exceed the maximum degree {view.max_degree}")
    return d


def linear_error_update(e, laplacian_view: LaplacianView, d_chsn: float) -> np.ndarray:
    """One step of the idealized error recursion, e <- e - (L e) / d_chsn.

    The error of two densities on the same support always sums to zero, and
    the update preserves that: ones are in the Laplacian's kernel.
    """
    err = np.asarray(e, dtype=float)
    lap = laplacian_view.laplacian
    if err.shape != (lap.shape[0],):
        raise ValueError(f"error vector shape {err.shape} does not match {lap.shape[0]} bins")
    if abs(float(err.sum())) > CERT_TOL:
        raise ValueError("error vector must sum to zero")
    d = _check_d_chsn(laplacian_view, d_chsn)
    return err - (lap @ err) / d


def convergence_rate_bounds(laplacian_view: LaplacianView, d_chsn: float) -> tuple[float, float]:
    """Per-step shrink envelope for the squared error norm.

    Writing the update as e(k+1) = (I - L/d) e(k), the drop
    ||e(k)||^2 - ||e(k+1)||^2 equals e(k)' S e(k) with
    S = (2 d L - L L) / d^2.  On zero-sum errors the Rayleigh quotient of S
    is sandwiched between the smallest eigenvalue of S + J/m (J the all-ones
    matrix, which shifts only the constant direction) and the largest
    eigenvalue of S.  Returns (rate_lower, rate_upper); a positive lower
    bound certifies geometric decay of ||e||^2 at factor (1 - rate_lower).
    """
    d = _check_d_chsn(laplacian_view, d_chsn)
    lap = laplacian_view.laplacian
    m = lap.shape[0]
    s = (2.0 * d * lap - lap @ lap) / (d * d)
    ones = np.full((m, m), 1.0 / m)
    rate_lower = float(symmetric_eigenvalues(s + ones)[0])
    rate_upper = float(symmetric_eigenvalues(s)[-1])
    return rate_lower, rate_upper


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue evidence that the error recursion contracts.

    ``zero_sum_radius`` is the spectral radius of the error-update matrix
    restricted to the zero-sum subspace, computed as the radius of
    I - L/d - J/m (J the all-ones matrix), which deflates the eigenvalue 1
    of the constant direction.  ``lyapunov_margin`` is the smallest
    eigenvalue of I - G'G for that deflated G: positive means the identity
    works as a quadratic Lyapunov certificate.  Flags report rather than
    assert, so a failing graph still yields a readable report.
    """

    laplacian_eigs: np.ndarray
    zero_sum_radius: float
    rate_lower: float
    rate_upper: float
    d_chsn: float
    max_degree: int
    lyapunov_margin: float
    connected: bool

    @property
    def eig_floor_ok(self) -> bool:
        """Smallest Laplacian eigenvalue sits at zero."""
        return bool(abs(float(self.laplacian_eigs[0])) <= CERT_TOL)

    @property
    def eig_bound_ok(self) -> bool:
        """Largest Laplacian eigenvalue is at most twice the maximum degree."""
        return bool(float(self.laplacian_eigs[-1]) <= 2.0 * self.max_degree + CERT_TOL)

    @property
    def contraction_ok(self) -> bool:
        return bool(self.zero_sum_radius < 1.0)

    @property
    def lyapunov_ok(self) -> bool:
        return bool(self.lyapunov_margin > -CERT_TOL)

    @property
    def certificates_ok(self) -> bool:
        return (
            self.connected
            and self.eig_floor_ok
            and self.eig_bound_ok
            and self.contraction_ok
            and self.lyapunov_ok
        )

    def key_values(self) -> list[tuple[str, str]]:
        """Flat key=value view for reporting."""
        def fmt(x: float) -> str:
            return repr(float(x))

        return [
            ("max_degree", str(self.max_degree)),
            ("d_chsn_used", fmt(self.d_chsn)),
            ("laplacian_eig_min", fmt(self.laplacian_eigs[0])),
            ("laplacian_eig_max", fmt(self.laplacian_eigs[-1])),
            ("zero_sum_radius", fmt(self.zero_sum_radius)),
            ("rate_lower", fmt(self.rate_lower)),
            ("rate_upper", fmt(self.rate_upper)),
            ("lyapunov_margin", fmt(self.lyapunov_margin)),
            ("connected", "true" if self.connected else "false"),
            ("eig_floor_ok", "true" if self.eig_floor_ok else "false"),
            ("eig_bound_ok", "true" if self.eig_bound_ok else "false"),
            ("contraction_ok", "true" if self.contraction_ok else "false"),
            ("lyapunov_ok", "true" if self.lyapunov_ok else "false"),
            ("certificates_ok", "true" if self.certificates_ok else "false"),
        ]


def contraction_certificate(laplacian_view: LaplacianView, d_chsn: float) -> SpectralReport:
    """Spectral audit of the error recursion on a recurrent graph.

    Connectivity is read off the spectrum (second-smallest Laplacian
    eigenvalue positive); a disconnected graph is reported with failing
    flags rather than raised, so callers can print the evidence.
    """
    d = _check_d_chsn(laplacian_view, d_chsn)
    lap = laplacian_view.laplacian
    m = lap.shape[0]
    eigs = symmetric_eigenvalues(lap)
    connected = m == 1 or float(eigs[1]) > CERT_TOL
    deflated = np.eye(m) - lap / d - np.full((m, m), 1.0 / m)
    deflated_eigs = symmetric_eigenvalues(deflated)
    radius = float(np.abs(deflated_eigs).max())
    gram = deflated.T @ deflated
    margin = float(symmetric_eigenvalues(np.eye(m) - gram)[0])
    rate_lower, rate_upper = convergence_rate_bounds(laplacian_view, d)
    eigs.flags.writeable = False
    return SpectralReport(
        laplacian_eigs=eigs,
        zero_sum_radius=radius,
        rate_lower=rate_lower,
        rate_upper=rate_upper,
        d_chsn=d,
        max_degree=laplacian_view.max_degree,
        lyapunov_margin=margin,
        connected=connected,
    )
