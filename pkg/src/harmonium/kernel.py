"""Exact one-body reduced-density kernels.

The ground-state one-body kernel factorizes into a Gaussian (identical to the
bosonic ground-state kernel) times a polynomial part F built, per particle and
per dimension, from an integral over a pair of shifted Hermite polynomials:

    rho(x, x') ~ prod_g exp[(B/N^2 + C - A)(v^2 + w^2) + 2 C v w]
                 * sum_i prod_g Integral du e^{-u^2}
                     H_mu(p u + r(v, w)) H_mu(p u + r(w, v)) / (2^mu mu!)

with per-dimension coefficients A = 1/(2 l_rel^2), B the center-of-mass
Gaussian coefficient, C = (N-1) B^2 / (2 N^2 (N^2 A - (N-1) B)),
p^2 = B / (N^2 A - (N-1) B) and the affine map
r(v, w) = sqrt(2A) (v - beta (v + w)), beta = B / (2 (N^2 A - (N-1) B)).

The u-integral is evaluated exactly as a polynomial in (r, r', p^2); only even
powers of p survive, so everything stays real for attractive couplings where
p^2 < 0.  That rearrangement is what makes the sign-flip duality of the
spectra testable on both branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial.polynomial import polyval2d

__all__ = [
    "KernelCoefficients",
    "OneBodyKernel",
    "kernel_coefficients",
    "pair_factor_table",
    "evaluate_F",
    "fermionic_kernel",
    "bosonic_kernel",
    "spin_block_kernels",
]


class KernelError(ValueError):
    """Coefficients outside the valid kernel domain."""


@dataclass(frozen=True)
class KernelCoefficients:
    """Per-dimension kernel coefficients (internal units).

    gauss_a/gauss_b/gauss_c are A, B, C above; p_sq stores p^2 (negative for
    attractive couplings); r_self/r_cross give r(v, w) = r_self v + r_cross w.
    """

    n_particles: int
    gauss_a: tuple
    gauss_b: tuple
    gauss_c: tuple
    p_sq: tuple
    r_self: tuple
    r_cross: tuple

    @property
    def n_dims(self):
        return len(self.gauss_a)

    def gaussian_alpha(self, g):
        """Coefficient of v^2 + w^2 in the Gaussian factor of dimension g."""
        n = self.n_particles
        return self.gauss_b[g] / n ** 2 + self.gauss_c[g] - self.gauss_a[g]

    def gaussian_cross(self, g):
        """Coefficient of v * w in the Gaussian factor of dimension g."""
        return 2.0 * self.gauss_c[g]


def kernel_coefficients(couplings):
    """Assemble the per-dimension kernel coefficients from the couplings."""
    n = couplings.n_particles
    a_list, b_list, c_list, p2, rs, rc = [], [], [], [], [], []
    for lrel, b in zip(couplings.length_rel, couplings.gauss_b):
        a = 0.5 / lrel ** 2
        denom = n * n * a - (n - 1) * b
        if denom <= 0:
            raise KernelError("N^2 A - (N-1) B must be positive")
        c = (n - 1) * b * b / (2.0 * n * n * denom)
        beta = b / (2.0 * denom)
        root = math.sqrt(2.0 * a)
        a_list.append(a)
        b_list.append(b)
        c_list.append(c)
        p2.append(b / denom)
        rs.append(root * (1.0 - beta))
        rc.append(-root * beta)
    return KernelCoefficients(
        n_particles=n, gauss_a=tuple(a_list), gauss_b=tuple(b_list),
        gauss_c=tuple(c_list), p_sq=tuple(p2), r_self=tuple(rs),
        r_cross=tuple(rc))


@lru_cache(maxsize=None)
def _hermite_coeff_rows(max_degree):
    """Integer coefficient rows of the physicists' Hermite polynomials."""
    rows = [[1], [0, 2]]
    for m in range(1, max_degree):
        prev, cur = rows[m - 1], rows[m]
        nxt = [0] * (m + 2)
        for j, c in enumerate(cur):
            nxt[j + 1] += 2 * c
        for j, c in enumerate(prev):
            nxt[j] -= 2 * m * c
        rows.append(nxt)
    return rows[: max_degree + 1]


def _gauss_moments(max_order):
    """Moments Integral e^{-u^2} u^s du for s = 0..max_order (odd ones zero)."""
    mom = [0.0] * (max_order + 1)
    mom[0] = math.sqrt(math.pi)
    for s in range(2, max_order + 1, 2):
        mom[s] = mom[s - 2] * (s - 1) / 2.0
    return mom


def pair_factor_table(mu, p_sq):
    """Coefficient table T with f_mu(r, r') = sum_ab T[a, b] r^a r'^b.

    f_mu is the exact u-integral of the shifted Hermite pair, including the
    1/(2^mu mu!) normalization.  Only even total powers of p contribute, so
    the table is real for any sign of p_sq.
    """
    rows = _hermite_coeff_rows(mu)
    mom = _gauss_moments(2 * mu)
    pair = np.zeros((mu + 1, mu + 1))
    for k in range(mu + 1):
        for l in range(k % 2, mu + 1, 2):
            acc = 0.0
            for j in range(k % 2, k + 1, 2):
                hk = rows[k][j]
                if hk == 0:
                    continue
                for jp in range(j % 2, l + 1, 2):
                    hl = rows[l][jp]
                    if hl == 0 or (j + jp) % 2:
                        continue
                    acc += hk * hl * p_sq ** ((j + jp) // 2) * mom[j + jp]
            pair[k, l] = acc
    table = np.zeros((mu + 1, mu + 1))
    for k in range(mu + 1):
        for l in range(mu + 1):
            if pair[k, l] == 0.0:
                continue
            a, b = mu - k, mu - l
            table[a, b] += comb(mu, k) * comb(mu, l) * 2.0 ** (a + b) * pair[k, l]
    table /= 2.0 ** mu * factorial(mu)
    return table


def evaluate_F(configuration_mus, coefficients, x, xp):
    """Polynomial part F(x, x') = sum over occupied boxes of the pair factors.

    configuration_mus is the tuple of occupied quantum-number vectors (one
    spin species); x and xp are points in R^n (or arrays of points, last axis
    the dimension).
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    total = 0.0
    for mu in configuration_mus:
        term = 1.0
        for g, m in enumerate(mu):
            r1 = coefficients.r_self[g] * x[..., g] + coefficients.r_cross[g] * xp[..., g]
            r2 = coefficients.r_self[g] * xp[..., g] + coefficients.r_cross[g] * x[..., g]
            term = term * polyval2d(r1, r2, pair_factor_table(m, coefficients.p_sq[g]))
        total = total + term
    return total


@dataclass(frozen=True)
class OneBodyKernel:
    """Evaluatable unnormalized one-body kernel block.

    orbital_set is the tuple of occupied quantum-number vectors for this spin
    block; None means the pure-Gaussian (bosonic) kernel, the empty tuple an
    identically vanishing block.  Evaluation is reentrant; the instance is
    immutable.
    """

    coefficients: KernelCoefficients
    orbital_set: tuple | None
    spin: str | None = None

    @property
    def n_dims(self):
        return self.coefficients.n_dims

    def gaussian(self, x, xp):
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        expo = 0.0
        for g in range(self.n_dims):
            alpha = self.coefficients.gaussian_alpha(g)
            cross = self.coefficients.gaussian_cross(g)
            v, w = x[..., g], xp[..., g]
            expo = expo + alpha * (v * v + w * w) + cross * v * w
        return np.exp(expo)

    def evaluate(self, x, xp):
        """Kernel value(s) at (x, x'); accepts single points or point arrays."""
        if self.orbital_set is not None and len(self.orbital_set) == 0:
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        g = self.gaussian(x, xp)
        if self.orbital_set is None:
            return g
        return g * evaluate_F(self.orbital_set, self.coefficients, x, xp)

    __call__ = evaluate


def fermionic_kernel(ground_state):
    """Unnormalized spinless one-body kernel of a ground-state spec."""
    config = ground_state.configuration
    if config.down:
        raise KernelError("fermionic_kernel expects a spinless configuration")
    return OneBodyKernel(
        coefficients=kernel_coefficients(ground_state.couplings),
        orbital_set=config.up)


def bosonic_kernel(couplings, n_particles=None):
    """Pure-Gaussian kernel of the N-boson ground state at these couplings."""
    if n_particles is not None and n_particles != couplings.n_particles:
        raise KernelError("particle number disagrees with the couplings")
    return OneBodyKernel(coefficients=kernel_coefficients(couplings),
                         orbital_set=None)


def spin_block_kernels(ground_state):
    """Spin-resolved kernel blocks sharing one Gaussian factor."""
    config = ground_state.configuration
    coeff = kernel_coefficients(ground_state.couplings)
    return {
        "up": OneBodyKernel(coefficients=coeff, orbital_set=config.up,
                            spin="up"),
        "down": OneBodyKernel(coefficients=coeff, orbital_set=config.down,
                              spin="down"),
    }
