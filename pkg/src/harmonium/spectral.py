"""Projection of the one-body kernels onto Hermite bases and diagonalization.

The kernel factorizes per particle and dimension, so every matrix element of
the full n-dimensional operator is a product of one-dimensional double
integrals.  Each of those is a Gaussian times a polynomial and is evaluated
exactly by two-dimensional Gauss-Hermite quadrature after rotating to the
principal axes of the combined Gaussian.  Parity makes every factor matrix
block-diagonal in the basis-index parity, so the operator splits into 2^n
parity sectors (times two spin sectors when applicable), each diagonalized
with a dense symmetric eigensolver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.polynomial import polyval2d

from .kernel import kernel_coefficients, pair_factor_table
from .model import CouplingParams, ground_configuration

__all__ = [
    "HermiteBasisSpec",
    "Spectrum",
    "TruncatedSpectrum",
    "SpectralError",
    "projected_factor_matrix",
    "natural_occupations",
    "bosonic_occupations",
    "geometric_ratio",
    "bosonic_spectrum_closed_form",
    "product_spectrum",
    "duality_max_difference",
    "truncate_spectrum",
]

EIGH_RESIDUAL_TOL = 1e-9
QUADRATURE_CHECK_TOL = 1e-12


class SpectralError(RuntimeError):
    """Numerical failure; carries the best available estimate when present."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class HermiteBasisSpec:
    """Per-dimension basis sizes and length scales."""

    sizes: tuple
    scales: tuple

    def __post_init__(self):
        if len(self.sizes) != len(self.scales):
            raise ValueError("sizes and scales must align")
        if any(s <= 0 for s in self.scales):
            raise ValueError("length scales must be positive")


def _normalized_hermite(t, size):
    """Rows phi_m(t) = H_m(t) / sqrt(2^m m! sqrt(pi)), m < size, stably."""
    t = np.asarray(t, dtype=float)
    out = np.empty((size, t.size))
    out[0] = math.pi ** -0.25
    if size > 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for m in range(1, size - 1):
        out[m + 1] = (t * math.sqrt(2.0 / (m + 1)) * out[m]
                      - math.sqrt(m / (m + 1.0)) * out[m - 1])
    return out


def projected_factor_matrix(coefficients, dim, mu, size, scale, n_nodes=None):
    """One-dimensional factor matrix G_ab of one particle in one dimension.

    G_ab = Integral phi_a(v) g(v, w) f_mu(r(v,w), r(w,v)) phi_b(w) dv dw with
    g the dimension's Gaussian factor; mu=None drops the polynomial factor
    (bosonic kernel).  The quadrature is exact for the finite polynomial
    degree of the integrand.
    """
    alpha = coefficients.gaussian_alpha(dim)
    cross = coefficients.gaussian_cross(dim)
    half = 0.5 / scale ** 2
    a = half - alpha - 0.5 * cross
    b = half - alpha + 0.5 * cross
    if a <= 0 or b <= 0:
        raise SpectralError(
            f"basis scale {scale} leaves the combined Gaussian unnormalizable "
            f"in dimension {dim} (principal exponents {a}, {b})")
    mumax = 0 if mu is None else mu
    q = n_nodes or (size + mumax + 2)
    x, wq = hermgauss(q)
    xi = (x / math.sqrt(a))[:, None]
    eta = (x / math.sqrt(b))[None, :]
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    v = ((xi + eta) * inv_sqrt2).ravel()
    w = ((xi - eta) * inv_sqrt2).ravel()
    weights = (wq[:, None] * wq[None, :]).ravel() / math.sqrt(a * b)
    if mu is not None:
        r1 = coefficients.r_self[dim] * v + coefficients.r_cross[dim] * w
        r2 = coefficients.r_self[dim] * w + coefficients.r_cross[dim] * v
        weights = weights * polyval2d(
            r1, r2, pair_factor_table(mu, coefficients.p_sq[dim]))
    hv = _normalized_hermite(v / scale, size) / math.sqrt(scale)
    hw = _normalized_hermite(w / scale, size) / math.sqrt(scale)
    return (hv * weights) @ hw.T


@dataclass
class Spectrum:
    """Decreasingly ordered occupation numbers with provenance.

    block_labels holds one (parity, spin) pair per value, parity as a string
    like "eo" (one letter per dimension).  convergence is the maximum value
    shift under the last basis increase.
    """

    values: np.ndarray
    block_labels: list
    trace: float
    convergence: float
    basis_sizes: tuple
    metadata: dict = field(default_factory=dict)

    def top(self, k):
        return self.values[:k]

    def to_json_dict(self):
        return {
            "values": [float(v) for v in self.values],
            "block_labels": [list(t) for t in self.block_labels],
            "trace": self.trace,
            "convergence": self.convergence,
            "basis_sizes": list(self.basis_sizes),
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)


def geometric_ratio(n_particles, kappa_bar):
    """Decay ratio q of the one-dimensional bosonic occupation spectrum.

    Vanishes at zero coupling and is invariant under the sign flip of the
    log-coupling, q(delta) = q(-delta).
    """
    if kappa_bar <= -1:
        raise ValueError("kappa must exceed -1")
    n = n_particles
    u = math.sqrt(1.0 + kappa_bar)
    bracket = 2.0 - u - 1.0 / u
    return 1.0 - 2.0 * n / (n + math.sqrt(n * n - (n - 1) * bracket))


def bosonic_spectrum_closed_form(n_particles, kappa_bar, size=None):
    """Geometric bosonic occupation numbers N (1 - q) q^k, k = 0, 1, ..."""
    q = geometric_ratio(n_particles, kappa_bar)
    if size is None:
        size = 16
        if 0.0 < q < 1.0:
            size = max(16, int(math.ceil(math.log(1e-18) / math.log(q))) + 2)
    k = np.arange(size)
    return n_particles * (1.0 - q) * q ** k


def _sector_matrices(coefficients, spin_groups, sizes):
    """Assembled matrices per (spin, parity) sector, plus the factor cache."""
    n_dims = coefficients.n_dims
    cache = {}

    def factor(dim, mu, size, scale):
        key = (dim, mu, size)
        if key not in cache:
            cache[key] = projected_factor_matrix(
                coefficients, dim, mu, size, scale)
        return cache[key]

    sectors = {}
    for spin, mus, scales in spin_groups:
        for parity in np.ndindex(*(2,) * n_dims):
            label = "".join("eo"[p] for p in parity)
            dim_total = 1
            for g in range(n_dims):
                dim_total *= len(range(parity[g], sizes[g], 2))
            if dim_total == 0:
                continue
            total = np.zeros((dim_total, dim_total))
            terms = mus if mus is not None else [None]
            nonzero = False
            for mu in terms:
                term = np.ones((1, 1))
                for g in range(n_dims):
                    m = mu[g] if mu is not None else None
                    gmat = factor(g, m, sizes[g], scales[g])
                    gblk = gmat[parity[g]::2, parity[g]::2]
                    term = np.kron(term, gblk)
                total += term
                nonzero = True
            if nonzero:
                sectors[(spin, label)] = 0.5 * (total + total.T)
    return sectors, cache


def _verify_quadrature(coefficients, spin_groups, sizes):
    """Spot check: one extra quadrature order must not move a factor matrix."""
    mus = spin_groups[0][1]
    scales = spin_groups[0][2]
    mumax = max((mu[0] for mu in mus), default=0) if mus is not None else 0
    g0 = projected_factor_matrix(coefficients, 0, mumax, sizes[0], scales[0])
    g1 = projected_factor_matrix(coefficients, 0, mumax, sizes[0], scales[0],
                                 n_nodes=sizes[0] + mumax + 4)
    scale = max(1.0, np.abs(g0).max())
    err = np.abs(g0 - g1).max()
    if err > QUADRATURE_CHECK_TOL * scale:
        raise SpectralError(
            f"quadrature not converged: order increase moved a factor matrix "
            f"by {err:.3e} (scale {scale:.3e})")


def _diagonalize(sectors, n_particles):
    """Trace-normalize the direct sum to N, then solve each sector."""
    total_trace = sum(np.trace(m) for m in sectors.values())
    if total_trace <= 0:
        raise SpectralError("assembled kernel has non-positive trace")
    scale = n_particles / total_trace
    values, labels = [], []
    block_traces = {}
    for key, mat in sectors.items():
        mat = mat * scale
        lam, vec = np.linalg.eigh(mat)
        residual = np.abs(mat @ vec - vec * lam).max()
        norm = max(np.abs(lam).max(), 1e-300)
        if residual > EIGH_RESIDUAL_TOL * norm:
            raise SpectralError(
                f"eigensolver residual {residual:.3e} exceeds tolerance in "
                f"sector {key}")
        values.append(lam)
        labels.extend((key, i) for i in range(lam.size))
        block_traces[key] = float(np.trace(mat))
    values = np.concatenate(values)
    order = np.argsort(values)[::-1]
    sorted_labels = [labels[i][0] for i in order]
    return values[order], sorted_labels, block_traces


def _initial_sizes(couplings, mus_all, floor=8, cap=44):
    """Per-dimension starting sizes from the geometric decay estimate."""
    n = couplings.n_particles
    sizes = []
    for g in range(couplings.n_dims):
        mumax = max((mu[g] for mu in mus_all), default=0)
        q = geometric_ratio(n, couplings.kappa[g])
        need = 4
        if 0.0 < q < 1.0:
            need = int(math.ceil(math.log(1e-18) / math.log(q)))
        sizes.append(int(min(max(floor, mumax + 4 + need), cap)))
    return tuple(sizes)


def natural_occupations(ground_state, *, spinful=None, tol=1e-10,
                        basis=None, max_rounds=5, size_cap=192):
    """Natural occupation numbers of the ground-state one-body operator.

    Assembles all parity (and spin) sectors, imposes the trace N on the direct
    sum, and diagonalizes; the basis is doubled until the maximum occupation
    shift drops below tol.  Raises SpectralError (carrying the best estimate)
    when the refinement stalls.
    """
    config = ground_state.configuration
    couplings = ground_state.couplings
    coefficients = kernel_coefficients(couplings)
    n = couplings.n_particles
    if spinful is None:
        spinful = bool(config.down)

    mus_all = config.up + config.down
    if basis is not None:
        sizes, scales = tuple(basis.sizes), tuple(basis.scales)
    else:
        sizes = _initial_sizes(couplings, mus_all)
        scales = couplings.length_rel

    def groups(sz):
        if spinful:
            return [("up", config.up, scales), ("down", config.down, scales)]
        return [("", config.up, scales)]

    _verify_quadrature(coefficients, groups(sizes), sizes)
    prev = None
    prev_out = None
    for round_no in range(max_rounds):
        sectors, _ = _sector_matrices(coefficients, groups(sizes), sizes)
        values, labels, block_traces = _diagonalize(sectors, n)
        out = Spectrum(
            values=values, block_labels=labels, trace=float(values.sum()),
            convergence=math.inf, basis_sizes=sizes,
            metadata={
                "kappa": list(couplings.kappa),
                "delta": list(couplings.delta),
                "omega": list(couplings.omega),
                "configuration": {
                    "up": [list(m) for m in config.up],
                    "down": [list(m) for m in config.down],
                },
                "block_traces": {f"{k[0]}/{k[1]}": v
                                 for k, v in block_traces.items()},
                "spinful": spinful,
            })
        if prev is not None:
            m = min(prev.size, values.size)
            shift = float(np.abs(prev[:m] - values[:m]).max())
            if prev.size != values.size:
                tail = prev[m:] if prev.size > values.size else values[m:]
                if tail.size:
                    shift = max(shift, float(np.abs(tail).max()))
            out.convergence = shift
            if shift < tol:
                return out
        if basis is not None:
            # explicit basis: single refinement check, no auto-growth
            if prev is not None:
                raise SpectralError(
                    f"requested basis not converged (shift {out.convergence:.3e})",
                    best=out)
        prev = values
        prev_out = out
        sizes = tuple(min(2 * s, size_cap) for s in sizes)
    raise SpectralError(
        f"occupation numbers not converged to {tol} after {max_rounds} "
        f"basis doublings", best=prev_out)


def bosonic_occupations(couplings, **kwargs):
    """Numerically diagonalized bosonic (pure Gaussian) spectrum."""
    from .model import Configuration, GroundStateSpec

    zero = Configuration(up=((0,) * couplings.n_dims,))
    gs = GroundStateSpec(configuration=zero, couplings=couplings)
    config = gs.configuration
    coefficients = kernel_coefficients(couplings)
    sizes = kwargs.pop("sizes", None) or _initial_sizes(couplings, config.up)
    scales = couplings.length_rel
    tol = kwargs.pop("tol", 1e-10)
    prev = None
    for _ in range(5):
        sectors, _ = _sector_matrices(
            coefficients, [("", None, scales)], sizes)
        values, labels, _tr = _diagonalize(sectors, couplings.n_particles)
        if prev is not None:
            m = min(prev.size, values.size)
            shift = float(np.abs(prev[:m] - values[:m]).max())
            if shift < tol:
                return Spectrum(values=values, block_labels=labels,
                                trace=float(values.sum()), convergence=shift,
                                basis_sizes=sizes, metadata={"bosonic": True})
        prev = values
        sizes = tuple(min(2 * s, 192) for s in sizes)
    raise SpectralError("bosonic spectrum not converged")


def product_spectrum(factors, n_particles, size=None):
    """Spectrum of a product state: all pairwise products, rescaled to N.

    Every factor must itself be normalized to the particle number; the result
    is sorted descending and cut to `size` values when requested.
    """
    factors = [np.asarray(f, dtype=float) for f in factors]
    if not factors:
        raise ValueError("need at least one factor spectrum")
    for f in factors:
        if abs(f.sum() - n_particles) > 1e-6 * n_particles:
            raise ValueError(
                "factor spectra must share the particle-number normalization")
    out = factors[0]
    for f in factors[1:]:
        out = np.outer(out, f).ravel() / n_particles
    out = np.sort(out)[::-1]
    return out[:size] if size is not None else out


def duality_max_difference(n_particles, deltas, flip=None, *, omega=None,
                           tol=1e-11, **kwargs):
    """Max occupation difference under sign flips of the log-couplings.

    flip selects the dimensions whose delta changes sign (all by default).
    The flip maps the state built on the base ground configuration to its
    counterpart at the flipped couplings; those two states are iso-spectral.
    When the flipped couplings' own ground configuration differs from the
    base one (possible for strong single-component flips, where the flip
    crosses a configuration boundary), the report flags it: the ground
    states themselves are then different states with different spectra.
    """
    from .model import GroundStateSpec

    deltas = tuple(float(d) for d in deltas)
    if flip is None:
        flip = tuple(range(len(deltas)))
    flipped = tuple(-d if g in set(flip) else d for g, d in enumerate(deltas))

    def params(ds):
        return CouplingParams.from_dimensionless(n_particles, delta=ds,
                                                 omega=omega)

    cp_a, cp_b = params(deltas), params(flipped)
    config = ground_configuration(cp_a, n_particles)
    config_b = ground_configuration(cp_b, n_particles)

    def run(cp):
        return natural_occupations(
            GroundStateSpec(configuration=config, couplings=cp),
            tol=tol, **kwargs)

    spec_a, spec_b = run(cp_a), run(cp_b)
    m = min(spec_a.values.size, spec_b.values.size)
    diff = float(np.abs(spec_a.values[:m] - spec_b.values[:m]).max())
    return {
        "deltas": deltas,
        "flipped": flipped,
        "max_difference": diff,
        "configuration": config,
        "configuration_changed": config.canonical_key() != config_b.canonical_key(),
        "flipped_ground_configuration": config_b,
        "spectra": (spec_a, spec_b),
    }


@dataclass
class TruncatedSpectrum:
    """A finite window of a spectrum, with its truncation error.

    error is the weight discarded on both ends: sum of (1 - value) over the
    dropped near-1 head plus the sum of the dropped tail.  n_eff is the
    particle number remaining in the window.
    """

    values: np.ndarray
    n_eff: int
    error: float
    dropped_head: int
    source: Spectrum | None = None
    renormalized: bool = False

    @property
    def size(self):
        return self.values.size


PLATEAU_TOL = 1e-11


def truncate_spectrum(spectrum, *, target=None, upper_tol=None, lower_tol=None,
                      n_particles=None, renormalize=False):
    """Drop occupations exponentially close to one (head) and zero (tail).

    Either give thresholds (upper_tol on 1 - value for the head, lower_tol on
    the value for the tail) or a target setting (n_eff, size).  Cuts through a
    plateau of equal values are refused: the truncated problem would not be
    well-posed there.
    """
    if isinstance(spectrum, Spectrum):
        values = spectrum.values
        source = spectrum
        n = n_particles if n_particles is not None else int(round(spectrum.trace))
    else:
        values = np.asarray(spectrum, dtype=float)
        source = None
        if n_particles is None:
            n_particles = int(round(values.sum()))
        n = n_particles
    if np.any(np.diff(values) > 1e-12):
        raise ValueError("spectrum must be sorted decreasingly")

    if (target is None) == (upper_tol is None and lower_tol is None):
        raise ValueError("give either a target setting or thresholds")
    if target is not None:
        n_eff, size = target
        if size < n_eff:
            raise ValueError("target size smaller than its particle number")
        head = n - n_eff
        if head < 0 or head + size > values.size:
            raise ValueError("target setting does not fit the spectrum")
    else:
        head = 0
        if upper_tol is not None:
            while head < n and 1.0 - values[head] < upper_tol:
                head += 1
        end = values.size
        if lower_tol is not None:
            while end > head and values[end - 1] < lower_tol:
                end -= 1
        size = end - head
        n_eff = n - head

    for cut in (head, head + size):
        if 0 < cut < values.size:
            if abs(values[cut - 1] - values[cut]) <= PLATEAU_TOL:
                raise ValueError(
                    f"truncation would cut through a plateau at index {cut} "
                    f"(values {values[cut - 1]!r}, {values[cut]!r})")

    window = values[head:head + size].copy()
    error = float((1.0 - values[:head]).sum() + values[head + size:].sum())
    if renormalize:
        window *= n_eff / window.sum()
    return TruncatedSpectrum(values=window, n_eff=n_eff, error=error,
                             dropped_head=head, source=source,
                             renormalized=renormalize)
