"""Physical parameterization and ground-state configurations.

The model: N identical fermions of mass m in an n-dimensional harmonic trap
with frequencies omega^(alpha), coupled pairwise by a harmonic interaction of
strength K.  The ground state is a Slater determinant of oscillator orbitals
at the shifted frequencies omega_rel^(alpha) = sqrt(omega^2 + N K / m),
multiplied by a Gaussian center-of-mass correlation factor.  Everything here
works in internal units hbar = m = omega^(1) = 1; occupation spectra depend
only on the dimensionless couplings anyway.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from math import comb

__all__ = [
    "SystemSpec",
    "CouplingParams",
    "Configuration",
    "GroundStateSpec",
    "derive_couplings",
    "box_energy",
    "ground_configuration",
    "zeeman_ground_configuration",
    "effective_dimension",
    "kappa_critical_3_2",
    "find_configuration_transition",
    "critical_detuning",
    "detuning_exceeds_critical",
]

# Relative tolerance used to group degenerate box energies.
ENERGY_TOL = 1e-12


class ModelError(ValueError):
    """Invalid physical input."""


@dataclass(frozen=True)
class SystemSpec:
    """Full physical input: trap, particle number, interaction, spin/field.

    omega is one trap frequency per spatial dimension (all > 0).  coupling is
    the pair-interaction strength K; zeeman is the magnetic splitting b = c|B|
    between the two spin species (only meaningful when spinful).
    """

    n_particles: int
    omega: tuple
    mass: float = 1.0
    coupling: float = 0.0
    spinful: bool = False
    zeeman: float = 0.0

    def __post_init__(self):
        if self.n_particles < 1:
            raise ModelError("need at least one particle")
        if not self.omega or any(w <= 0 for w in self.omega):
            raise ModelError("all trap frequencies must be positive")
        if self.mass <= 0:
            raise ModelError("mass must be positive")
        if self.zeeman < 0:
            raise ModelError("zeeman splitting must be non-negative")
        if self.zeeman > 0 and not self.spinful:
            raise ModelError("zeeman splitting requires a spinful system")
        wmin2 = min(self.omega) ** 2
        if self.n_particles * self.coupling / self.mass <= -wmin2:
            raise ModelError(
                "interaction too attractive: N K / m must exceed -min(omega)^2"
            )
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))

    @property
    def n_dims(self):
        return len(self.omega)

    @classmethod
    def from_dimensionless(cls, n_particles, n_dims=1, *, kappa=None, delta=None,
                           coupling=None, chi=1.0, spinful=False, zeeman=0.0):
        """Build a spec in internal units from one dimensionless coupling.

        Exactly one of kappa, delta, coupling must be given; kappa/delta refer
        to the first dimension.  chi sets the transverse detunings
        omega = (1, chi, chi, ...), or per-dimension when given as a sequence.
        """
        given = [v is not None for v in (kappa, delta, coupling)]
        if sum(given) != 1:
            raise ModelError("give exactly one of kappa, delta, coupling")
        if delta is not None:
            kappa = math.expm1(4.0 * delta)
        if kappa is not None:
            if kappa <= -1:
                raise ModelError("kappa must exceed -1")
            coupling = kappa / n_particles
        if isinstance(chi, (int, float)):
            omega = (1.0,) + (float(chi),) * (n_dims - 1)
        else:
            omega = (1.0,) + tuple(float(c) for c in chi)
            if len(omega) != n_dims:
                raise ModelError("chi must provide n_dims - 1 detunings")
        if any(c < 1.0 for c in omega):
            raise ModelError("detunings chi must be >= 1")
        return cls(n_particles=n_particles, omega=omega, coupling=coupling,
                   spinful=spinful, zeeman=zeeman)


@dataclass(frozen=True)
class CouplingParams:
    """Per-dimension derived couplings and length scales.

    kappa, delta are the dimensionless couplings; omega_rel the relative-motion
    frequencies; length_cm / length_rel the center-of-mass and relative-motion
    oscillator lengths; gauss_b the diagonal of the center-of-mass Gaussian
    exponent matrix, (N/2)(1/length_rel^2 - 1/length_cm^2).
    """

    n_particles: int
    omega: tuple
    kappa: tuple
    delta: tuple
    omega_rel: tuple
    length_cm: tuple
    length_rel: tuple
    gauss_b: tuple

    @property
    def n_dims(self):
        return len(self.omega)

    @classmethod
    def from_dimensionless(cls, n_particles, *, kappa=None, delta=None, omega=None):
        """Construct directly from per-dimension couplings.

        Unlike a SystemSpec, the per-dimension kappa need not share a sign:
        this is the natural domain for the sign-flip duality of the occupation
        spectra, which acts component-wise on delta.
        """
        if (kappa is None) == (delta is None):
            raise ModelError("give exactly one of kappa, delta")
        if delta is not None:
            delta = tuple(float(d) for d in delta)
            kappa = tuple(math.expm1(4.0 * d) for d in delta)
        else:
            kappa = tuple(float(k) for k in kappa)
            if any(k <= -1 for k in kappa):
                raise ModelError("every kappa must exceed -1")
            delta = tuple(0.25 * math.log1p(k) for k in kappa)
        n = len(kappa)
        if omega is None:
            omega = (1.0,) * n
        omega = tuple(float(w) for w in omega)
        if len(omega) != n or any(w <= 0 for w in omega):
            raise ModelError("omega must give one positive frequency per dimension")
        omega_rel = tuple(w * math.sqrt(1.0 + k) for w, k in zip(omega, kappa))
        length_cm = tuple(1.0 / math.sqrt(w) for w in omega)
        length_rel = tuple(1.0 / math.sqrt(w) for w in omega_rel)
        gauss_b = tuple(0.5 * n_particles * (wr - w)
                        for w, wr in zip(omega, omega_rel))
        return cls(n_particles=n_particles, omega=omega, kappa=kappa, delta=delta,
                   omega_rel=omega_rel, length_cm=length_cm,
                   length_rel=length_rel, gauss_b=gauss_b)


def derive_couplings(spec):
    """Derive all per-dimension coupling parameters from a SystemSpec."""
    n = spec.n_particles
    kappa = []
    for w in spec.omega:
        k = n * spec.coupling / (spec.mass * w * w)
        if k <= -1:
            raise ModelError("kappa <= -1: relative-motion frequency not real")
        kappa.append(k)
    # mass scales out of every dimensionless quantity; rebuild at m = 1
    return CouplingParams.from_dimensionless(n, kappa=kappa, omega=spec.omega)


@dataclass(frozen=True)
class Configuration:
    """Occupied quantum-number vectors defining the ground-state determinant.

    For spinless systems all vectors sit in `up` and `down` is empty.  The
    vectors within each species are pairwise distinct.  degeneracy counts the
    energy-equivalent configurations; selected_index says which representative
    this is (they are ordered deterministically).
    """

    up: tuple
    down: tuple = ()
    degeneracy: int = 1
    selected_index: int = 0

    def __post_init__(self):
        up = tuple(tuple(int(c) for c in mu) for mu in self.up)
        down = tuple(tuple(int(c) for c in mu) for mu in self.down)
        if len(set(up)) != len(up) or len(set(down)) != len(down):
            raise ModelError("occupied boxes must be distinct within a species")
        if any(c < 0 for mu in up + down for c in mu):
            raise ModelError("quantum numbers must be non-negative")
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)

    @property
    def n_particles(self):
        return len(self.up) + len(self.down)

    @property
    def magnetization(self):
        return 0.5 * (len(self.up) - len(self.down))

    def canonical_key(self):
        return (tuple(sorted(self.down)), tuple(sorted(self.up)))


@dataclass(frozen=True)
class GroundStateSpec:
    """A configuration together with its couplings; input to the kernels."""

    configuration: Configuration
    couplings: CouplingParams

    @property
    def effective_dims(self):
        return effective_dimension(self.configuration)


def box_energy(mu, couplings, spin=None, zeeman=0.0):
    """Single-box energy sum_a (mu_a + 1/2) omega_rel_a, Zeeman-shifted.

    Spin "up" is the lower-energy (field-aligned) species: shift -zeeman/2;
    "down" gets +zeeman/2.
    """
    e = sum((m + 0.5) * w for m, w in zip(mu, couplings.omega_rel))
    if spin == "up":
        e -= 0.5 * zeeman
    elif spin == "down":
        e += 0.5 * zeeman
    elif spin is not None:
        raise ModelError(f"unknown spin species {spin!r}")
    return e


def _boxes_within(couplings, budget):
    """All quantum-number vectors with excitation energy <= budget."""
    w = couplings.omega_rel
    ranges = [range(int(budget / wi) + 1) for wi in w]
    out = []
    for mu in itertools.product(*ranges):
        exc = sum(m * wi for m, wi in zip(mu, w))
        if exc <= budget:
            out.append((mu, exc))
    return out


def ground_configuration(spec_or_couplings, n_particles=None, *, spinful=False,
                         zeeman=0.0, selected_index=0, max_enumeration=20000):
    """Minimal-energy filling of N distinct boxes (per species when spinful).

    Enumerates all boxes below an energy budget that provably covers the
    optimum (expanding the budget if needed), fills greedily, and resolves
    the partially filled degenerate shell exactly: degeneracy = C(shell, k),
    with a deterministic ordering of the equivalent configurations.
    """
    if isinstance(spec_or_couplings, SystemSpec):
        spec = spec_or_couplings
        couplings = derive_couplings(spec)
        n_particles = spec.n_particles
        spinful = spec.spinful
        zeeman = spec.zeeman
    else:
        couplings = spec_or_couplings
        if n_particles is None:
            n_particles = couplings.n_particles
    n = n_particles
    species = [("up", -0.5 * zeeman), ("down", +0.5 * zeeman)] if spinful \
        else [("up", 0.0)]

    wmin = min(couplings.omega_rel)
    budget = (n + 1) * wmin + abs(zeeman)
    zero_point = 0.5 * sum(couplings.omega_rel)
    for _ in range(60):
        candidates = []
        boxes = _boxes_within(couplings, budget)
        for rank, (label, shift) in enumerate(species):
            for mu, exc in boxes:
                candidates.append((zero_point + exc + shift, rank, mu))
        candidates.sort()
        if len(candidates) <= n:
            budget *= 2
            continue
        scale = abs(candidates[n - 1][0]) + 1.0
        # provably sufficient once every species' enumeration ceiling clears
        # the N-th lowest energy (no un-enumerated box can enter the optimum)
        ceiling = zero_point + budget + min(s for _, s in species)
        if ceiling > candidates[n - 1][0] + 2 * ENERGY_TOL * scale:
            break
        budget *= 2
    else:
        raise ModelError("box enumeration failed to converge")

    tol = ENERGY_TOL * scale
    threshold = candidates[n - 1][0]
    core = [c for c in candidates if c[0] < threshold - tol]
    shell = [c for c in candidates if abs(c[0] - threshold) <= tol]
    take = n - len(core)
    degeneracy = comb(len(shell), take)

    def build(chosen):
        up = tuple(sorted(mu for _, rank, mu in core + chosen if rank == 0))
        down = tuple(sorted(mu for _, rank, mu in core + chosen if rank == 1))
        return Configuration(up=up, down=down, degeneracy=degeneracy,
                             selected_index=selected_index)

    if degeneracy == 1 or degeneracy > max_enumeration:
        if selected_index != 0 and degeneracy > max_enumeration:
            raise ModelError(
                f"degenerate set of size {degeneracy} too large to enumerate")
        return build(shell[:take])

    configs = sorted((build(list(ch)) for ch in
                      itertools.combinations(shell, take)),
                     key=lambda c: (-c.magnetization, c.canonical_key()))
    if not 0 <= selected_index < degeneracy:
        raise ModelError(f"selected_index outside degenerate set of "
                         f"size {degeneracy}")
    return configs[selected_index]


def zeeman_ground_configuration(spec):
    """Ground configuration of a spinful system in a magnetic field."""
    if not spec.spinful:
        raise ModelError("zeeman_ground_configuration needs a spinful spec")
    return ground_configuration(spec)


def effective_dimension(configuration):
    """Smallest n' with mu^(a) = 0 for every occupied box and a > n'."""
    occupied = configuration.up + configuration.down
    n_dims = len(occupied[0]) if occupied else 0
    n_eff = 0
    for mu in occupied:
        for a, m in enumerate(mu):
            if m > 0:
                n_eff = max(n_eff, a + 1)
    return min(n_eff if n_eff else 1, n_dims)


def kappa_critical_3_2(chi):
    """Configuration-transition coupling for three fermions in two dimensions.

    Below this kappa the ground state is effectively one-dimensional; the line
    follows from equating the total box energies of the two candidate
    configurations, kappa_crit = -4/3 + chi^2/3.
    """
    return (chi * chi - 4.0) / 3.0


def find_configuration_transition(n_particles, n_dims, chi, kappa_lo, kappa_hi,
                                  *, tol=1e-6, grid=64, spinful=False,
                                  zeeman=0.0):
    """Locate a ground-configuration change along kappa at fixed detuning.

    Scans a grid over [kappa_lo, kappa_hi], then bisects the first bracketed
    change down to `tol`.  Returns the critical kappa, or None when the
    configuration is the same across the whole scanned range.
    """
    def config_at(kappa):
        cp = CouplingParams.from_dimensionless(
            n_particles, kappa=(kappa,) + (kappa / chi ** 2,) * (n_dims - 1))
        return ground_configuration(cp, n_particles, spinful=spinful,
                                    zeeman=zeeman).canonical_key()

    kappas = [kappa_lo + (kappa_hi - kappa_lo) * i / (grid - 1)
              for i in range(grid)]
    keys = [config_at(k) for k in kappas]
    for i in range(grid - 1):
        if keys[i] != keys[i + 1]:
            lo, hi = kappas[i], kappas[i + 1]
            ref = keys[i]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if config_at(mid) == ref:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    return None


def critical_detuning(delta):
    """Detuning above which the transverse occupation family stays subleading."""
    return (243.0 / 40.0) ** 0.25 * delta ** -1.5


def detuning_exceeds_critical(delta, chi):
    """True when the detuning chi lies beyond the critical line for delta."""
    if not 0 < delta < 1:
        raise ModelError("delta must lie in (0, 1)")
    if chi < 1:
        raise ModelError("detuning chi must be >= 1")
    return chi > critical_detuning(delta)
