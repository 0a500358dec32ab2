"""Pauli-polytope constraint catalogs and pinning diagnostics.

The admissible occupation vectors of pure N-fermion states with a
d-dimensional one-particle space form a polytope cut out of the ordered
simplex by finitely many affine inequalities D_j(lam) = k0_j + k_j . lam >= 0
with rational coefficients.  Catalogs of those inequalities ship as data
files; this module loads and validates them, evaluates distances (D_min to
the constraint boundary, D_HF to the single-determinant point), classifies
the simplex faces whose saturation already forces a constraint to saturate,
and estimates the non-triviality exponent Q from the nearest such face.

A brute-force sampler over random pure states doubles as the validation
oracle for every shipped catalog: no valid constraint can come out negative
on a sampled spectrum.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

__all__ = [
    "Constraint",
    "GpcCatalog",
    "SigmaFace",
    "PinningReport",
    "CatalogError",
    "catalog_dir",
    "available_settings",
    "load_catalog",
    "evaluate_constraints",
    "d_min",
    "d_hf",
    "pinning_faces",
    "q_parameter",
    "random_state_nons",
    "slater_subsets",
    "one_body_transitions",
]

CATALOG_ENV = "HARMONIUM_CATALOG_DIR"


class CatalogError(ValueError):
    """Malformed or inconsistent constraint data."""


@dataclass(frozen=True)
class Constraint:
    """One affine inequality k0 + k . lam >= 0 with exact coefficients."""

    k0: Fraction
    k: tuple

    def value(self, lam):
        return float(self.k0) + float(np.dot(self.k_float, lam))

    @property
    def k_float(self):
        return np.array([float(c) for c in self.k])

    def value_exact(self, indicator):
        """Exact value at a 0/1 occupation pattern (iterable of 0/1)."""
        return self.k0 + sum(c for c, z in zip(self.k, indicator) if z)

    def norm(self):
        return math.sqrt(sum(float(c) ** 2 for c in self.k))


@dataclass(frozen=True)
class GpcCatalog:
    """Constraint list for one (n_particles, n_orbitals) setting."""

    n_particles: int
    n_orbitals: int
    constraints: tuple
    provenance: str = ""

    @property
    def setting(self):
        return (self.n_particles, self.n_orbitals)

    def matrix(self):
        """(k0 column, coefficient matrix) as floats."""
        k0 = np.array([float(c.k0) for c in self.constraints])
        k = np.array([[float(x) for x in c.k] for c in self.constraints])
        return k0, k


def catalog_dir():
    """Directory holding the catalog data files (env var overrides)."""
    override = os.environ.get(CATALOG_ENV)
    if override:
        return Path(override)
    return Path(__file__).parent / "catalogs"


def available_settings(directory=None):
    """Settings (N, d) with a catalog file in the data directory."""
    directory = Path(directory) if directory else catalog_dir()
    out = []
    for p in sorted(directory.glob("gpc_*_*.json")):
        parts = p.stem.split("_")
        try:
            out.append((int(parts[1]), int(parts[2])))
        except (IndexError, ValueError):
            continue
    return out


def slater_subsets(d, n):
    """All N-element orbital subsets, as sorted tuples."""
    return list(itertools.combinations(range(d), n))


def _validate_slater_points(catalog):
    """Every single-determinant occupation pattern must satisfy D_j >= 0.

    Determinant spectra are 0/1 vectors; sorted they all coincide with the
    top-filled pattern, which is checked exactly for every subset.
    """
    d, n = catalog.n_orbitals, catalog.n_particles
    sorted_pattern = [1] * n + [0] * (d - n)
    for j, c in enumerate(catalog.constraints):
        if len(c.k) != d:
            raise CatalogError(
                f"constraint {j}: {len(c.k)} coefficients for d={d}")
        if c.value_exact(sorted_pattern) < 0:
            raise CatalogError(
                f"constraint {j} is negative at the filled determinant point")


def load_catalog(source, setting=None, validate=True):
    """Load a catalog from a file path or a (N, d) setting tuple.

    Coefficients are parsed as exact rationals.  Validation checks the
    coefficient counts and the determinant (single Slater) points.
    """
    if isinstance(source, tuple):
        setting = source
        source = catalog_dir() / f"gpc_{setting[0]}_{setting[1]}.json"
    path = Path(source)
    if not path.exists():
        raise CatalogError(
            f"no catalog for setting {setting or path.name} at {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    try:
        n, d = int(raw["N"]), int(raw["d"])
        rows = raw["constraints"]
        constraints = []
        for idx, row in enumerate(rows):
            try:
                k0 = Fraction(str(row["k0"]))
                k = tuple(Fraction(str(x)) for x in row["k"])
            except (ValueError, ZeroDivisionError) as exc:
                raise CatalogError(
                    f"{path}: constraint {idx}: bad rational ({exc})") from exc
            constraints.append(Constraint(k0=k0, k=k))
    except KeyError as exc:
        raise CatalogError(f"{path}: missing field {exc}") from exc
    if setting is not None and (n, d) != tuple(setting):
        raise CatalogError(
            f"{path} holds setting ({n}, {d}), expected {tuple(setting)}")
    catalog = GpcCatalog(n_particles=n, n_orbitals=d,
                         constraints=tuple(constraints),
                         provenance=str(raw.get("provenance", "")))
    if validate:
        _validate_slater_points(catalog)
    return catalog


def evaluate_constraints(values, catalog, euclidean=False):
    """Affine constraint values D_j at a spectrum of matching length."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != catalog.n_orbitals:
        raise ValueError(
            f"spectrum length {values.shape[-1]} does not match catalog "
            f"d={catalog.n_orbitals}")
    k0, k = catalog.matrix()
    raw = k0 + values @ k.T
    if euclidean:
        norms = np.array([c.norm() for c in catalog.constraints])
        return raw / norms
    return raw


def d_min(values, catalog, euclidean=False):
    """Minimal constraint value and its index (raw values by default)."""
    d = evaluate_constraints(values, catalog, euclidean=euclidean)
    j = int(np.argmin(d))
    return float(d[j]), j


def d_hf(values, n_particles):
    """Distance to the single-determinant point: sum_{i<=N} (1 - lam_i)."""
    values = np.asarray(values, dtype=float)
    return float((1.0 - values[:n_particles]).sum())


@dataclass(frozen=True)
class SigmaFace:
    """A simplex face: orbitals pinned to occupation one and to zero.

    pinning_constraints lists the catalog facets that vanish on the whole
    face (checked exactly on the face's 0/1 vertices, which affinely span
    it); saturating the face then forces those facets to saturate.
    """

    ones: tuple
    zeros: tuple
    pinning_constraints: tuple

    def distance(self, values):
        """l1 distance of a sorted spectrum to the face."""
        values = np.asarray(values, dtype=float)
        return float((1.0 - values[list(self.ones)]).sum()
                     + values[list(self.zeros)].sum())

    @property
    def is_pinning(self):
        return bool(self.pinning_constraints)


def _face_pinning_ids(catalog, ones, zeros):
    """Constraints vanishing at every 0/1 vertex of the face (exact)."""
    d, n = catalog.n_orbitals, catalog.n_particles
    free = [i for i in range(d) if i not in ones and i not in zeros]
    need = n - len(ones)
    if need < 0 or need > len(free):
        return ()
    ids = []
    for j, c in enumerate(catalog.constraints):
        base = c.k0 + sum(c.k[i] for i in ones)
        ok = True
        for extra in itertools.combinations(free, need):
            if base + sum(c.k[i] for i in extra) != 0:
                ok = False
                break
        if ok:
            ids.append(j)
    return tuple(ids)


def pinning_faces(catalog, *, prefix_only=True, max_cardinality=None,
                  budget=20000):
    """Enumerate simplex faces and their forced catalog facets.

    With prefix_only (the default, sufficient for sorted spectra) the pinned
    orbitals are taken as a prefix (ones) and suffix (zeros) of the orbital
    ordering.  The general enumeration is capped by `budget`; hitting the cap
    raises rather than silently returning a partial list.
    """
    d, n = catalog.n_orbitals, catalog.n_particles
    faces = []
    if prefix_only:
        combos = [(tuple(range(a)), tuple(range(d - c, d)))
                  for a in range(n + 1) for c in range(d - n + 1)]
    else:
        if max_cardinality is None:
            max_cardinality = 2
        combos = []
        indices = range(d)
        for a in range(min(n, max_cardinality) + 1):
            for ones in itertools.combinations(indices, a):
                rest = [i for i in indices if i not in ones]
                for c in range(max_cardinality - a + 1):
                    for zeros in itertools.combinations(rest, c):
                        combos.append((ones, zeros))
                        if len(combos) > budget:
                            raise CatalogError(
                                "face enumeration budget exceeded")
    for ones, zeros in combos:
        if len(ones) > n or d - len(zeros) < n:
            continue
        faces.append(SigmaFace(
            ones=ones, zeros=zeros,
            pinning_constraints=_face_pinning_ids(catalog, ones, zeros)))
    return faces


@dataclass
class PinningReport:
    """Distances of one (possibly truncated) spectrum to the polytope."""

    setting: tuple
    values: np.ndarray
    constraint_values: np.ndarray
    d_min: float
    argmin: int
    d_hf: float
    q: float | None
    q_face: tuple | None
    truncation_error: float = 0.0
    euclidean: bool = False
    pinned: bool = False

    def to_json_dict(self):
        return {
            "setting": list(self.setting),
            "values": [float(v) for v in self.values],
            "constraint_values": [float(v) for v in self.constraint_values],
            "d_min": self.d_min,
            "argmin": self.argmin,
            "d_hf": self.d_hf,
            "q": self.q,
            "q_face": list(self.q_face) if self.q_face else None,
            "truncation_error": self.truncation_error,
            "euclidean": self.euclidean,
            "pinned": self.pinned,
        }


def q_parameter(values, catalog, faces=None, dmin=None):
    """Non-triviality exponent: log10(nearest forcing face / D_min).

    Faces whose saturation would force a constraint to saturate bound the
    observed D_min from above (up to coefficient scale); Q measures how many
    orders closer the spectrum sits to the constraint boundary than that
    proximity alone explains.  Returns (q, face); q is None when no pinning
    face exists and +inf when the spectrum is exactly pinned.
    """
    values = np.asarray(values, dtype=float)
    if dmin is None:
        dmin, _ = d_min(values, catalog)
    if faces is None:
        faces = pinning_faces(catalog)
    pinning = [f for f in faces if f.is_pinning]
    if not pinning:
        return None, None
    dists = [(f.distance(values), f) for f in pinning]
    best_dist, best_face = min(dists, key=lambda t: t[0])
    if dmin <= 0:
        return math.inf, (best_face.ones, best_face.zeros)
    if best_dist <= 0:
        return 0.0, (best_face.ones, best_face.zeros)
    return (math.log10(best_dist / dmin),
            (best_face.ones, best_face.zeros))


def pinning_report(values, catalog, *, truncation_error=0.0, euclidean=False,
                   faces=None):
    """Full distance diagnostics for one spectrum in one catalog setting."""
    values = np.asarray(values, dtype=float)
    cons = evaluate_constraints(values, catalog, euclidean=euclidean)
    j = int(np.argmin(cons))
    dmin = float(cons[j])
    q, q_face = q_parameter(values, catalog, faces=faces,
                            dmin=float(evaluate_constraints(values, catalog)[j])
                            if euclidean else dmin)
    return PinningReport(
        setting=catalog.setting, values=values, constraint_values=cons,
        d_min=dmin, argmin=j, d_hf=d_hf(values, catalog.n_particles),
        q=q, q_face=q_face, truncation_error=truncation_error,
        euclidean=euclidean, pinned=dmin <= 0.0)


def one_body_transitions(d, n):
    """Sparse action of a'_p a_q on the determinant basis.

    Returns {(p, q): (src, dst, sign)} index arrays over the subset basis:
    applying a'_p a_q maps basis state src to dst with the fermionic sign.
    Diagonal entries (p == q) list the states containing p.
    """
    subsets = slater_subsets(d, n)
    index = {s: i for i, s in enumerate(subsets)}
    table = {}
    for p in range(d):
        for q in range(d):
            src, dst, sign = [], [], []
            for i, s in enumerate(subsets):
                if q not in s:
                    continue
                if p != q:
                    if p in s:
                        continue
                    rest = tuple(x for x in s if x != q)
                    phase = (-1) ** s.index(q)
                    target = tuple(sorted(rest + (p,)))
                    phase *= (-1) ** target.index(p)
                    src.append(i)
                    dst.append(index[target])
                    sign.append(phase)
                else:
                    src.append(i)
                    dst.append(i)
                    sign.append(1)
            table[(p, q)] = (np.array(src, dtype=np.intp),
                             np.array(dst, dtype=np.intp),
                             np.array(sign, dtype=float))
    return table


_TRANSITION_CACHE = {}


def _transitions(d, n):
    key = (d, n)
    if key not in _TRANSITION_CACHE:
        _TRANSITION_CACHE[key] = one_body_transitions(d, n)
    return _TRANSITION_CACHE[key]


def nons_from_amplitudes(amplitudes, d, n):
    """Sorted occupation spectra of pure states given determinant amplitudes.

    amplitudes has shape (..., C(d, n)) and need not be normalized.
    """
    amp = np.asarray(amplitudes, dtype=complex)
    squeeze = amp.ndim == 1
    amp = np.atleast_2d(amp)
    amp = amp / np.linalg.norm(amp, axis=1, keepdims=True)
    table = _transitions(d, n)
    rho = np.empty((amp.shape[0], d, d), dtype=complex)
    for p in range(d):
        src, _, _ = table[(p, p)]
        rho[:, p, p] = (np.abs(amp[:, src]) ** 2).sum(axis=1)
        for q in range(p + 1, d):
            src, dst, sign = table[(p, q)]
            if src.size:
                val = (np.conj(amp[:, dst]) * amp[:, src] * sign).sum(axis=1)
            else:
                val = 0.0
            rho[:, p, q] = val
            rho[:, q, p] = np.conj(val)
    lam = np.linalg.eigvalsh(rho)[:, ::-1].real
    return lam[0] if squeeze else lam


def random_state_nons(n, d, seed, n_samples=1):
    """Occupation spectra of Haar-like random pure N-fermion states.

    Amplitudes over the determinant basis are drawn complex-normal from a
    per-call seeded generator; spectra are sorted decreasingly and normalized
    to the particle number N.
    """
    size = comb(d, n)
    if size > 200000:
        raise ValueError("determinant basis too large for the brute-force map")
    rng = np.random.default_rng(seed)
    amp = rng.standard_normal((n_samples, size)) \
        + 1j * rng.standard_normal((n_samples, size))
    lam = nons_from_amplitudes(amp, d, n)
    return lam[0] if n_samples == 1 else lam
