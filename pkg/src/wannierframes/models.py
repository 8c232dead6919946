"""Periodic operator families in the reduced Bloch convention.

A model is a map k -> L(k) into Hermitian N x N matrices, exactly periodic
under the dual lattice: evaluate(k) first reduces k to fractional
coordinates theta in [0, 1)^n (k = sum_i theta_i b_i) and builds the matrix
from theta alone, so L(k + b_i) = L(k) holds by construction.

Bundled families:

* ``schrodinger1d`` -- 1D Schrodinger operator -d^2/dx^2 + V(x) on a unit
  cell, discretized in the truncated plane-wave basis e^{i(k + 2 pi g) x},
  |g| <= g_max.  The kinetic part is diag((k + 2 pi g)^2) and the potential
  couples g, g' through its Fourier coefficient V_hat(g - g').
* ``haldane`` -- two-band honeycomb model with staggered onsite energy,
  real nearest-neighbour hopping t1 and complex next-nearest-neighbour
  hopping t2 e^{+-i phi}.  The band gap closes on the lines
  |m_onsite| = 3 sqrt(3) t2 |sin phi|.
* ``hofstadter`` -- square lattice at rational flux p/q per plaquette in
  Landau gauge; the magnetic cell carries a q-dimensional fiber and the
  Bloch matrix is the q x q Harper matrix with a boundary Peierls phase.
* ``custom`` -- generic tight-binding family from an explicit hopping list.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .errors import InvalidSpec

HERMITICITY_RTOL = 1e-13

# values of theta within this distance of 1 are wrapped to 0 so that the
# reduction is stable at the cell boundary
_EDGE_SNAP = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class Lattice:
    """A Bravais lattice and its dual.

    ``basis`` rows are the primitive vectors a_j; ``dual_basis`` rows are
    the dual vectors b_i with (b_i, a_j) = 2 pi delta_ij.
    """

    basis: np.ndarray
    dual_basis: np.ndarray

    @classmethod
    def from_basis(cls, basis) -> "Lattice":
        a = np.asarray(basis, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidSpec(f"lattice basis must be square, got shape {a.shape}")
        n = a.shape[0]
        if n not in (1, 2):
            raise InvalidSpec(f"only 1D and 2D lattices supported, got n = {n}")
        det = np.linalg.det(a)
        if abs(det) < 1e-12:
            raise InvalidSpec("lattice basis is singular")
        dual = 2.0 * np.pi * np.linalg.inv(a).T
        return cls(basis=a, dual_basis=dual)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def reduced_coords(self, k) -> np.ndarray:
        """Fractional coordinates theta of k in the dual basis, wrapped to [0, 1)."""
        k = np.asarray(k, dtype=float)
        theta = self.basis @ k / (2.0 * np.pi)
        theta = theta - np.floor(theta)
        theta[theta > 1.0 - _EDGE_SNAP] = 0.0
        return theta

    def cartesian_k(self, theta) -> np.ndarray:
        """The wave vector sum_i theta_i b_i."""
        return np.asarray(theta, dtype=float) @ self.dual_basis

    def cell_vector(self, gamma) -> np.ndarray:
        """The lattice vector sum_j gamma_j a_j."""
        return np.asarray(gamma, dtype=float) @ self.basis


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a periodic operator family."""

    kind: str
    parameters: dict


@dataclasses.dataclass(frozen=True, eq=False)
class BlochOperatorFamily:
    """k -> L(k), Hermitian and exactly dual-periodic.

    ``builder`` maps reduced coordinates theta (shape (n,)) to the N x N
    matrix; ``evaluate`` performs the reduction and a Hermiticity guard.

    ``frame_map``, when present, is the unitary change from the fiber
    coordinates of L to the coordinates in which the band subspaces are
    continuous across the zone wrap.  Tight-binding fibers (one entry per
    site in the cell) need no change and leave it as None.  Plane-wave
    fibers do need it: the eigenvector of slot index g at theta -> 1 turns
    into the eigenvector of slot g - 1 at theta = 0, so sections stored in
    raw slot coordinates jump at the wrap no matter the gauge.  Multiplying
    by e^{i k x} (discretized on the slot grid) removes the mismatch; see
    ``_bloch_phase_frame``.
    """

    lattice: Lattice
    fiber_dim: int
    kind: str
    builder: Callable[[np.ndarray], np.ndarray]
    frame_map: Callable[[np.ndarray], np.ndarray] | None = None

    def evaluate_reduced(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.lattice.dim,):
            raise InvalidSpec(
                f"expected {self.lattice.dim} reduced coordinates, got {theta.shape}"
            )
        mat = self.builder(theta)
        dev = np.linalg.norm(mat - mat.conj().T)
        scale = max(np.linalg.norm(mat), 1.0)
        if dev > HERMITICITY_RTOL * scale:
            raise InvalidSpec(
                f"model '{self.kind}' produced a non-Hermitian matrix at "
                f"theta = {theta}: deviation {dev:.3e}"
            )
        return mat

    def evaluate(self, k) -> np.ndarray:
        """L(k) for a Cartesian wave vector k."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if k.shape != (self.lattice.dim,):
            raise InvalidSpec(
                f"expected a {self.lattice.dim}-component wave vector, got {k.shape}"
            )
        return self.evaluate_reduced(self.lattice.reduced_coords(k))


def evaluate_bloch(family: BlochOperatorFamily, k) -> np.ndarray:
    """Functional alias for ``family.evaluate(k)``."""
    return family.evaluate(k)


# ---------------------------------------------------------------------------
# schrodinger1d
# ---------------------------------------------------------------------------

def _normalize_potential(potential) -> dict[int, complex]:
    """Accept {g: coefficient} with int keys; check conjugate symmetry."""
    coeffs: dict[int, complex] = {}
    for key, value in dict(potential).items():
        g = int(key)
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise InvalidSpec(f"potential coefficient for g={g} must be scalar or [re, im]")
            value = complex(value[0], value[1])
        coeffs[g] = complex(value)
    for g, v in coeffs.items():
        partner = coeffs.get(-g, 0.0 + 0.0j)
        if abs(np.conj(v) - partner) > 1e-14 * max(1.0, abs(v)):
            raise InvalidSpec(
                f"potential coefficients must satisfy V(-g) = conj(V(g)); "
                f"violated at g = {g}"
            )
    return coeffs


def _bloch_phase_frame(g_max: int) -> Callable[[np.ndarray], np.ndarray]:
    """Unitary taking cell-periodic slot coordinates to Bloch-wave ones.

    A slot vector phi encodes the cell profile h(s) = sum_g phi_g e^{2 pi i g s}.
    The returned map W(theta) gives the slot coordinates of e^{2 pi i theta s} h(s),
    evaluated on the N-point sample grid s_t = t/N (so the product stays
    band-limited and W is exactly unitary).  W(0) = I and W(1) is the cyclic
    up-shift g -> g + 1, which is precisely the relabeling the eigenvectors
    undergo across the zone wrap; conjugating the band projectors by W makes
    them continuous on the torus up to the (tiny) eigenvector amplitude at
    the slot-window edge.
    """
    n_pw = 2 * g_max + 1
    samples = np.arange(n_pw)
    gvec = np.arange(-g_max, g_max + 1)
    # synthesis matrix: coefficients -> samples, scaled unitary
    synth = np.exp(2.0j * np.pi * np.outer(samples, gvec) / n_pw) / np.sqrt(n_pw)

    def frame(theta: np.ndarray) -> np.ndarray:
        phases = np.exp(2.0j * np.pi * theta[0] * samples / n_pw)
        return synth.conj().T @ (phases[:, None] * synth)

    return frame


def _build_schrodinger1d(parameters: dict) -> BlochOperatorFamily:
    params = dict(parameters)
    g_max = params.pop("g_max", 8)
    potential = params.pop("potential", {})
    if params:
        raise InvalidSpec(f"unknown schrodinger1d parameters: {sorted(params)}")
    g_max = int(g_max)
    if g_max < 1:
        raise InvalidSpec(f"g_max must be >= 1, got {g_max}")
    coeffs = _normalize_potential(potential)

    lattice = Lattice.from_basis([[1.0]])
    gvec = np.arange(-g_max, g_max + 1)
    n_pw = gvec.size
    vmat = np.zeros((n_pw, n_pw), dtype=complex)
    for i, gi in enumerate(gvec):
        for j, gj in enumerate(gvec):
            vmat[i, j] = coeffs.get(int(gi - gj), 0.0)

    def builder(theta: np.ndarray) -> np.ndarray:
        k = 2.0 * np.pi * theta[0]
        kinetic = (k + 2.0 * np.pi * gvec) ** 2
        return np.diag(kinetic.astype(complex)) + vmat

    return BlochOperatorFamily(
        lattice=lattice,
        fiber_dim=n_pw,
        kind="schrodinger1d",
        builder=builder,
        frame_map=_bloch_phase_frame(g_max),
    )


# ---------------------------------------------------------------------------
# haldane
# ---------------------------------------------------------------------------

# cell offsets of the three t2 e^{+i phi} hops on sublattice A; sublattice B
# carries the conjugate amplitudes on the same offsets
_HALDANE_NNN = np.array([[1, 0], [-1, 1], [0, -1]], dtype=float)


def _build_haldane(parameters: dict) -> BlochOperatorFamily:
    params = dict(parameters)
    t1 = float(params.pop("t1", 1.0))
    t2 = float(params.pop("t2", 1.0 / 3.0))
    phi = float(params.pop("phi_flux", math.pi / 2.0))
    m_onsite = float(params.pop("m_onsite", 0.0))
    if params:
        raise InvalidSpec(f"unknown haldane parameters: {sorted(params)}")

    lattice = Lattice.from_basis([[1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

    def builder(theta: np.ndarray) -> np.ndarray:
        ph = 2.0 * np.pi * (_HALDANE_NNN @ theta)
        haa = m_onsite + 2.0 * t2 * np.sum(np.cos(ph + phi))
        hbb = -m_onsite + 2.0 * t2 * np.sum(np.cos(ph - phi))
        hab = t1 * (
            1.0
            + np.exp(-2.0j * np.pi * theta[0])
            + np.exp(-2.0j * np.pi * theta[1])
        )
        return np.array([[haa, hab], [np.conj(hab), hbb]], dtype=complex)

    return BlochOperatorFamily(
        lattice=lattice, fiber_dim=2, kind="haldane", builder=builder
    )


def haldane_is_topological(t2: float, phi_flux: float, m_onsite: float) -> bool:
    """Phase test |m| < 3 sqrt(3) t2 |sin phi| (gap closed counts as not topological)."""
    return abs(m_onsite) < 3.0 * math.sqrt(3.0) * abs(t2) * abs(math.sin(phi_flux))


# ---------------------------------------------------------------------------
# hofstadter
# ---------------------------------------------------------------------------

def _build_hofstadter(parameters: dict) -> BlochOperatorFamily:
    params = dict(parameters)
    p = int(params.pop("p", 1))
    q = int(params.pop("q", 3))
    t = float(params.pop("t", 1.0))
    if params:
        raise InvalidSpec(f"unknown hofstadter parameters: {sorted(params)}")
    if q < 1:
        raise InvalidSpec(f"flux denominator must be >= 1, got q = {q}")
    if math.gcd(abs(p), q) != 1:
        raise InvalidSpec(f"flux p/q = {p}/{q} must be in lowest terms")

    lattice = Lattice.from_basis(np.eye(2))
    jvec = np.arange(q)

    def builder(theta: np.ndarray) -> np.ndarray:
        diag = 2.0 * t * np.cos(2.0 * np.pi * theta[1] + 2.0 * np.pi * p * jvec / q)
        hop = np.zeros((q, q), dtype=complex)
        for j in range(q):
            amp = t
            if j == q - 1:
                amp = t * np.exp(2.0j * np.pi * theta[0])
            hop[j, (j + 1) % q] += amp
        return np.diag(diag.astype(complex)) + hop + hop.conj().T

    return BlochOperatorFamily(
        lattice=lattice, fiber_dim=q, kind="hofstadter", builder=builder
    )


# ---------------------------------------------------------------------------
# custom tight-binding
# ---------------------------------------------------------------------------

def _build_custom(parameters: dict) -> BlochOperatorFamily:
    params = dict(parameters)
    dim = int(params.pop("dim", 2))
    norb = int(params.pop("norbitals", 1))
    basis = params.pop("basis", None)
    hops = params.pop("hops", [])
    onsite = params.pop("onsite", None)
    if params:
        raise InvalidSpec(f"unknown custom parameters: {sorted(params)}")
    if norb < 1:
        raise InvalidSpec(f"norbitals must be >= 1, got {norb}")
    lattice = Lattice.from_basis(np.eye(dim) if basis is None else basis)
    if lattice.dim != dim:
        raise InvalidSpec("basis shape does not match dim")

    if onsite is None:
        onsite = np.zeros(norb)
    onsite = np.asarray(onsite, dtype=float)
    if onsite.shape != (norb,):
        raise InvalidSpec(f"onsite must have {norb} real entries")

    # each entry is (i, j, offset..., re, im): amplitude re + i*im for the
    # hop from orbital j in cell `offset` to orbital i in the home cell;
    # the Hermitian partner is added automatically, so list each hop once
    parsed = []
    for idx, entry in enumerate(hops):
        entry = list(entry)
        if len(entry) != 4 + dim:
            raise InvalidSpec(
                f"hop #{idx} must be [i, j, {dim} cell offsets, re, im], got {entry}"
            )
        i, j = int(entry[0]), int(entry[1])
        if not (0 <= i < norb and 0 <= j < norb):
            raise InvalidSpec(f"hop #{idx} orbital index out of range: {entry}")
        offset = np.array(entry[2 : 2 + dim], dtype=float)
        amp = complex(entry[-2], entry[-1])
        parsed.append((i, j, offset, amp))

    def builder(theta: np.ndarray) -> np.ndarray:
        hop = np.zeros((norb, norb), dtype=complex)
        for i, j, offset, amp in parsed:
            hop[i, j] += amp * np.exp(2.0j * np.pi * (offset @ theta))
        return np.diag(onsite.astype(complex)) + hop + hop.conj().T

    return BlochOperatorFamily(
        lattice=lattice, fiber_dim=norb, kind="custom", builder=builder
    )


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

_BUILDERS = {
    "schrodinger1d": _build_schrodinger1d,
    "haldane": _build_haldane,
    "hofstadter": _build_hofstadter,
    "custom": _build_custom,
}


def build_model(spec: ModelSpec) -> BlochOperatorFamily:
    """Construct the operator family described by ``spec``.

    Raises InvalidSpec for unknown kinds, unknown or out-of-range
    parameters, and non-Hermitian potential data.
    """
    if spec.kind not in _BUILDERS:
        raise InvalidSpec(
            f"unknown model kind '{spec.kind}'; expected one of {sorted(_BUILDERS)}"
        )
    return _BUILDERS[spec.kind](dict(spec.parameters))
