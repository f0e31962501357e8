"""Pure-state linear algebra: Schmidt forms, measurements and Born-rule tables."""
from __future__ import annotations

import enum
import itertools
import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .behavior import Behavior, Scenario
from .errors import (ArityError, NormalizationError, ShapeError,
                     ZeroProbabilityError)

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
DEFAULT_CLASS_TOL = 1e-9
ZERO_PROB_TOL = 1e-14


def _canonical_phase(vec, rel=1e-10):
    """Return ``vec`` times the phase making its first significant entry real-positive."""
    flat = vec.ravel()
    scale = np.max(np.abs(flat)) if flat.size else 0.0
    if scale == 0.0:
        return vec
    idx = int(np.argmax(np.abs(flat) > rel * scale))
    phase = flat[idx] / abs(flat[idx])
    return vec / phase


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on an ordered list of parties.

    Amplitudes are stored flat in row-major party order; the global phase is
    fixed so that the first significant amplitude is real and positive.
    """

    party_dims: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"invalid party dimensions {dims}")
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != int(np.prod(dims)):
            raise ShapeError(
                f"{amps.size} amplitudes do not match dims {dims} "
                f"(expected {int(np.prod(dims))})")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"state norm {norm!r} differs from 1")
        amps = _canonical_phase(amps)
        amps.setflags(write=False)
        object.__setattr__(self, "party_dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, party_dims, amplitudes, normalize=False):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(amps)
            if norm < ZERO_PROB_TOL:
                raise NormalizationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(tuple(party_dims), amps)

    @property
    def n_parties(self):
        return len(self.party_dims)

    def tensor(self):
        """Amplitudes reshaped to one axis per party."""
        return self.amplitudes.reshape(self.party_dims)

    def kron(self, other: "StateVector") -> "StateVector":
        return StateVector(self.party_dims + other.party_dims,
                           np.kron(self.amplitudes, other.amplitudes))

    def permute(self, order: Sequence[int]) -> "StateVector":
        order = list(order)
        t = np.transpose(self.tensor(), order)
        return StateVector(tuple(self.party_dims[k] for k in order), t.ravel())

    def overlap(self, other: "StateVector") -> complex:
        if self.party_dims != other.party_dims:
            raise ShapeError("overlap of states with different dims")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_json(self):
        return {"dims": list(self.party_dims),
                "re": [float(v) for v in self.amplitudes.real],
                "im": [float(v) for v in self.amplitudes.imag]}

    @classmethod
    def from_json(cls, data, normalize=False):
        for key in ("dims", "re", "im"):
            if key not in data:
                raise ShapeError(f"state JSON is missing field '{key}'")
        if len(data["re"]) != len(data["im"]):
            raise ShapeError("state JSON fields 're' and 'im' differ in length")
        amps = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        return cls.from_amplitudes(data["dims"], amps, normalize=normalize)


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """Schmidt decomposition ``sum_i sqrt(coefficients[i]) |left_i>|right_i>``.

    ``coefficients`` are squared Schmidt coefficients (probabilities), sorted
    descending.  Basis arrays hold one ket per row.
    """

    coefficients: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        amps = np.sqrt(self.coefficients)
        return np.einsum("i,ia,ib->ab", amps, self.left_basis, self.right_basis).ravel()

    @property
    def dims(self):
        return self.left_basis.shape[1], self.right_basis.shape[1]


class Entanglement(enum.Enum):
    SEPARABLE = "Separable"
    PARTIALLY_ENTANGLED = "PartiallyEntangled"
    MAXIMALLY_ENTANGLED = "MaximallyEntangled"


@dataclass(frozen=True)
class EntanglementClass:
    kind: Entanglement
    tol: float

    def __str__(self):
        return self.kind.value


def schmidt_decompose(state: StateVector) -> SchmidtForm:
    """Schmidt decomposition of a bipartite pure state via SVD."""
    if state.n_parties != 2:
        raise ArityError(f"Schmidt decomposition needs 2 parties, got {state.n_parties}")
    d_a, d_b = state.party_dims
    mat = state.amplitudes.reshape(d_a, d_b)
    u, s, vh = np.linalg.svd(mat)
    r = min(d_a, d_b)
    left = u[:, :r].T.copy()
    right = vh[:r, :].copy()
    for i in range(r):
        if s[i] <= 1e-15:
            continue
        flat = left[i]
        idx = int(np.argmax(np.abs(flat) > 1e-12))
        phase = flat[idx] / abs(flat[idx])
        left[i] = left[i] / phase
        right[i] = right[i] * phase
    coeffs = s[:r] ** 2
    coeffs = coeffs / coeffs.sum()
    for arr in (coeffs, left, right):
        arr.setflags(write=False)
    return SchmidtForm(coeffs, left, right)


def classify_entanglement(sf: SchmidtForm, tol: float = DEFAULT_CLASS_TOL) -> EntanglementClass:
    if tol <= 0:
        raise ValueError("classification tolerance must be positive")
    nonzero = np.asarray([c for c in sf.coefficients if c > tol])
    if nonzero.size <= 1:
        kind = Entanglement.SEPARABLE
    elif nonzero.max() - nonzero.min() <= tol:
        kind = Entanglement.MAXIMALLY_ENTANGLED
    else:
        kind = Entanglement.PARTIALLY_ENTANGLED
    return EntanglementClass(kind, tol)


def check_effect(matrix, herm_tol=1e-12, psd_tol=1e-10):
    """Raise unless ``matrix`` is a Hermitian positive semidefinite operator."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"effect must be square, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ShapeError("effect is not Hermitian")
    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -psd_tol:
        raise ShapeError("effect is not positive semidefinite")
    return m


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """One POVM per input; ``effects[x, a]`` is the effect of output ``a`` on input ``x``."""

    effects: np.ndarray

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=complex)
        if eff.ndim != 4 or eff.shape[2] != eff.shape[3]:
            raise ShapeError(f"effects must have shape (inputs, outputs, d, d), got {eff.shape}")
        d = eff.shape[2]
        for x in range(eff.shape[0]):
            for a in range(eff.shape[1]):
                check_effect(eff[x, a])
            if np.max(np.abs(eff[x].sum(axis=0) - np.eye(d))) > 1e-10:
                raise ShapeError(f"effects of input {x} do not sum to the identity")
        eff = eff.copy()
        eff.setflags(write=False)
        object.__setattr__(self, "effects", eff)

    @property
    def inputs(self):
        return self.effects.shape[0]

    @property
    def outputs(self):
        return self.effects.shape[1]

    @property
    def dim(self):
        return self.effects.shape[2]

    @classmethod
    def projective(cls, bases):
        """Family from one orthonormal basis (rows) per input."""
        mats = []
        for basis in bases:
            b = np.asarray(basis, dtype=complex)
            mats.append([np.outer(v, v.conj()) for v in b])
        return cls(np.asarray(mats))

    @classmethod
    def binary(cls, projectors):
        """Two-outcome family ``{Pi, 1 - Pi}`` for each given projector."""
        mats = []
        for p in projectors:
            p = np.asarray(p, dtype=complex)
            mats.append([p, np.eye(p.shape[0]) - p])
        return cls(np.asarray(mats))

    def to_json(self):
        return {"re": self.effects.real.tolist(), "im": self.effects.imag.tolist()}


def born_behavior(state: StateVector, families: Sequence[MeasurementFamily]) -> Behavior:
    """Conditional table ``P(outputs|inputs) = <psi| (x) E^i_{a_i|x_i} |psi>``."""
    n = state.n_parties
    if len(families) != n:
        raise ShapeError(f"{len(families)} measurement families for {n} parties")
    for k, (fam, d) in enumerate(zip(families, state.party_dims)):
        if fam.dim != d:
            raise ShapeError(f"party {k}: effects act on dim {fam.dim}, state has dim {d}")
    letters = iter(string.ascii_letters)
    ket = [next(letters) for _ in range(n)]
    bra = [next(letters) for _ in range(n)]
    xs = [next(letters) for _ in range(n)]
    as_ = [next(letters) for _ in range(n)]
    subs = ["".join(ket), "".join(bra)]
    subs += [xs[k] + as_[k] + bra[k] + ket[k] for k in range(n)]
    expr = ",".join(subs) + "->" + "".join(xs) + "".join(as_)
    psi = state.tensor()
    table = np.einsum(expr, psi, psi.conj(), *[f.effects for f in families], optimize="greedy")
    table = table.real
    if table.min() < -1e-10:
        raise ShapeError(f"Born rule produced a negative probability {table.min()!r}")
    table = np.where(table < 0, 0.0, table)
    scenario = Scenario(tuple(f.inputs for f in families), tuple(f.outputs for f in families))
    return Behavior(scenario, table)


def project_residual(state: StateVector, measured_parties: Sequence[int],
                     outcome_vectors: Sequence[np.ndarray]):
    """Project ``measured_parties`` onto ``outcome_vectors``.

    Returns the renormalized state of the remaining parties (in their
    original order) and the outcome probability.
    """
    measured = list(measured_parties)
    if len(measured) != len(outcome_vectors):
        raise ShapeError("one outcome vector is needed per measured party")
    if len(set(measured)) != len(measured) or any(not 0 <= p < state.n_parties for p in measured):
        raise ShapeError(f"invalid measured parties {measured}")
    if len(measured) >= state.n_parties:
        raise ShapeError("at least one party must remain unmeasured")
    t = state.tensor()
    # Contract from the highest axis down so lower axis indices stay valid.
    for p, v in sorted(zip(measured, outcome_vectors), key=lambda pv: -pv[0]):
        v = np.asarray(v, dtype=complex).ravel()
        if v.size != state.party_dims[p]:
            raise ShapeError(f"outcome vector for party {p} has dim {v.size}")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise NormalizationError(f"outcome vector for party {p} is not unit norm")
        t = np.tensordot(t, v.conj(), axes=([p], [0]))
    prob = float(np.vdot(t.ravel(), t.ravel()).real)
    if prob < ZERO_PROB_TOL:
        raise ZeroProbabilityError(f"outcome has probability {prob!r}")
    remaining = tuple(d for k, d in enumerate(state.party_dims) if k not in measured)
    residual = StateVector(remaining, t.ravel() / np.sqrt(prob))
    return residual, min(prob, 1.0)


def _gram_schmidt(vectors, dim, tol=1e-10):
    out = []
    for v in vectors:
        w = np.asarray(v, dtype=complex).copy()
        for _ in range(2):
            for u in out:
                w = w - np.vdot(u, w) * u
        nrm = np.linalg.norm(w)
        if nrm > tol:
            out.append(w / nrm)
        if len(out) == dim:
            break
    return out


def perturb_basis(basis, idx_a: int, idx_b: int, c0: complex, c1: complex) -> np.ndarray:
    """Replace ``basis[idx_a]`` by ``c0 basis[idx_a] + c1 basis[idx_b]`` and re-orthonormalize.

    The remaining elements are completed by Gram-Schmidt over the original
    basis in index order; rows of the returned array are the new kets.
    """
    b = np.asarray(basis, dtype=complex)
    d = b.shape[0]
    if idx_a == idx_b:
        raise ValueError("idx_a and idx_b must differ")
    if abs(abs(c0) ** 2 + abs(c1) ** 2 - 1.0) > NORM_TOL:
        raise NormalizationError("|c0|^2 + |c1|^2 must equal 1")
    new = c0 * b[idx_a] + c1 * b[idx_b]
    rest = [b[j] for j in range(d) if j != idx_a] + [b[idx_a]]
    completed = _gram_schmidt([new] + rest, d)
    out = np.empty_like(b)
    out[idx_a] = completed[0]
    others = iter(completed[1:])
    for j in range(d):
        if j != idx_a:
            out[j] = next(others)
    return out


def is_orthonormal(basis, tol=ORTHO_TOL) -> bool:
    b = np.asarray(basis, dtype=complex)
    return bool(np.max(np.abs(b.conj() @ b.T - np.eye(b.shape[0]))) <= tol)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random_state(party_dims, seed=None) -> StateVector:
    """Haar-random pure state; deterministic for a given integer seed."""
    dims = tuple(int(d) for d in party_dims)
    rng = _rng(seed)
    size = int(np.prod(dims))
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return StateVector(dims, v / np.linalg.norm(v))


def haar_random_unitary(dim: int, seed=None) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=_rng(seed))


def schmidt_rank_across(state: StateVector, part: Sequence[int], tol=1e-12) -> int:
    """Number of squared Schmidt coefficients above ``tol`` across ``part | rest``."""
    part = sorted(set(part))
    rest = [k for k in range(state.n_parties) if k not in part]
    if not part or not rest:
        raise ValueError("bipartition sides must be nonempty")
    t = np.transpose(state.tensor(), part + rest)
    rows = int(np.prod([state.party_dims[k] for k in part]))
    s = np.linalg.svd(t.reshape(rows, -1), compute_uv=False)
    return int(np.sum(s ** 2 > tol))


def canonical_cuts(n: int):
    """Bipartitions ``M | rest`` of ``n`` parties with party 0 in ``M``."""
    for size in range(1, n):
        for combo in itertools.combinations(range(1, n), size - 1):
            yield (0,) + combo


def non_gme_cut(state: StateVector, tol=1e-12):
    """Return a cut across which ``state`` is a product, or ``None`` if it is GME."""
    for m in canonical_cuts(state.n_parties):
        if schmidt_rank_across(state, m, tol) < 2:
            return m
    return None


# -- named states ---------------------------------------------------------

def basis_state(dims, indices) -> StateVector:
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[np.ravel_multi_index(tuple(indices), tuple(dims))] = 1.0
    return StateVector(tuple(dims), v)


def schmidt_state(coefficients, dims=None) -> StateVector:
    """``sum_i sqrt(coefficients[i]) |ii>`` on ``dims`` (defaults to square)."""
    lam = np.asarray(coefficients, dtype=float)
    if dims is None:
        dims = (lam.size, lam.size)
    mat = np.zeros(dims, dtype=complex)
    for i, c in enumerate(lam):
        mat[i, i] = np.sqrt(c)
    return StateVector.from_amplitudes(dims, mat.ravel(), normalize=True)


def maximally_entangled(d=2) -> StateVector:
    return schmidt_state(np.full(d, 1.0 / d))


def ghz_state(n=3, d=2) -> StateVector:
    v = np.zeros(d ** n, dtype=complex)
    for i in range(d):
        v[np.ravel_multi_index((i,) * n, (d,) * n)] = 1.0
    return StateVector.from_amplitudes((d,) * n, v, normalize=True)


def w_state(n=3) -> StateVector:
    v = np.zeros(2 ** n, dtype=complex)
    for k in range(n):
        v[1 << k] = 1.0
    return StateVector.from_amplitudes((2,) * n, v, normalize=True)
