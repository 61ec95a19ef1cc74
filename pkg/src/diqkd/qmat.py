"""Dense numerics for small quantum systems (dimension <= 16).

Operators are plain complex ``numpy`` arrays. Multipartite spaces are
ordered A (x) B (x) E with the first factor most significant, so the
basis index of ``|i>_A |j>_B |k>_E`` is ``(i*dB + j)*dE + k``.

Outcome indices follow the same convention everywhere: index 0 is the
``+1`` outcome, index 1 the ``-1`` outcome.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import _backend
from .errors import DimensionError, DomainError, NotHermitianError

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
YY = np.kron(SY, SY)

BELL_LABELS = ("phi+", "psi-", "phi-", "psi+")
_S = 1 / math.sqrt(2)
# columns ordered as BELL_LABELS
BELL_BASIS = np.array(
    [
        [_S, 0, _S, 0],
        [0, _S, 0, _S],
        [0, -_S, 0, _S],
        [_S, 0, -_S, 0],
    ],
    dtype=complex,
)


def _square(op, name="operator"):
    a = np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def _require_dim(rho, d, name="rho"):
    a = _square(rho, name)
    if a.shape[0] != d:
        raise DimensionError(f"{name} must be {d}x{d}, got {a.shape[0]}x{a.shape[0]}")
    return a


def is_hermitian(op, tol=HERMITIAN_TOL):
    a = _square(op)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def validate_density(rho, tol=HERMITIAN_TOL):
    """Check Hermiticity, unit trace and positivity; return the array."""
    a = _square(rho, "density matrix")
    if not is_hermitian(a, tol):
        raise NotHermitianError("density matrix is not Hermitian")
    if abs(np.trace(a) - 1) > tol:
        raise DomainError(f"density matrix trace is {np.trace(a).real:.3e}, expected 1")
    w = eigh(a)[0]
    if w[-1] < -tol:
        raise DomainError(f"density matrix has negative eigenvalue {w[-1]:.3e}")
    return a


def dagger(a):
    return np.conj(np.transpose(a))


def kron(a, b):
    """Kronecker product; ``a`` is the most significant factor."""
    return np.kron(_square(a, "a"), _square(b, "b"))


def ket(*bits):
    """Computational basis qubit state, e.g. ``ket(0, 1)`` is ``|01>``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(str(int(b)) for b in bits), 2)] = 1
    return v


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def bell_state(label):
    return BELL_BASIS[:, BELL_LABELS.index(label)].copy()


def partial_trace(rho, dims, keep):
    """Reduced operator on the subsystems listed in ``keep``.

    ``keep`` may be a single index or an iterable; kept subsystems stay in
    their original order.
    """
    a = _square(rho)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionError(f"subsystem dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    n = len(dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep {keep} out of range for {n} subsystems")

    t = a.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    dk = int(np.prod([dims[k] for k in keep]))
    return np.einsum("".join(row) + "".join(col) + "->" + out, t).reshape(dk, dk)


def eigh(op):
    """Hermitian eigendecomposition, eigenvalues in descending order.

    Backed by cyclic Jacobi rotations (compiled when available).
    Returns ``(w, V)`` with ``op = V @ diag(w) @ V^dagger``.
    """
    a = _square(op)
    if not is_hermitian(a):
        raise NotHermitianError("eigh requires a Hermitian operator")
    a = 0.5 * (a + a.conj().T)
    w, v, _ = _backend.jacobi_eigh(a)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def binary_entropy(p):
    """h(p) in bits."""
    p = float(p)
    if p < -CLAMP_TOL or p > 1 + CLAMP_TOL or math.isnan(p):
        raise DomainError(f"binary entropy argument {p!r} outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def shannon_entropy(probs):
    """Shannon entropy in bits of a probability vector (0 log 0 = 0)."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho):
    """S(rho) in bits; eigenvalues are clamped to [0, 1]."""
    w = eigh(rho)[0]
    return shannon_entropy(w)


def purify(rho):
    """Canonical purification sum_i sqrt(w_i) |v_i> (x) |i> on d*d dims."""
    a = _square(rho, "rho")
    d = a.shape[0]
    w, v = eigh(a)
    w = np.clip(w, 0.0, None)
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if w[i] > 0:
            psi += math.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[i])
    return psi / np.linalg.norm(psi)


def random_unitary(d, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d, rng, rank=None):
    """Random mixed state from a d x rank Ginibre matrix (full rank by default)."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@dataclass(frozen=True)
class PlanarMeasurement:
    """Dichotomic qubit observable cos(angle) sigma_z + sin(angle) sigma_x."""

    angle: float

    def __post_init__(self):
        a = float(self.angle) % (2 * math.pi)
        # tiny negative inputs wrap to exactly 2*pi in floating point
        object.__setattr__(self, "angle", 0.0 if a == 2 * math.pi else a)

    @property
    def operator(self):
        return math.cos(self.angle) * SZ + math.sin(self.angle) * SX

    def projectors(self):
        """Eigenprojectors for the +1 and -1 outcomes."""
        a = self.operator
        return (I2 + a) / 2, (I2 - a) / 2


def observable(m):
    return m.operator


@dataclass(frozen=True)
class BellDiagonalSpectrum:
    """Weights on (Phi+, Psi-, Phi-, Psi+)."""

    phi_plus: float
    psi_minus: float
    phi_minus: float
    psi_plus: float

    def __post_init__(self):
        v = self.as_array()
        if np.any(v < -CLAMP_TOL) or np.any(v > 1 + CLAMP_TOL):
            raise DomainError(f"Bell-diagonal weights must lie in [0, 1], got {v}")
        if abs(v.sum() - 1) > CLAMP_TOL:
            raise DomainError(f"Bell-diagonal weights sum to {v.sum()!r}, expected 1")

    @classmethod
    def from_array(cls, v):
        return cls(*(float(x) for x in v))

    def as_array(self):
        return np.array([self.phi_plus, self.psi_minus, self.phi_minus, self.psi_plus])

    def is_canonical(self, tol=CLAMP_TOL):
        return (
            self.phi_plus + tol >= self.psi_minus
            and self.phi_plus + tol >= self.phi_minus
            and self.phi_minus + tol >= self.psi_plus
        )

    def canonical(self):
        """Reorder so Phi+ >= Phi- >= Psi+ >= Psi-.

        This is one of the orderings allowed by the canonical form and the
        one maximising the (x,z)-plane CHSH value.
        """
        l1, l2, l3, l4 = sorted(self.as_array(), reverse=True)
        return BellDiagonalSpectrum(l1, l4, l2, l3)

    def density(self):
        return bell_diagonal_state(self)


def bell_diagonal_state(spectrum):
    lam = spectrum.as_array() if isinstance(spectrum, BellDiagonalSpectrum) else np.asarray(spectrum)
    return (BELL_BASIS * lam) @ BELL_BASIS.conj().T


def _pair_ops(rho, a, b):
    r = _require_dim(rho, 4)
    return r, _as_op(a), _as_op(b)


def _as_op(m):
    return m.operator if isinstance(m, PlanarMeasurement) else _require_dim(m, 2, "observable")


def correlator(rho, a, b):
    """<A (x) B> on a two-qubit state."""
    r, A, B = _pair_ops(rho, a, b)
    return float(np.real(np.trace(r @ np.kron(A, B))))


def marginals(rho, a, b):
    """(<A (x) I>, <I (x) B>)."""
    r, A, B = _pair_ops(rho, a, b)
    return (
        float(np.real(np.trace(r @ np.kron(A, I2)))),
        float(np.real(np.trace(r @ np.kron(I2, B)))),
    )


def chsh_value(rho, a1, a2, b1, b2):
    return (
        correlator(rho, a1, b1)
        + correlator(rho, a1, b2)
        + correlator(rho, a2, b1)
        - correlator(rho, a2, b2)
    )


def outcome_table(rho, a, b):
    """2x2 table p[ia, ib] of joint outcome probabilities (index 0 = +1)."""
    r, A, B = _pair_ops(rho, a, b)
    pa = ((I2 + A) / 2, (I2 - A) / 2)
    pb = ((I2 + B) / 2, (I2 - B) / 2)
    t = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            t[i, j] = np.real(np.trace(r @ np.kron(pa[i], pb[j])))
    return np.clip(t, 0.0, None)


@dataclass(frozen=True)
class BornTable:
    """Joint outcome probabilities and Eve's states conditioned on Bob's bit.

    ``probs[ia, ib]`` with index 0 = +1. ``eve_given_b[ib]`` is ``None``
    when that outcome has zero probability.
    """

    probs: np.ndarray
    p_b: np.ndarray
    eve_given_b: tuple
    eve: np.ndarray


def born_probabilities(psi, a, b, dims=None):
    """Measure A on the first qubit and B on the second of psi_ABE."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if dims is None:
        if psi.size % 4:
            raise DimensionError(f"state of dimension {psi.size} does not factor as 2*2*dE")
        dims = (2, 2, psi.size // 4)
    if tuple(dims[:2]) != (2, 2) or int(np.prod(dims)) != psi.size:
        raise DimensionError(f"dims {dims} incompatible with state of dimension {psi.size}")
    de = dims[2]
    if abs(np.linalg.norm(psi) - 1) > CLAMP_TOL:
        raise DomainError("pure state is not normalised")

    A, B = _as_op(a), _as_op(b)
    pa = ((I2 + A) / 2, (I2 - A) / 2)
    pb = ((I2 + B) / 2, (I2 - B) / 2)
    t = psi.reshape(2, 2, de)
    probs = np.empty((2, 2))
    # unnormalised Eve operators after Bob's projection, summed over Alice
    eve_b = []
    for j in range(2):
        tb = np.einsum("bc,acE->abE", pb[j], t)
        for i in range(2):
            ti = np.einsum("ac,cbE->abE", pa[i], tb)
            probs[i, j] = np.real(np.vdot(ti, ti))
        m = tb.reshape(4, de)
        eve_b.append(m.T @ m.conj())
    probs = np.clip(probs, 0.0, None)
    p_b = probs.sum(axis=0)
    cond = tuple(e / pbj if pbj > CLAMP_TOL else None for e, pbj in zip(eve_b, p_b))
    m = t.reshape(4, de)
    return BornTable(probs=probs, p_b=p_b, eve_given_b=cond, eve=m.T @ m.conj())


def y_twirl(rho):
    """(rho + (Y(x)Y) rho (Y(x)Y)) / 2."""
    r = _require_dim(rho, 4)
    return 0.5 * (r + YY @ r @ YY)


def real_twirl(rho):
    """(rho + conj(rho)) / 2 in the computational basis."""
    r = _require_dim(rho, 4)
    return 0.5 * (r + r.conj())


def correlation_matrix(rho):
    """T[k, l] = <sigma_k (x) sigma_l> for k, l in (x, y, z)."""
    r = _require_dim(rho, 4)
    paulis = (SX, SY, SZ)
    return np.array([[np.real(np.trace(r @ np.kron(p, q))) for q in paulis] for p in paulis])


def max_planar_chsh(rho):
    """Largest CHSH value reachable with settings in the (x,z) plane.

    Uses the Horodecki construction restricted to the x-z block of the
    correlation matrix: 2 * (largest singular value pair norm).
    """
    t = correlation_matrix(rho)[np.ix_([0, 2], [0, 2])]
    s = np.linalg.svd(t, compute_uv=False)
    return float(2 * math.sqrt(s[0] ** 2 + s[1] ** 2))


def operator_to_json(op):
    a = _square(op)
    return {"dim": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}


def operator_from_json(obj):
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((d, d))), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed operator JSON: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimensionError(f"operator JSON declares dim {d} but arrays are {re.shape}, {im.shape}")
    return re + 1j * im
