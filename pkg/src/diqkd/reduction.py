"""Jordan-block reduction of two-setting dichotomic strategies to qubits.

Two observables A1, A2 with A^2 = I generate a unitary U = A1 A2 whose
eigenvalues come in conjugate pairs exp(+/- i theta). For theta not in
{0, pi}, an eigenvector v of exp(i theta) and A1 v (an eigenvector of
exp(-i theta)) span a subspace invariant under both observables. On the
theta in {0, pi} eigenspaces A1 and A2 commute and split into 1-d blocks.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import block_diag, schur

from . import qmat
from .errors import DimensionError, NotDichotomicError
from .qmat import PlanarMeasurement

PHASE_TOL = 1e-8


def as_dichotomic(op, tol=1e-9):
    a = qmat._square(op, "observable")
    if not qmat.is_hermitian(a):
        raise NotDichotomicError("observable is not Hermitian")
    if np.max(np.abs(a @ a - np.eye(a.shape[0]))) > tol:
        raise NotDichotomicError("observable does not square to the identity")
    return 0.5 * (a + a.conj().T)


@dataclass
class Block:
    """One invariant subspace.

    ``basis`` is a d x rank isometry. For rank 2 the basis is chosen so
    that A1 acts as sigma_z and A2 as a vector in the (x,z) plane;
    ``bloch`` holds the (x, y, z) Bloch vectors of A1 and A2 in it. For
    rank 1, ``bloch`` holds the two eigenvalue scalars.
    """

    basis: np.ndarray
    phase: float
    bloch: tuple

    @property
    def rank(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ self.basis.conj().T

    def settings(self):
        """Planar qubit settings for A1, A2 inside this block."""
        if self.rank == 1:
            return tuple(PlanarMeasurement(0.0 if s > 0 else math.pi) for s in self.bloch)
        return tuple(PlanarMeasurement(math.atan2(v[0], v[2])) for v in self.bloch)

    def qubit_isometry(self):
        """d x 2 map into the qubit frame; a rank-1 block sits on |0>."""
        if self.rank == 2:
            return self.basis
        return np.hstack([self.basis, np.zeros_like(self.basis)])


@dataclass
class BlockDecomposition:
    blocks: list
    dim: int
    weights: np.ndarray | None = field(default=None)

    @property
    def projectors(self):
        return [b.projector for b in self.blocks]

    @property
    def ranks(self):
        return [b.rank for b in self.blocks]

    @property
    def phases(self):
        return [b.phase for b in self.blocks]

    def rank2_angles(self):
        return sorted(b.phase for b in self.blocks if b.rank == 2)

    def with_weights(self, rho_local):
        w = np.array([np.real(np.trace(rho_local @ p)) for p in self.projectors])
        return BlockDecomposition(self.blocks, self.dim, w)

    def completeness_error(self):
        return float(np.max(np.abs(sum(self.projectors) - np.eye(self.dim))))

    def orthogonality_error(self):
        ps = self.projectors
        err = 0.0
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                err = max(err, float(np.max(np.abs(ps[i] @ ps[j]))))
        return err

    def to_dict(self):
        out = []
        for k, b in enumerate(self.blocks):
            item = {"rank": b.rank, "phase": b.phase}
            if b.rank == 2:
                item["a1_bloch"] = [float(x) for x in b.bloch[0]]
                item["a2_bloch"] = [float(x) for x in b.bloch[1]]
                item["angles"] = [m.angle for m in b.settings()]
            else:
                item["a1_value"], item["a2_value"] = (float(s) for s in b.bloch)
            if self.weights is not None:
                item["weight"] = float(self.weights[k])
            out.append(item)
        return {"dim": self.dim, "n_blocks": len(self.blocks), "blocks": out}


def _bloch(op2):
    return np.array([np.real(np.trace(op2 @ p)) / 2 for p in (qmat.SX, qmat.SY, qmat.SZ)])


def _cluster(phases, tol):
    """Group indices of sorted phases whose neighbours lie within tol."""
    order = np.argsort(phases)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if phases[b] - phases[a] <= tol:
            cur.append(b)
        else:
            groups.append(cur)
            cur = [b]
    groups.append(cur)
    return groups


def _commuting_blocks(a1, a2, vecs, phase):
    # A1, A2 commute on this eigenspace; split by diagonalising A1 there
    sub = vecs.conj().T @ a1 @ vecs
    _, w = qmat.eigh(0.5 * (sub + sub.conj().T))
    blocks = []
    for k in range(vecs.shape[1]):
        u = vecs @ w[:, k]
        u = u / np.linalg.norm(u)
        s1 = float(np.real(np.vdot(u, a1 @ u)))
        s2 = float(np.real(np.vdot(u, a2 @ u)))
        blocks.append(Block(u[:, None], phase, (float(np.sign(s1)), float(np.sign(s2)))))
    return blocks


def _pair_block(a1, a2, v, theta):
    # A1 v lies in the exp(-i theta) eigenspace, so v and A1 v are orthonormal;
    # the -i phase puts A2 at +theta in the (x,z) plane
    w = a1 @ v
    f0 = (v + w) / math.sqrt(2)
    f1 = -1j * (v - w) / math.sqrt(2)
    basis = np.column_stack([f0, f1])
    r1 = basis.conj().T @ a1 @ basis
    r2 = basis.conj().T @ a2 @ basis
    return Block(basis, theta, (_bloch(r1), _bloch(r2)))


def jordan_blocks(a1, a2, phase_tol=PHASE_TOL):
    """Decompose the space into 1- and 2-dimensional blocks invariant under A1, A2."""
    A1 = as_dichotomic(a1)
    A2 = as_dichotomic(a2)
    if A1.shape != A2.shape:
        raise DimensionError(f"observables act on different dimensions {A1.shape} vs {A2.shape}")
    d = A1.shape[0]
    u = A1 @ A2
    t, z = schur(u, output="complex")
    diag = np.diag(t)
    if np.max(np.abs(np.abs(diag) - 1)) > 1e-9:
        raise NotDichotomicError("A1 A2 is not unitary")
    phases = np.angle(diag)
    phases[phases < -math.pi + phase_tol] += 2 * math.pi

    blocks = []
    positive, negative = [], []
    for grp in _cluster(phases, phase_tol):
        theta = float(np.mean(phases[grp]))
        vecs = z[:, grp]
        if abs(theta) <= phase_tol or abs(math.pi - theta) <= phase_tol:
            phase = 0.0 if abs(theta) <= phase_tol else math.pi
            blocks.extend(_commuting_blocks(A1, A2, vecs, phase))
        elif theta > 0:
            vecs, _ = np.linalg.qr(vecs)
            for k in range(vecs.shape[1]):
                blocks.append(_pair_block(A1, A2, vecs[:, k], theta))
            positive.extend(phases[grp])
        else:
            negative.extend(-phases[grp])
    positive, negative = np.sort(positive), np.sort(negative)
    if positive.shape != negative.shape or np.any(np.abs(positive - negative) > phase_tol):
        raise ValueError(f"eigenphases of A1 A2 are not closed under conjugation within {phase_tol}")
    return BlockDecomposition(blocks, d)


def pinch(op, decomposition):
    return sum(p @ op @ p for p in decomposition.projectors)


def verify_pinching(a1, a2, decomposition):
    """Max Frobenius distance between A_j and its block pinching."""
    return max(
        float(np.linalg.norm(np.asarray(a) - pinch(np.asarray(a), decomposition)))
        for a in (a1, a2)
    )


@dataclass
class QubitStrategy:
    weight: float
    rho: np.ndarray
    alice_settings: tuple
    bob_settings: tuple
    blocks: tuple

    @property
    def chsh(self):
        a1, a2 = self.alice_settings
        b1, b2 = self.bob_settings
        return qmat.chsh_value(self.rho, a1, a2, b1, b2)


@dataclass
class ReducedStrategy:
    terms: list
    alice: BlockDecomposition
    bob: BlockDecomposition

    @property
    def total_weight(self):
        return sum(t.weight for t in self.terms)

    @property
    def weighted_chsh(self):
        return sum(t.weight * t.chsh for t in self.terms)


def reduce_strategy(rho, a1, a2, b1, b2, weight_tol=1e-14):
    """Write a two-setting strategy as a mixture of two-qubit strategies.

    Zero-weight block pairs are dropped.
    """
    A1, A2, B1, B2 = (as_dichotomic(x) for x in (a1, a2, b1, b2))
    da, db = A1.shape[0], B1.shape[0]
    r = qmat._require_dim(rho, da * db)
    alice = jordan_blocks(A1, A2)
    bob = jordan_blocks(B1, B2)
    alice = alice.with_weights(qmat.partial_trace(r, [da, db], 0))
    bob = bob.with_weights(qmat.partial_trace(r, [da, db], 1))

    terms = []
    for ca, ba in enumerate(alice.blocks):
        va = ba.qubit_isometry()
        for cb, bb in enumerate(bob.blocks):
            v = np.kron(va, bb.qubit_isometry())
            sub = v.conj().T @ r @ v
            p = float(np.real(np.trace(sub)))
            if p <= weight_tol:
                continue
            terms.append(QubitStrategy(p, sub / p, ba.settings(), bb.settings(), (ca, cb)))
    return ReducedStrategy(terms, alice, bob)


def planted_pair(angles, rank1_signs, rng=None):
    """Two dichotomic observables with known block structure.

    Each angle gives a qubit block with A1 = sigma_z, A2 = cos(a) sigma_z +
    sin(a) sigma_x (so the A1 A2 phases are +/- a); each entry of
    ``rank1_signs`` is an (s1, s2) pair of +/-1 for a 1x1 block. With an
    ``rng`` the pair is conjugated by a Haar-random unitary.
    """
    blocks1 = [qmat.SZ for _ in angles]
    blocks2 = [math.cos(a) * qmat.SZ + math.sin(a) * qmat.SX for a in angles]
    a1 = block_diag(*blocks1, *[np.array([[s1]]) for s1, _ in rank1_signs]).astype(complex)
    a2 = block_diag(*blocks2, *[np.array([[s2]]) for _, s2 in rank1_signs]).astype(complex)
    if rng is not None:
        u = qmat.random_unitary(a1.shape[0], rng)
        a1 = u @ a1 @ u.conj().T
        a2 = u @ a2 @ u.conj().T
        a1 = 0.5 * (a1 + a1.conj().T)
        a2 = 0.5 * (a2 + a2.conj().T)
    return a1, a2
