"""Eve's optimal collective attack and exact Holevo information.

The attack distributes

    rho_AB(S) = (1+C)/2 |Phi+><Phi+| + (1-C)/2 |Phi-><Phi-|,
    C = sqrt((S/2)^2 - 1),

with B1 = sigma_z, B2 = sigma_x and A1, A2 at angles +/- atan(C) in the
(x,z) plane. A0 is sigma_z followed by a classical channel that replaces
the bit by a fair coin with probability 2Q.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import qmat
from .bounds import S_TOL, TSIRELSON, holevo_bound
from .errors import DomainError
from .qmat import PlanarMeasurement, bell_diagonal_state

SIGMA_Z = PlanarMeasurement(0.0)
SIGMA_X = PlanarMeasurement(math.pi / 2)


@dataclass(frozen=True)
class A0NoiseChannel:
    """Replace the sigma_z outcome by a fair coin with probability ``flip_to_random_prob``."""

    flip_to_random_prob: float

    def __post_init__(self):
        if not 0.0 <= self.flip_to_random_prob <= 1.0:
            raise DomainError(f"flip probability {self.flip_to_random_prob!r} outside [0, 1]")

    def disagreement(self, p_disagree):
        """prob(a0 != b) given prob(sigma_z outcome != b)."""
        f = self.flip_to_random_prob
        return (1 - f) * p_disagree + f * 0.5

    def apply_to_table(self, table):
        """Push a joint outcome table p[ia, ib] through the channel on Alice's side."""
        f = self.flip_to_random_prob
        table = np.asarray(table, dtype=float)
        p_b = table.sum(axis=0)
        return (1 - f) * table + f * 0.5 * np.vstack([p_b, p_b])


def concurrence_parameter(S):
    """C = sqrt((S/2)^2 - 1)."""
    return math.sqrt(max((S / 2) ** 2 - 1, 0.0))


def attack_state(S):
    c = concurrence_parameter(S)
    return bell_diagonal_state([(1 + c) / 2, 0.0, (1 - c) / 2, 0.0])


@dataclass(frozen=True)
class AttackSpec:
    target_S: float
    target_Q: float
    rho_ab: np.ndarray = field(repr=False)
    a1: PlanarMeasurement
    a2: PlanarMeasurement
    b1: PlanarMeasurement
    b2: PlanarMeasurement
    a0_channel: A0NoiseChannel
    a0: PlanarMeasurement = SIGMA_Z

    def settings(self):
        """Alice's (A0, A1, A2) and Bob's (B1, B2) measurements."""
        return (self.a0, self.a1, self.a2), (self.b1, self.b2)

    def outcome_table(self, i, j):
        """Joint outcome distribution for Alice setting i in {0,1,2}, Bob j in {0,1}."""
        alice, bob = self.settings()
        t = qmat.outcome_table(self.rho_ab, alice[i], bob[j])
        if i == 0:
            t = self.a0_channel.apply_to_table(t)
        return t / t.sum()

    def chsh(self):
        return qmat.chsh_value(self.rho_ab, self.a1, self.a2, self.b1, self.b2)

    def qber(self):
        t = self.outcome_table(0, 0)
        return float(t[0, 1] + t[1, 0])

    def to_json(self):
        return {
            "target_S": self.target_S,
            "target_Q": self.target_Q,
            "rho_ab": qmat.operator_to_json(self.rho_ab),
            "angles": {
                "a0": self.a0.angle,
                "a1": self.a1.angle,
                "a2": self.a2.angle,
                "b1": self.b1.angle,
                "b2": self.b2.angle,
            },
            "a0_flip_to_random_prob": self.a0_channel.flip_to_random_prob,
        }

    @classmethod
    def from_json(cls, obj):
        ang = obj["angles"]
        return cls(
            target_S=float(obj["target_S"]),
            target_Q=float(obj["target_Q"]),
            rho_ab=qmat.operator_from_json(obj["rho_ab"]),
            a1=PlanarMeasurement(ang["a1"]),
            a2=PlanarMeasurement(ang["a2"]),
            b1=PlanarMeasurement(ang["b1"]),
            b2=PlanarMeasurement(ang["b2"]),
            a0_channel=A0NoiseChannel(float(obj["a0_flip_to_random_prob"])),
            a0=PlanarMeasurement(ang.get("a0", 0.0)),
        )


def build_optimal_attack(S, Q):
    if not 2.0 < S <= TSIRELSON + S_TOL:
        raise DomainError(f"attack needs 2 < S <= 2*sqrt(2), got {S!r}")
    if not 0.0 <= Q <= 0.5:
        raise DomainError(f"QBER must lie in [0, 0.5], got {Q!r}")
    S = min(S, TSIRELSON)
    theta = math.atan(concurrence_parameter(S))
    return AttackSpec(
        target_S=S,
        target_Q=Q,
        rho_ab=attack_state(S),
        a1=PlanarMeasurement(theta),
        a2=PlanarMeasurement(-theta),
        b1=SIGMA_Z,
        b2=SIGMA_X,
        a0_channel=A0NoiseChannel(2 * Q),
    )


def holevo_exact(rho_ab, b1):
    """chi(B1:E) with Eve holding the purification of rho_ab.

    Conditional entropies are weighted by the observed p(b).
    """
    rho = qmat._require_dim(rho_ab, 4)
    psi = qmat.purify(rho)
    born = qmat.born_probabilities(psi, SIGMA_Z, b1, dims=(2, 2, 4))
    chi = qmat.von_neumann_entropy(born.eve)
    for pb, cond in zip(born.p_b, born.eve_given_b):
        if cond is not None:
            chi -= pb * qmat.von_neumann_entropy(cond)
    return min(max(chi, 0.0), 2.0)


def concurrence(rho):
    """Wootters concurrence of a two-qubit state (diagnostic)."""
    r = qmat._require_dim(rho, 4)
    rt = qmat.YY @ r.conj() @ qmat.YY
    ev = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r @ rt).real)[::-1], 0.0, None))
    return float(max(0.0, ev[0] - ev[1] - ev[2] - ev[3]))


@dataclass
class SaturationReport:
    rows: list
    tol: float

    @property
    def max_chsh_dev(self):
        return max(r["chsh_dev"] for r in self.rows)

    @property
    def max_chi_dev(self):
        return max(r["chi_dev"] for r in self.rows)

    @property
    def max_marginal_dev(self):
        return max(r["marginal_dev"] for r in self.rows)

    @property
    def max_qber_dev(self):
        return max(r["qber_dev"] for r in self.rows)

    @property
    def ok(self):
        return (
            self.max_chsh_dev <= self.tol
            and self.max_chi_dev <= self.tol
            and self.max_marginal_dev <= 1e-12
            and self.max_qber_dev <= self.tol
        )

    def to_dict(self):
        return {
            "ok": self.ok,
            "tol": self.tol,
            "max_chsh_dev": self.max_chsh_dev,
            "max_chi_dev": self.max_chi_dev,
            "max_marginal_dev": self.max_marginal_dev,
            "max_qber_dev": self.max_qber_dev,
            "rows": self.rows,
        }


def verify_saturation(S_grid, Q=0.0, tol=1e-9):
    """Check the optimal attack reproduces S and Q and attains F(S)."""
    rows = []
    for S in S_grid:
        att = build_optimal_attack(float(S), Q)
        chi = holevo_exact(att.rho_ab, att.b1)
        bound = holevo_bound(att.target_S)
        marg = 0.0
        for a in (att.a1, att.a2):
            for b in (att.b1, att.b2):
                marg = max(marg, *(abs(m) for m in qmat.marginals(att.rho_ab, a, b)))
        rows.append(
            {
                "S": float(S),
                "chsh": att.chsh(),
                "chsh_dev": abs(att.chsh() - att.target_S),
                "chi_exact": chi,
                "holevo_bound": bound,
                "chi_dev": abs(chi - bound),
                "marginal_dev": marg,
                "qber": att.qber(),
                "qber_dev": abs(att.qber() - Q),
                "key_rate": 1 - qmat.binary_entropy(Q) - chi,
            }
        )
    return SaturationReport(rows=rows, tol=tol)
