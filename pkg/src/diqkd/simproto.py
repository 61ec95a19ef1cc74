"""Monte Carlo simulation of the protocol and the brute-force check of the Bell-diagonal bound.

Randomness is counter-based: round ``r`` consumes the four 64-bit words
of Philox block ``r`` under key ``seed`` (alice setting, bob setting,
joint outcome, symmetrisation coin). Any chunking of the rounds, in any
order, reproduces the same transcript.
"""
from dataclasses import asdict, dataclass, field
import csv
import math

import numpy as np

from . import _backend, qmat
from .attack import holevo_exact
from .bounds import TSIRELSON, ObservedStatistics, chi_lambda_upper, dw_rate, holevo_bound
from .errors import DomainError, EstimationUndefinedError
from .qmat import BellDiagonalSpectrum, PlanarMeasurement

ALICE_LABELS = ("A0", "A1", "A2")
BOB_LABELS = ("B1", "B2")
CHSH_SIGNS = {(1, 0): 1, (1, 1): 1, (2, 0): 1, (2, 1): -1}
DEFAULT_CHUNK = 1 << 18


def _check_probs(p, n, who):
    p = tuple(float(x) for x in p)
    if len(p) != n or any(x < 0 for x in p) or abs(sum(p) - 1) > 1e-12:
        raise DomainError(f"{who} setting probabilities must be {n} non-negative numbers summing to 1, got {p}")
    return p


@dataclass(frozen=True)
class ProtocolConfig:
    n_rounds: int
    setting_probs_alice: tuple = (0.5, 0.25, 0.25)
    setting_probs_bob: tuple = (0.5, 0.5)
    seed: int = 0
    symmetrize: bool = True
    coin_prob: float = 0.5

    def __post_init__(self):
        if int(self.n_rounds) < 1:
            raise DomainError(f"n_rounds must be >= 1, got {self.n_rounds!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "setting_probs_alice", _check_probs(self.setting_probs_alice, 3, "Alice"))
        object.__setattr__(self, "setting_probs_bob", _check_probs(self.setting_probs_bob, 2, "Bob"))

    def to_dict(self):
        return asdict(self)


@dataclass
class Transcript:
    """Per-round records; settings are indices into ALICE_LABELS / BOB_LABELS."""

    alice: np.ndarray
    bob: np.ndarray
    a_out: np.ndarray
    b_out: np.ndarray
    coin: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.alice)

    def take(self, idx):
        return Transcript(*(x[idx] for x in (self.alice, self.bob, self.a_out, self.b_out, self.coin)))

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round_index", "alice_setting", "bob_setting", "a_out", "b_out"])
        for r in range(len(self)):
            w.writerow([r, ALICE_LABELS[self.alice[r]], BOB_LABELS[self.bob[r]], int(self.a_out[r]), int(self.b_out[r])])


def round_words(seed, start, stop):
    """Raw words for rounds [start, stop), shape (stop - start, 4)."""
    n = stop - start
    gen = np.random.Philox(key=int(seed), counter=int(start))
    return gen.random_raw(4 * n).reshape(n, 4)


def _cumulative(p):
    c = np.cumsum(p)
    c[-1] = 1.0
    return np.ascontiguousarray(c, dtype=np.float64)


def outcome_tables(attack):
    """Cumulative outcome distributions, shape (3, 2, 4), index 2*ia + ib."""
    cum = np.empty((3, 2, 4))
    for i in range(3):
        for j in range(2):
            cum[i, j] = _cumulative(attack.outcome_table(i, j).ravel())
    return cum


def generate_rounds(attack, config, start=0, stop=None, kernels=None):
    """Sample rounds [start, stop) before symmetrisation."""
    stop = config.n_rounds if stop is None else stop
    k = kernels or _backend
    out = k.sample_rounds(
        round_words(config.seed, start, stop),
        _cumulative(config.setting_probs_alice),
        _cumulative(config.setting_probs_bob),
        outcome_tables(attack),
        float(config.coin_prob),
    )
    return Transcript(*out)


def symmetrize_transcript(records, coin=None):
    """Flip both bits of every round whose shared coin is set.

    Products a*b, hence every correlator and the QBER, are unchanged; the
    outcome marginals are driven towards zero.
    """
    coin = records.coin if coin is None else np.asarray(coin, dtype=np.uint8)
    flip = (1 - 2 * coin.astype(np.int8)).astype(np.int8)
    return Transcript(records.alice, records.bob, records.a_out * flip, records.b_out * flip, records.coin)


@dataclass
class Tally:
    """Sufficient statistics of a transcript; merging is associative."""

    count: np.ndarray
    prod_sum: np.ndarray
    a_sum: np.ndarray
    b_sum: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.zeros((3, 2), np.int64), np.zeros((3, 2), np.int64), np.zeros((3, 2), np.int64), np.zeros((3, 2), np.int64))

    @classmethod
    def of(cls, rec):
        pair = rec.alice.astype(np.int64) * 2 + rec.bob
        prod = rec.a_out.astype(np.int64) * rec.b_out
        return cls(
            np.bincount(pair, minlength=6).reshape(3, 2),
            np.bincount(pair, weights=prod, minlength=6).astype(np.int64).reshape(3, 2),
            np.bincount(pair, weights=rec.a_out, minlength=6).astype(np.int64).reshape(3, 2),
            np.bincount(pair, weights=rec.b_out, minlength=6).astype(np.int64).reshape(3, 2),
        )

    def __add__(self, other):
        return Tally(self.count + other.count, self.prod_sum + other.prod_sum, self.a_sum + other.a_sum, self.b_sum + other.b_sum)


@dataclass
class EstimationReport:
    n_rounds: int
    n_key: int
    n_test: dict
    n_discarded: int
    Q_hat: float
    Q_se: float
    S_hat: float
    S_se: float
    correlators: dict
    marginal_means: dict
    key_rates: object
    clipped: bool
    backend: str

    def to_dict(self):
        d = asdict(self)
        d["key_rates"] = None if self.key_rates is None else self.key_rates.to_dict()
        return d


def _pair_label(i, j):
    return f"({ALICE_LABELS[i]},{BOB_LABELS[j]})"


def estimate(tally, n_rounds=None, backend=""):
    """Q-hat from (A0,B1) rounds and S-hat from the four CHSH pairs."""
    c = tally.count
    if c[0, 0] == 0:
        raise EstimationUndefinedError(_pair_label(0, 0), "QBER")
    for (i, j) in CHSH_SIGNS:
        if c[i, j] == 0:
            raise EstimationUndefinedError(_pair_label(i, j), "CHSH value")

    n_key = int(c[0, 0])
    # a != b  <=>  a*b = -1
    q_hat = (n_key - tally.prod_sum[0, 0]) / (2 * n_key)
    q_se = math.sqrt(q_hat * (1 - q_hat) / n_key)

    corr, var = {}, 0.0
    s_hat = 0.0
    for (i, j), sign in CHSH_SIGNS.items():
        e = tally.prod_sum[i, j] / c[i, j]
        corr[_pair_label(i, j)] = float(e)
        s_hat += sign * e
        var += (1 - e * e) / c[i, j]

    marg = {}
    for i in range(3):
        n = c[i].sum()
        marg[ALICE_LABELS[i]] = float(tally.a_sum[i].sum() / n) if n else None
    for j in range(2):
        n = c[:, j].sum()
        marg[BOB_LABELS[j]] = float(tally.b_sum[:, j].sum() / n) if n else None

    # statistical fluctuations can push S-hat past Tsirelson or Q-hat past 1/2
    s_eval = max(min(s_hat, TSIRELSON), -TSIRELSON)
    q_eval = min(q_hat, 0.5)
    rates = dw_rate(ObservedStatistics(S=s_eval, Q=q_eval))
    return EstimationReport(
        n_rounds=int(c.sum()) if n_rounds is None else n_rounds,
        n_key=n_key,
        n_test={_pair_label(i, j): int(c[i, j]) for (i, j) in CHSH_SIGNS},
        n_discarded=int(c[0, 1]),
        Q_hat=float(q_hat),
        Q_se=q_se,
        S_hat=float(s_hat),
        S_se=math.sqrt(var),
        correlators=corr,
        marginal_means=marg,
        key_rates=rates,
        clipped=bool(s_eval != s_hat or q_eval != q_hat),
        backend=backend,
    )


def run_protocol(attack, config, chunk_size=DEFAULT_CHUNK, keep_transcript=False, kernels=None):
    """Simulate ``config.n_rounds`` rounds against ``attack`` and estimate Q and S.

    Returns the report, or ``(report, transcript)`` with ``keep_transcript``.
    """
    tally = Tally.empty()
    parts = []
    for start in range(0, config.n_rounds, chunk_size):
        stop = min(start + chunk_size, config.n_rounds)
        rec = generate_rounds(attack, config, start, stop, kernels)
        if config.symmetrize:
            rec = symmetrize_transcript(rec)
        tally = tally + Tally.of(rec)
        if keep_transcript:
            parts.append(rec)
    name = _backend.BACKEND if kernels is None else kernels.NAME
    report = estimate(tally, config.n_rounds, backend=name)
    if not keep_transcript:
        return report
    transcript = Transcript(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("alice", "bob", "a_out", "b_out", "coin")))
    return report, transcript


def random_spectrum(rng):
    """Dirichlet-uniform Bell-diagonal weights, put in canonical order."""
    return BellDiagonalSpectrum.from_array(rng.dirichlet(np.ones(4))).canonical()


@dataclass
class OracleReport:
    n_samples: int
    seed: int
    tol: float
    n_violations: int
    violations: list
    min_slack_bound: float
    min_slack_upper: float
    argmin: dict

    @property
    def ok(self):
        return self.n_violations == 0

    def to_dict(self):
        return asdict(self)

    def summary(self):
        return (
            f"{self.n_violations} violations, min slack {min(self.min_slack_bound, self.min_slack_upper):.3e} "
            f"(F(S): {self.min_slack_bound:.3e}, H-h: {self.min_slack_upper:.3e}) over {self.n_samples} samples"
        )


def oracle_instance(spectrum, angles):
    """Evaluate one sweep instance; returns (S, chi_exact, F(S), upper)."""
    rho = qmat.bell_diagonal_state(spectrum)
    a1, a2, b1, b2 = (PlanarMeasurement(t) for t in angles)
    s = qmat.chsh_value(rho, a1, a2, b1, b2)
    chi = holevo_exact(rho, b1)
    return s, chi, holevo_bound(s), chi_lambda_upper(spectrum)


def oracle_step3_sweep(n_samples, seed=0, tol=1e-9, max_dump=10):
    """Brute-force check of chi_exact <= F(S) and chi_exact <= H(lambda) - h(...).

    Random canonical Bell-diagonal spectra and random (x,z)-plane settings.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    violations = []
    n_bad = 0
    best_b = best_u = math.inf
    argmin = {}
    for k in range(n_samples):
        lam = random_spectrum(rng)
        angles = rng.uniform(0, 2 * math.pi, size=4)
        s, chi, f, upper = oracle_instance(lam, angles)
        slack_b, slack_u = f - chi, upper - chi
        if slack_b < -tol or slack_u < -tol:
            n_bad += 1
            if len(violations) < max_dump:
                violations.append(
                    {"index": k, "lambda": lam.as_array().tolist(), "angles": angles.tolist(),
                     "S": s, "chi_exact": chi, "F": f, "upper": upper}
                )
        if min(slack_b, slack_u) < min(best_b, best_u):
            argmin = {"index": k, "lambda": lam.as_array().tolist(), "angles": angles.tolist(),
                      "S": s, "chi_exact": chi, "F": f, "upper": upper}
        best_b = min(best_b, slack_b)
        best_u = min(best_u, slack_u)
    return OracleReport(n_samples, int(seed), tol, n_bad, violations, best_b, best_u, argmin)
