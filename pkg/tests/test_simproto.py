import io
import math

import numpy as np
import pytest

from diqkd import _fallback
from diqkd.attack import build_optimal_attack
from diqkd.bounds import TSIRELSON
from diqkd.errors import DomainError, EstimationUndefinedError
from diqkd.simproto import (
    ProtocolConfig,
    Tally,
    estimate,
    generate_rounds,
    oracle_instance,
    oracle_step3_sweep,
    random_spectrum,
    round_words,
    run_protocol,
    symmetrize_transcript,
)


@pytest.fixture(scope="module")
def attack():
    return build_optimal_attack(2.5, 0.05)


def test_round_words_chunk_independent():
    whole = round_words(7, 0, 1000)
    parts = np.vstack([round_words(7, a, b) for a, b in ((0, 3), (3, 517), (517, 1000))])
    assert np.array_equal(whole, parts)
    assert not np.array_equal(round_words(8, 0, 10), whole[:10])


def test_reproducible(attack, kernels):
    cfg = ProtocolConfig(50_000, seed=11)
    r1, t1 = run_protocol(attack, cfg, keep_transcript=True, kernels=kernels)
    r2, t2 = run_protocol(attack, cfg, keep_transcript=True, kernels=kernels)
    assert r1.to_dict() == r2.to_dict()
    assert np.array_equal(t1.a_out, t2.a_out)


def test_chunking_does_not_change_transcript(attack, kernels):
    cfg = ProtocolConfig(20_000, seed=3)
    _, a = run_protocol(attack, cfg, chunk_size=20_000, keep_transcript=True, kernels=kernels)
    _, b = run_protocol(attack, cfg, chunk_size=777, keep_transcript=True, kernels=kernels)
    for f in ("alice", "bob", "a_out", "b_out", "coin"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_backends_agree(attack):
    cfg = ProtocolConfig(30_000, seed=5)
    ref = run_protocol(attack, cfg, kernels=_fallback).to_dict()
    got = run_protocol(attack, cfg).to_dict()
    ref.pop("backend"), got.pop("backend")
    assert ref == got


def test_permutation_invariance(attack, rng):
    rec = generate_rounds(attack, ProtocolConfig(10_000, seed=2))
    perm = rng.permutation(len(rec))
    a, b = estimate(Tally.of(rec)), estimate(Tally.of(rec.take(perm)))
    assert a.Q_hat == b.Q_hat and a.S_hat == b.S_hat


def test_tally_merge_is_associative(attack):
    rec = generate_rounds(attack, ProtocolConfig(9_000, seed=4))
    whole = Tally.of(rec)
    split = Tally.of(rec.take(slice(0, 4000))) + Tally.of(rec.take(slice(4000, None)))
    for f in ("count", "prod_sum", "a_sum", "b_sum"):
        assert np.array_equal(getattr(whole, f), getattr(split, f))


def test_symmetrization_keeps_estimates_bit_identical(attack):
    rec = generate_rounds(attack, ProtocolConfig(40_000, seed=9))
    sym = symmetrize_transcript(rec)
    a, b = estimate(Tally.of(rec)), estimate(Tally.of(sym))
    assert a.Q_hat == b.Q_hat and a.S_hat == b.S_hat
    assert a.correlators == b.correlators
    assert np.array_equal(rec.a_out * rec.b_out, sym.a_out * sym.b_out)


def test_symmetrization_zero_coin_is_identity(attack):
    rec = generate_rounds(attack, ProtocolConfig(1000, seed=1))
    same = symmetrize_transcript(rec, coin=np.zeros(len(rec), np.uint8))
    assert np.array_equal(same.a_out, rec.a_out) and np.array_equal(same.b_out, rec.b_out)
    flipped = symmetrize_transcript(rec, coin=np.ones(len(rec), np.uint8))
    assert np.array_equal(flipped.a_out, -rec.a_out)


def test_symmetrization_drives_marginals_to_zero():
    # a biased source: product state |00>, Q = 0 on (A0, B1)
    from diqkd import qmat
    from diqkd.attack import A0NoiseChannel, AttackSpec, SIGMA_X, SIGMA_Z

    att = AttackSpec(2.0, 0.0, qmat.projector(qmat.ket(0, 0)), SIGMA_Z, SIGMA_X, SIGMA_Z, SIGMA_X, A0NoiseChannel(0.0))
    raw = run_protocol(att, ProtocolConfig(100_000, seed=1, symmetrize=False))
    sym = run_protocol(att, ProtocolConfig(100_000, seed=1))
    assert raw.marginal_means["A0"] == 1.0
    assert abs(sym.marginal_means["A0"]) < 0.02
    assert abs(sym.marginal_means["B1"]) < 0.02
    assert raw.Q_hat == sym.Q_hat == 0.0


def test_starved_pair_is_named(attack):
    cfg = ProtocolConfig(1000, setting_probs_alice=(1.0, 0.0, 0.0))
    with pytest.raises(EstimationUndefinedError, match=r"\(A1,B1\)"):
        run_protocol(attack, cfg)
    cfg = ProtocolConfig(1000, setting_probs_alice=(0.0, 0.5, 0.5))
    with pytest.raises(EstimationUndefinedError, match="QBER"):
        run_protocol(attack, cfg)


def test_perfect_attack_has_no_errors():
    rep = run_protocol(build_optimal_attack(TSIRELSON, 0.0), ProtocolConfig(50_000, seed=0))
    assert rep.Q_hat == 0.0
    assert rep.key_rates.iab == 1.0


def test_counts_add_up(attack):
    rep = run_protocol(attack, ProtocolConfig(12_345, seed=6))
    assert rep.n_key + rep.n_discarded + sum(rep.n_test.values()) == 12_345
    assert rep.n_rounds == 12_345
    assert set(rep.to_dict()) >= {"Q_hat", "Q_se", "S_hat", "S_se", "key_rates", "backend", "clipped"}


def test_estimates_within_three_se(attack):
    rep = run_protocol(attack, ProtocolConfig(400_000, seed=123))
    assert abs(rep.Q_hat - 0.05) <= 3 * rep.Q_se
    assert abs(rep.S_hat - 2.5) <= 3 * rep.S_se


def test_setting_frequencies(attack):
    rep = run_protocol(attack, ProtocolConfig(200_000, seed=8))
    # (A0,B1) carries 1/4 of the rounds with the default probabilities
    assert rep.n_key / 200_000 == pytest.approx(0.25, abs=0.005)
    assert rep.n_test["(A1,B1)"] / 200_000 == pytest.approx(0.125, abs=0.005)


def test_error_shrinks_like_inverse_sqrt_n(attack):
    def rms(n):
        errs = [run_protocol(attack, ProtocolConfig(n, seed=s)).S_hat - 2.5 for s in range(100)]
        return math.sqrt(np.mean(np.square(errs)))

    ratio = rms(4_000) / rms(64_000)
    assert 3.0 < ratio < 5.3


def test_clipping_flag():
    rep = run_protocol(build_optimal_attack(TSIRELSON, 0.0), ProtocolConfig(2_000, seed=0))
    if rep.S_hat > TSIRELSON:
        assert rep.clipped
    assert rep.key_rates.S <= TSIRELSON


def test_csv_schema(attack):
    tr = generate_rounds(attack, ProtocolConfig(5, seed=0))
    buf = io.StringIO()
    tr.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "round_index,alice_setting,bob_setting,a_out,b_out"
    assert len(lines) == 6
    idx, a, b, x, y = lines[1].split(",")
    assert idx == "0" and a in ("A0", "A1", "A2") and b in ("B1", "B2")
    assert x in ("1", "-1") and y in ("1", "-1")


def test_config_validation():
    with pytest.raises(DomainError):
        ProtocolConfig(0)
    with pytest.raises(DomainError):
        ProtocolConfig(10, setting_probs_alice=(0.5, 0.5))
    with pytest.raises(DomainError):
        ProtocolConfig(10, setting_probs_bob=(0.7, 0.7))
    with pytest.raises(DomainError):
        ProtocolConfig(10, seed=-1)


def test_random_spectrum_is_canonical(rng):
    for _ in range(100):
        lam = random_spectrum(rng)
        assert lam.is_canonical()
        assert lam.as_array().sum() == pytest.approx(1.0)


def test_oracle_instance_saturated():
    from diqkd.qmat import BellDiagonalSpectrum

    c = math.sqrt((2.6 / 2) ** 2 - 1)
    theta = math.atan(c)
    s, chi, f, upper = oracle_instance(BellDiagonalSpectrum((1 + c) / 2, 0, (1 - c) / 2, 0), (theta, -theta, 0, math.pi / 2))
    assert s == pytest.approx(2.6, abs=1e-12)
    assert chi == pytest.approx(f, abs=1e-9)
    assert chi == pytest.approx(upper, abs=1e-9)


def test_oracle_maximally_mixed_has_zero_slack():
    from diqkd.qmat import BellDiagonalSpectrum

    s, chi, f, upper = oracle_instance(BellDiagonalSpectrum(0.25, 0.25, 0.25, 0.25), (0.1, 0.2, 0.3, 0.4))
    assert s == pytest.approx(0.0, abs=1e-12)
    assert chi == pytest.approx(1.0, abs=1e-12)
    assert f - chi == pytest.approx(0.0, abs=1e-12)
    assert upper - chi == pytest.approx(0.0, abs=1e-12)


def test_oracle_sweep_small():
    rep = oracle_step3_sweep(2000, seed=1)
    assert rep.ok
    assert rep.min_slack_bound >= -1e-9 and rep.min_slack_upper >= -1e-9
    assert "0 violations" in rep.summary()
