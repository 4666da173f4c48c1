"""Key schedule, sealed reports, identifier-beacon secrets: frozen vectors
plus algebraic and failure-path properties."""

from __future__ import annotations

import random

import pytest

from tagsim import codec, crypto
from tagsim.backend import kernel
from tagsim.geo import Fix

from conftest import load_chains, load_vec


# -------------------------------------------------------------- curve params

def test_curve_parameters_validate():
    crypto.validate_curve()
    bad = crypto.CurveParams(p=crypto.P224.p, b=crypto.P224.b,
                             c=crypto.P224.c, gx=crypto.P224.gx,
                             gy=crypto.P224.gy + 1, n=crypto.P224.n)
    with pytest.raises(crypto.CurveParameterError):
        crypto.validate_curve(bad)


def test_mod_sqrt_and_point_recovery():
    rng = random.Random(3)
    for _ in range(20):
        x, y = kernel.base_mult(rng.randrange(1, crypto.P224.n))
        rec = crypto.recover_point(x)
        assert rec is not None
        assert rec[0] == x and rec[1] in (y, crypto.P224.p - y)
        assert rec[1] * rec[1] % crypto.P224.p == \
            (x * x * x - 3 * x + crypto.P224.b) % crypto.P224.p
    # a residue-free x yields None rather than a bogus point
    misses = sum(crypto.recover_point(x) is None for x in range(2, 300))
    assert misses > 0


def test_canonical_point_bytes_ignores_root_choice():
    x, y = kernel.base_mult(42)
    assert crypto.canonical_point_bytes((x, y)) == \
        crypto.canonical_point_bytes((x, crypto.P224.p - y))
    assert crypto.key_index((x, y)) == crypto.key_index((x, crypto.P224.p - y))
    assert len(crypto.key_index((x, y))) == 32


# -------------------------------------------------------------- key schedule

def test_key_schedule_matches_frozen_vectors():
    for chain_vec in load_chains("key_schedule.vec"):
        d0 = chain_vec["d0"]
        master = crypto.MasterKeySet(d=d0, pub=kernel.base_mult(d0),
                                     sk0=chain_vec["sk0"])
        chain = crypto.KeyChain(master)
        for row in chain_vec["epochs"]:
            epoch = chain.at(int(row["i"]))
            assert epoch.sk.hex() == row["sk"]
            assert epoch.d == int(row["d"], 16)
            assert epoch.pub == (int(row["px"], 16), int(row["py"], 16))


def test_epoch_private_matches_public():
    rng = random.Random(31)
    master = crypto.generate_master(rng)
    chain = crypto.KeyChain(master)
    for i in (1, 2, 3, 10, 50):
        epoch = chain.at(i)
        assert kernel.base_mult(epoch.d) == epoch.pub


def test_chain_is_memoized_and_one_based():
    master = crypto.generate_master(random.Random(8))
    chain = crypto.KeyChain(master)
    assert chain.at(5) is chain.at(5)
    with pytest.raises(ValueError):
        chain.at(0)


def test_rolling_secret_forward_only():
    """Epoch i+1 derives from epoch i's rolling secret, never backwards."""
    master = crypto.generate_master(random.Random(12))
    a = crypto.KeyChain(master).at(4)
    resumed = crypto.advance_epoch(master, a)
    assert resumed.index == 5
    assert resumed == crypto.KeyChain(master).at(5)


# ------------------------------------------------------------ sealed reports

def test_fix_packing_round_trip():
    for fix in (Fix(0.0, 0.0), Fix(35.000123, -80.000456),
                Fix(-89.999999, 179.999999)):
        assert crypto.unpack_fix(crypto.pack_fix(fix)) == fix
    with pytest.raises(ValueError):
        crypto.unpack_fix(b"\x00" * 7)


def test_report_round_trip_and_wrong_epoch():
    rng = random.Random(77)
    chain = crypto.KeyChain(crypto.generate_master(rng))
    e1, e2 = chain.at(1), chain.at(2)
    fix = Fix(35.0001, -80.0002)
    report = crypto.encrypt_fix(fix, e1.pub, rng)
    assert crypto.decrypt_report(report, e1.d) == fix
    with pytest.raises(crypto.AuthenticationError):
        crypto.decrypt_report(report, e2.d)


def test_report_table_path_equivalent():
    rng = random.Random(78)
    chain = crypto.KeyChain(crypto.generate_master(rng))
    epoch = chain.at(1)
    table = kernel.make_table(*epoch.pub)
    fix = Fix(1.5, -2.5)
    for _ in range(5):
        report = crypto.encrypt_fix(fix, epoch.pub, rng, table)
        assert crypto.decrypt_report(report, epoch.d) == fix


def test_report_tamper_detection():
    rng = random.Random(79)
    chain = crypto.KeyChain(crypto.generate_master(rng))
    epoch = chain.at(1)
    report = crypto.encrypt_fix(Fix(10.0, 20.0), epoch.pub, rng)
    flipped = bytearray(report.ciphertext)
    flipped[0] ^= 0x80
    bad = crypto.EncryptedReport(report.key_index, report.ephemeral,
                                 bytes(flipped), report.tag)
    with pytest.raises(crypto.AuthenticationError):
        crypto.decrypt_report(bad, epoch.d)
    off_curve = bytearray(report.ephemeral)
    off_curve[-1] ^= 0x01
    with pytest.raises(crypto.InvalidPointError):
        crypto.decrypt_report(crypto.EncryptedReport(
            report.key_index, bytes(off_curve), report.ciphertext,
            report.tag), epoch.d)
    with pytest.raises(crypto.InvalidPointError):
        crypto.decrypt_report(crypto.EncryptedReport(
            report.key_index, b"\x05" + report.ephemeral[1:],
            report.ciphertext, report.tag), epoch.d)


# ------------------------------------------------- identifier-beacon secrets

def test_privacy_id_matches_frozen_vectors():
    for row in load_vec("privacy_id.vec"):
        got = crypto.derive_privacy_id(bytes.fromhex(row["secret"]),
                                       int(row["counter"]))
        assert got.hex() == row["id"]


def test_frame_signature_matches_frozen_vectors():
    for row in load_vec("smarttag_sign.vec"):
        key = bytes.fromhex(row["key"])
        prefix = bytes.fromhex(row["prefix"])
        assert crypto.sign_frame_prefix(prefix, key).hex() == row["sig"]
        assert crypto.verify_frame_sig(prefix, bytes.fromhex(row["sig"]), key)
        assert not crypto.verify_frame_sig(prefix, b"\x00" * 4, key) or \
            row["sig"] == "00000000"


def test_full_identifier_beacon_pipeline_golden():
    """idsecret/devkey through derivation, signing, and encoding."""
    for row in load_vec("smarttag_fields.vec"):
        counter = codec.aging_counter(int(row["tagtime"]))
        assert counter == int(row["counter"])
        pid = crypto.derive_privacy_id(bytes.fromhex(row["idsecret"]), counter)
        assert pid.hex() == row["pid"]
        prefix = codec.smarttag_signed_prefix(int(row["state"], 16), counter,
                                              pid, int(row["flags"], 16))
        sig = crypto.sign_frame_prefix(prefix, bytes.fromhex(row["devkey"]))
        assert sig.hex() == row["sig"]
        beacon = codec.SmartTagBeacon(tag_state=int(row["state"], 16),
                                      aging_counter=counter, privacy_id=pid,
                                      flags=int(row["flags"], 16),
                                      signature=sig)
        assert codec.encode_smarttag(beacon).hex() == row["payload"]


def test_batch_sign_equals_loop():
    rng = random.Random(41)
    key = rng.randbytes(16)
    prefixes = [rng.randbytes(16) for _ in range(64)]
    batched = crypto.batch_sign(b"".join(prefixes), key)
    for prefix, word in zip(prefixes, batched):
        want = crypto.sign_frame_prefix(prefix, key)
        assert int.from_bytes(want, "little") == int(word)


def test_collision_trials_deterministic():
    a = crypto.collision_trials(3, 4096, seed=5)
    b = crypto.collision_trials(3, 4096, seed=5)
    assert a == b and len(a) == 3


# -------------------------------------------------------------- covert PRF

def test_channel_scalar_matches_frozen_vectors():
    for row in load_vec("covert_channel.vec"):
        secret = bytes.fromhex(row["secret"])
        index, value = int(row["index"]), int(row["value"])
        scalar = crypto.channel_scalar(secret, index, value)
        assert scalar == int(row["scalar"], 16)
        assert crypto.channel_point(secret, index, value) == \
            (int(row["px"], 16), int(row["py"], 16))


def test_channel_scalar_separates_bits():
    secret = b"\x07" * 16
    seen = {crypto.channel_scalar(secret, k, v)
            for k in range(16) for v in (0, 1)}
    assert len(seen) == 32
    with pytest.raises(ValueError):
        crypto.channel_scalar(secret, 0, 2)
