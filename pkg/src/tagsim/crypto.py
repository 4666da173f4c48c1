"""Protocol cryptography for both beacon families.

Curve-key side: a long-lived master keypair diversifies into per-epoch
keypairs via a one-way update chain; finders encrypt location fixes to the
epoch public key lifted from the beacon; only the owner can walk the chain
and decrypt. Identifier side: a shared device key authenticates each beacon
with a truncated CBC tag, and a per-window privacy identifier is derived
from a second shared secret.

Key schedule (chain index i >= 1):

    sk_i    = HKDF-SHA256(sk_{i-1}, info="update", 32 bytes)
    u_i,v_i = HKDF-SHA256(sk_i, info="diversify", 64 bytes), halves reduced
              into [1, n-1]
    d_i     = u_i * d + v_i  (mod n)
    P_i     = u_i * P + v_i * G

The identity d_i * G = P_i holds along the whole chain; known-answer vectors
generated by an independent implementation pin every value.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Any

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .backend import kernel
from .geo import Fix

COORD_SCALE = 1_000_000  # fixes travel as 1e-6-degree int32 pairs
_REPORT_INFO = b"tagsim-report-v1"


class CurveParameterError(ValueError):
    """Raised when domain parameters fail a consistency check."""


class InvalidPointError(ValueError):
    """Raised when bytes do not describe a point on the curve."""


class AuthenticationError(ValueError):
    """Raised when an encrypted report fails its integrity check."""


@dataclass(frozen=True)
class CurveParams:
    p: int
    n: int
    b: int
    c: int
    gx: int
    gy: int


# 224-bit prime curve: p = 2^224 - 2^96 + 1, a = -3, cofactor 1.
# c is pinned from solving b^2 * c = -27 (mod p); validate_curve recomputes
# the congruence rather than trusting the stored value.
P224 = CurveParams(
    p=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF000000000000000000000001,
    n=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFF16A2E0B8F03E13DD29455C5C2A3D,
    b=0xB4050A850C04B3ABF54132565044B0B7D7BFD8BA270B39432355FFB4,
    c=0x5B056C7E11DD68F40469EE7F3C7A7D74F7D121116506D031218291FB,
    gx=0xB70E0CBD6BB4BF7F321390B94A03C1D356C21122343280D6115C1D21,
    gy=0xBD376388B5F723FB4C22DFE6CD4375A05A07476444D5819985007E34,
)

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _probable_prime(m: int) -> bool:
    if m < 2:
        return False
    for small in _MR_BASES:
        if m == small:
            return True
        if m % small == 0:
            return False
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def validate_curve(params: CurveParams = P224) -> None:
    """Recompute the parameter consistency checks; raise on any failure."""
    p, n, b, c = params.p, params.n, params.b, params.c
    if p <= 3 or p % 2 == 0:
        raise CurveParameterError("field prime must be an odd prime > 3")
    if not _probable_prime(p):
        raise CurveParameterError("field modulus fails primality")
    if not _probable_prime(n):
        raise CurveParameterError("group order fails primality")
    if b % p == 0:
        raise CurveParameterError("curve coefficient b must be nonzero")
    if (b * b % p) * c % p != (-27) % p:
        raise CurveParameterError("coefficient check b^2 * c = -27 failed")
    if not kernel.is_on_curve(params.gx, params.gy):
        raise CurveParameterError("base point not on curve")
    if kernel.scalar_mult(params.gx, params.gy, n - 1) is None or \
            kernel.point_add(*kernel.scalar_mult(params.gx, params.gy, n - 1),
                             params.gx, params.gy) is not None:
        raise CurveParameterError("base point order is not n")


# ------------------------------------------------------------ point helpers

def _find_nonresidue(p: int) -> int:
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    return z


_NONRESIDUE = _find_nonresidue(P224.p)


def mod_sqrt(a: int, p: int = P224.p) -> int | None:
    """Tonelli-Shanks square root mod p; None if a is a non-residue."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = _NONRESIDUE if p == P224.p else _find_nonresidue(p)
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t * t % p, 1
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        bsq = pow(c, 1 << (m - i - 1), p)
        m, c = i, bsq * bsq % p
        t, r = t * c % p, r * bsq % p
    return r


def recover_point(x: int) -> tuple[int, int] | None:
    """Lift a 28-byte beacon x-coordinate back to a curve point.

    Returns None when x is not on the curve (e.g. a twist point), which
    callers treat as a hostile or corrupt beacon.
    """
    if not 0 <= x < P224.p:
        return None
    rhs = (x * x * x - 3 * x + P224.b) % P224.p
    y = mod_sqrt(rhs)
    if y is None:
        return None
    return (x, y)


def point_bytes(pt: tuple[int, int]) -> bytes:
    """Uncompressed serialization 0x04 || x || y (28-byte coordinates)."""
    return b"\x04" + pt[0].to_bytes(28, "big") + pt[1].to_bytes(28, "big")


def canonical_point_bytes(pt: tuple[int, int]) -> bytes:
    """Like point_bytes but with y folded to min(y, p - y).

    A beacon only carries x, so two observers may hold opposite roots; the
    canonical form makes hashes agree.
    """
    x, y = pt
    return b"\x04" + x.to_bytes(28, "big") + min(y, P224.p - y).to_bytes(28, "big")


def key_index(pt: tuple[int, int]) -> bytes:
    """Server-side lookup handle for an epoch public key (32 bytes)."""
    return hashlib.sha256(canonical_point_bytes(pt)).digest()


# -------------------------------------------------------------- key schedule

@dataclass(frozen=True)
class MasterKeySet:
    """Factory-provisioned master secret: scalar d, point P, seed sk0."""

    d: int
    pub: tuple[int, int]
    sk0: bytes

    def __post_init__(self) -> None:
        if not 1 <= self.d < P224.n:
            raise ValueError("master scalar out of range")
        if len(self.sk0) != 32:
            raise ValueError("sk0 must be 32 bytes")


@dataclass(frozen=True)
class EpochKeys:
    """Diversified keys for one chain position (index >= 1)."""

    index: int
    sk: bytes
    d: int
    pub: tuple[int, int]


def generate_master(rng) -> MasterKeySet:
    d = rng.randrange(1, P224.n)
    return MasterKeySet(d=d, pub=kernel.base_mult(d), sk0=rng.randbytes(32))


def _hkdf(ikm: bytes, info: bytes, length: int) -> bytes:
    # extract-then-expand with a zero salt; hand-rolled because this sits on
    # the per-report hot path and must stay cheap
    prk = hmac.new(b"\x00" * 32, ikm, hashlib.sha256).digest()
    out = b""
    block = b""
    counter = 1
    while len(out) < length:
        block = hmac.new(prk, block + info + bytes([counter]),
                         hashlib.sha256).digest()
        out += block
        counter += 1
    return out[:length]


def _scalar_from(raw32: bytes) -> int:
    return 1 + int.from_bytes(raw32, "big") % (P224.n - 1)


def advance_epoch(master: MasterKeySet, prev: EpochKeys | None) -> EpochKeys:
    """One chain step; prev=None steps from the master seed to index 1."""
    if prev is None:
        sk_prev, index = master.sk0, 1
    else:
        sk_prev, index = prev.sk, prev.index + 1
    sk = _hkdf(sk_prev, b"update", 32)
    uv = _hkdf(sk, b"diversify", 64)
    u = _scalar_from(uv[:32])
    v = _scalar_from(uv[32:])
    d = (u * master.d + v) % P224.n
    pub = kernel.mult_add_base(u, master.pub[0], master.pub[1], v)
    if d == 0 or pub is None:  # u*d = -v: probability ~2^-224
        raise CurveParameterError("degenerate epoch key")
    return EpochKeys(index=index, sk=sk, d=d, pub=pub)


class KeyChain:
    """Memoized walk of the epoch chain for one master key set."""

    def __init__(self, master: MasterKeySet):
        self.master = master
        self._cache: dict[int, EpochKeys] = {}
        self._tip: EpochKeys | None = None

    def at(self, index: int) -> EpochKeys:
        if index < 1:
            raise ValueError("chain index starts at 1")
        hit = self._cache.get(index)
        if hit is not None:
            return hit
        while self._tip is None or self._tip.index < index:
            self._tip = advance_epoch(self.master, self._tip)
            self._cache[self._tip.index] = self._tip
        return self._cache[index]


# ------------------------------------------------------------------- reports

@dataclass(frozen=True)
class EncryptedReport:
    """A finder's sealed location fix as the server stores it."""

    key_index: bytes
    ephemeral: bytes     # uncompressed share, 57 bytes
    ciphertext: bytes
    tag: bytes


def pack_fix(fix: Fix) -> bytes:
    lat = round(fix.lat * COORD_SCALE)
    lon = round(fix.lon * COORD_SCALE)
    return lat.to_bytes(4, "big", signed=True) + lon.to_bytes(4, "big", signed=True)


def unpack_fix(data: bytes) -> Fix:
    if len(data) != 8:
        raise ValueError("packed fix must be 8 bytes")
    return Fix(int.from_bytes(data[:4], "big", signed=True) / COORD_SCALE,
               int.from_bytes(data[4:], "big", signed=True) / COORD_SCALE)


def _report_key(shared_x: int, ephemeral: bytes, index: bytes) -> bytes:
    return _hkdf(shared_x.to_bytes(28, "big"), _REPORT_INFO + ephemeral + index, 16)


def encrypt_fix(fix: Fix, pub: tuple[int, int], rng,
                table: Any | None = None) -> EncryptedReport:
    """Seal a fix to an epoch public key. table: optional kernel window
    table for pub (worth building when many reports target one key)."""
    e = rng.randrange(1, P224.n)
    if table is not None:
        rx, ry, sx, sy = kernel.ecies_pair(e, table)
    else:
        rx, ry = kernel.base_mult(e)
        sx, sy = kernel.scalar_mult(pub[0], pub[1], e)
    index = key_index(pub)
    ephemeral = point_bytes((rx, ry))
    key = _report_key(sx, ephemeral, index)
    sealed = AESGCM(key).encrypt(b"\x00" * 12, pack_fix(fix), None)
    return EncryptedReport(key_index=index, ephemeral=ephemeral,
                           ciphertext=sealed[:-16], tag=sealed[-16:])


def decrypt_report(report: EncryptedReport, d: int) -> Fix:
    """Open a sealed fix with the matching epoch private scalar.

    Raises InvalidPointError for a malformed or off-curve ephemeral share
    and AuthenticationError when the integrity check fails (wrong epoch,
    tampered bytes).
    """
    eph = report.ephemeral
    if len(eph) != 57 or eph[0] != 0x04:
        raise InvalidPointError("ephemeral share must be 57-byte uncompressed")
    rx = int.from_bytes(eph[1:29], "big")
    ry = int.from_bytes(eph[29:57], "big")
    if not kernel.is_on_curve(rx, ry):
        raise InvalidPointError("ephemeral share not on curve")
    shared = kernel.scalar_mult(rx, ry, d)
    if shared is None:
        raise InvalidPointError("degenerate shared secret")
    key = _report_key(shared[0], eph, report.key_index)
    try:
        plain = AESGCM(key).decrypt(b"\x00" * 12, report.ciphertext + report.tag, None)
    except InvalidTag as exc:
        raise AuthenticationError("report failed authentication") from exc
    return unpack_fix(plain)


# ------------------------------------------------- identifier-beacon secrets

@dataclass(frozen=True)
class SmartTagKeys:
    """Per-device shared secrets provisioned at registration."""

    device_key: bytes
    id_secret: bytes

    def __post_init__(self) -> None:
        if len(self.device_key) != 16 or len(self.id_secret) != 16:
            raise ValueError("device secrets must be 16 bytes each")


def generate_smarttag_keys(rng) -> SmartTagKeys:
    return SmartTagKeys(device_key=rng.randbytes(16), id_secret=rng.randbytes(16))


def sign_frame_prefix(prefix: bytes, device_key: bytes) -> bytes:
    """4-byte beacon authenticator: zero-IV CBC over the padded prefix,
    truncated to the first 4 bytes of the final block."""
    if len(prefix) != 16:
        raise ValueError("signed prefix must be 16 bytes")
    enc = Cipher(algorithms.AES(device_key), modes.CBC(b"\x00" * 16)).encryptor()
    ct = enc.update(prefix + b"\x10" * 16) + enc.finalize()
    return ct[16:20]


def verify_frame_sig(prefix: bytes, sig: bytes, device_key: bytes) -> bool:
    return hmac.compare_digest(sign_frame_prefix(prefix, device_key), sig)


def derive_privacy_id(id_secret: bytes, counter: int) -> bytes:
    """Per-window rotating identifier: AES-ECB of the window counter."""
    enc = Cipher(algorithms.AES(id_secret), modes.ECB()).encryptor()
    return (enc.update(counter.to_bytes(16, "big")) + enc.finalize())[:8]


def batch_sign(prefixes: bytes, device_key: bytes) -> np.ndarray:
    """Vectorized sign_frame_prefix for many 16-byte prefixes.

    Zero-IV CBC of (prefix || pad) unrolls to c2 = E(pad ^ E(prefix)), so two
    ECB passes cover every message; returns the 4-byte tags as uint32.
    """
    if len(prefixes) % 16:
        raise ValueError("prefixes must be a multiple of 16 bytes")
    enc1 = Cipher(algorithms.AES(device_key), modes.ECB()).encryptor()
    c1 = np.frombuffer(enc1.update(prefixes) + enc1.finalize(), dtype=np.uint8)
    enc2 = Cipher(algorithms.AES(device_key), modes.ECB()).encryptor()
    c2 = enc2.update((c1 ^ 0x10).tobytes()) + enc2.finalize()
    blocks = np.frombuffer(c2, dtype=np.uint8).reshape(-1, 16)
    return np.ascontiguousarray(blocks[:, :4]).view("<u4").ravel()


def collision_trials(trials: int, samples: int, seed: int) -> list[bool]:
    """Whether random beacon prefixes produce >= 1 authenticator collision,
    per trial of `samples` prefixes under a fresh key."""
    gen = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        key = gen.integers(0, 256, size=16, dtype=np.uint8).tobytes()
        msgs = gen.integers(0, 256, size=(samples, 16), dtype=np.uint8).tobytes()
        sigs = batch_sign(msgs, key)
        out.append(np.unique(sigs).size < samples)
    return out


# --------------------------------------------------------- covert channel PRF

def channel_scalar(secret: bytes, index: int, value: int) -> int:
    """Deterministic per-(bit, value) private scalar for the covert channel."""
    if value not in (0, 1):
        raise ValueError("bit value must be 0 or 1")
    mac = hmac.new(secret, b"sendmy" + index.to_bytes(4, "big") + bytes([value]),
                   hashlib.sha256).digest()
    return _scalar_from(mac)


def channel_point(secret: bytes, index: int, value: int) -> tuple[int, int]:
    return kernel.base_mult(channel_scalar(secret, index, value))
