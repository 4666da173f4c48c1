"""Generate frozen test vectors with reference implementations.

Everything here is written independently of the tagsim package (plain affine
curve arithmetic, hand-rolled HKDF from hmac, raw AES-ECB compositions) so the
files under tests/data/ act as an oracle for the package code, not an echo of
it. Run from the repo root:

    python scripts/gen_vectors.py

The outputs are committed; regeneration must be byte-identical.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import random

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "data")

# NIST P-224 domain parameters (verified: G on curve, n*G = infinity,
# b^2 * c = -27 mod p for the pinned c).
P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF000000000000000000000001
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFF16A2E0B8F03E13DD29455C5C2A3D
B = 0xB4050A850C04B3ABF54132565044B0B7D7BFD8BA270B39432355FFB4
GX = 0xB70E0CBD6BB4BF7F321390B94A03C1D356C21122343280D6115C1D21
GY = 0xBD376388B5F723FB4C22DFE6CD4375A05A07476444D5819985007E34

Point = tuple[int, int] | None


def ec_add(a: Point, b: Point) -> Point:
    if a is None:
        return b
    if b is None:
        return a
    x1, y1 = a
    x2, y2 = b
    if x1 == x2 and (y1 + y2) % P == 0:
        return None
    if a == b:
        lam = (3 * x1 * x1 - 3) * pow(2 * y1, -1, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def ec_mul(k: int, pt: Point) -> Point:
    acc: Point = None
    for bit in bin(k % N)[2:]:
        acc = ec_add(acc, acc)
        if bit == "1":
            acc = ec_add(acc, pt)
    return acc


def on_curve(pt: Point) -> bool:
    if pt is None:
        return True
    x, y = pt
    return (y * y - (x * x * x - 3 * x + B)) % P == 0


G: Point = (GX, GY)
assert on_curve(G)
assert ec_mul(N, G) is None


def hkdf(ikm: bytes, info: bytes, length: int) -> bytes:
    # RFC 5869 with empty salt, built directly on hmac.
    prk = hmac.new(b"\x00" * 32, ikm, hashlib.sha256).digest()
    out = b""
    block = b""
    counter = 1
    while len(out) < length:
        block = hmac.new(prk, block + info + bytes([counter]), hashlib.sha256).digest()
        out += block
        counter += 1
    return out[:length]


def scalar_from(raw32: bytes) -> int:
    return 1 + int.from_bytes(raw32, "big") % (N - 1)


def schedule_step(sk_prev: bytes, master_d: int,
                  master_pub: Point) -> tuple[bytes, int, Point]:
    # each step diversifies the long-lived master pair, not the previous epoch
    sk_next = hkdf(sk_prev, b"update", 32)
    uv = hkdf(sk_next, b"diversify", 64)
    u = scalar_from(uv[:32])
    v = scalar_from(uv[32:])
    d_next = (u * master_d + v) % N
    pub_next = ec_add(ec_mul(u, master_pub), ec_mul(v, G))
    return sk_next, d_next, pub_next


def aes_ecb(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def sign_ref(prefix16: bytes, key16: bytes) -> bytes:
    # Zero-IV CBC over the PKCS7-padded 16-byte message, unrolled into two
    # ECB calls: c1 = E(m0), c2 = E(pad ^ c1); tag = c2[:4].
    assert len(prefix16) == 16
    c1 = aes_ecb(key16, prefix16)
    pad = bytes([16] * 16)
    c2 = aes_ecb(key16, bytes(x ^ y for x, y in zip(pad, c1)))
    return c2[:4]


def privacy_id_ref(id_secret: bytes, counter: int) -> bytes:
    return aes_ecb(id_secret, counter.to_bytes(16, "big"))[:8]


SMARTTAG_T0 = 1593648000
WINDOW = 900


def aging_counter_ref(tagtime: int) -> int:
    return (tagtime - SMARTTAG_T0) // WINDOW


# --- frame builders (hand-written offsets, no shared code with the package) ---

def build_airtag(key: bytes, status: int, counter: int) -> tuple[bytes, bytes]:
    assert len(key) == 28
    addr = bytearray(key[0:5]) + b"\x00"
    addr[0] = (addr[0] & 0x3F) | 0xC0
    payload = bytearray(32)
    payload[0] = 0x1E
    payload[1] = 0xFF
    payload[2] = 0x00
    payload[3] = 0x4C
    payload[4] = 0x12
    payload[5] = 0x19
    payload[6] = status
    payload[7:30] = key[5:28]
    payload[30] = key[0] >> 6
    payload[31] = counter
    return bytes(addr), bytes(payload)


def build_smarttag(state: int, counter24: int, pid: bytes, flags: int,
                   sig: bytes) -> bytes:
    payload = bytearray(32)
    payload[0] = state
    payload[1:4] = counter24.to_bytes(3, "big")
    payload[4:12] = pid
    payload[12] = flags
    # payload[13:16] reserved, zero
    payload[16:20] = sig
    # payload[20:32] unused, zero
    return bytes(payload)


def main() -> None:
    os.makedirs(DATA_DIR, exist_ok=True)
    rng = random.Random(0xA11CE)

    # ---- scalar multiplication vectors ----------------------------------
    q = ec_mul(7, G)
    lines = []
    for k in [1, 2, 3, 4, 63, 64, 65, 2**128, N - 1,
              rng.randrange(1, N), rng.randrange(1, N), rng.randrange(1, N)]:
        r = ec_mul(k, G)
        lines.append(f"k={k:x} bx={GX:x} by={GY:x} rx={r[0]:x} ry={r[1]:x}")
    for k in [1, 5, N - 2, rng.randrange(1, N), rng.randrange(1, N)]:
        r = ec_mul(k, q)
        lines.append(f"k={k:x} bx={q[0]:x} by={q[1]:x} rx={r[0]:x} ry={r[1]:x}")
    with open(os.path.join(DATA_DIR, "scalar_mult.vec"), "w") as f:
        f.write("# k=<hex> bx=<hex> by=<hex> rx=<hex> ry=<hex>  (r = k * base)\n")
        f.write("\n".join(lines) + "\n")

    # ---- key schedule KAT ------------------------------------------------
    vec_lines = ["# chain: sk0=<hex32> d0=<hex> then per line "
                 "i sk_i d_i px_i py_i"]
    chains = [
        (b"\x00" * 32, 1),
        (bytes(range(32)), 0x1F2E3D4C5B6A798800000000000000000000000000000000DEADBEEF),
        (hashlib.sha256(b"tagsim vector chain 3").digest(),
         rng.randrange(1, N)),
    ]
    for sk0, d0 in chains:
        pub = ec_mul(d0, G)
        vec_lines.append(f"chain sk0={sk0.hex()} d0={d0:x}")
        sk = sk0
        for i in range(1, 4):
            sk, d, pt = schedule_step(sk, d0, pub)
            check = ec_mul(d, G)
            assert check == pt, "schedule identity failed in oracle"
            vec_lines.append(f"i={i} sk={sk.hex()} d={d:x} px={pt[0]:x} py={pt[1]:x}")
    with open(os.path.join(DATA_DIR, "key_schedule.vec"), "w") as f:
        f.write("\n".join(vec_lines) + "\n")

    # ---- smarttag signature KAT -----------------------------------------
    sig_lines = ["# key=<hex16> prefix=<hex16> sig=<hex4>"]
    cases = [(b"\x00" * 16, b"\x00" * 16), (bytes(range(16)), bytes(range(16, 32)))]
    for _ in range(6):
        cases.append((rng.randbytes(16), rng.randbytes(16)))
    for key, prefix in cases:
        sig_lines.append(f"key={key.hex()} prefix={prefix.hex()} "
                         f"sig={sign_ref(prefix, key).hex()}")
    with open(os.path.join(DATA_DIR, "smarttag_sign.vec"), "w") as f:
        f.write("\n".join(sig_lines) + "\n")

    # ---- privacy id KAT ---------------------------------------------------
    pid_lines = ["# secret=<hex16> counter=<int> id=<hex8>"]
    for secret, counter in [
        (b"\x00" * 16, 0),
        (bytes(range(16)), 118168),
        (rng.randbytes(16), 1),
        (rng.randbytes(16), 2**24 - 1),
    ]:
        pid_lines.append(f"secret={secret.hex()} counter={counter} "
                         f"id={privacy_id_ref(secret, counter).hex()}")
    with open(os.path.join(DATA_DIR, "privacy_id.vec"), "w") as f:
        f.write("\n".join(pid_lines) + "\n")

    # ---- airtag frame goldens ---------------------------------------------
    keys = [
        (bytes([0x12]) + bytes(range(0x40, 0x40 + 27)), 0x10, 0x00),
        (bytes([0xC0]) + bytes(27), 0x10, 0xFF),
        (bytes([0x3F]) + rng.randbytes(27), 0x10, 0x7A),
        (rng.randbytes(28), 0x10, 0x19),
        ((GX).to_bytes(28, "big"), 0x10, 0x05),
    ]
    frame_lines = []
    field_lines = ["# key=<hex28> status=<hex1> counter=<hex1> "
                   "addr=<hex6> payload=<hex32>"]
    for key, status, counter in keys:
        addr, payload = build_airtag(key, status, counter)
        frame_lines.append(f"{addr.hex()} {payload.hex()}")
        field_lines.append(f"key={key.hex()} status={status:02x} "
                           f"counter={counter:02x} addr={addr.hex()} "
                           f"payload={payload.hex()}")
    # split sanity pinned by hand
    assert frame_lines[0].split()[0][:2] == "d2"   # 0x12 -> top bits forced
    assert frame_lines[1].split()[0][:2] == "c0"
    a0, p0 = build_airtag(keys[0][0], 0x10, 0)
    assert p0[30] == 0x12 >> 6 == 0
    a1, p1 = build_airtag(keys[1][0], 0x10, 0)
    assert p1[30] == 0xC0 >> 6 == 3
    assert a0[5] == 0 and a1[5] == 0
    assert p0[:6] == bytes.fromhex("1eff004c1219")
    with open(os.path.join(DATA_DIR, "airtag_frames.hex"), "w") as f:
        f.write("\n".join(frame_lines) + "\n")
    with open(os.path.join(DATA_DIR, "airtag_fields.vec"), "w") as f:
        f.write("\n".join(field_lines) + "\n")

    # ---- smarttag frame goldens -------------------------------------------
    assert aging_counter_ref(1700000000) == 118168
    assert aging_counter_ref(SMARTTAG_T0) == 0
    assert aging_counter_ref(SMARTTAG_T0 + 899) == 0
    assert aging_counter_ref(SMARTTAG_T0 + 900) == 1
    st_frames = []
    st_fields = ["# idsecret=<hex16> devkey=<hex16> state=<hex1> tagtime=<int> "
                 "counter=<int> pid=<hex8> flags=<hex1> sig=<hex4> payload=<hex32>"]
    st_cases = [
        (b"\x00" * 16, b"\x00" * 16, 0x01, 1700000000, 0x00),
        (bytes(range(16)), bytes(range(16, 32)), 0x01, 1700000000, 0x52),
        (rng.randbytes(16), rng.randbytes(16), 0x02, SMARTTAG_T0 + 900, 0xD2),
        (rng.randbytes(16), rng.randbytes(16), 0x01, 1700000100, 0x01),
    ]
    for id_secret, dev_key, state, tagtime, flags in st_cases:
        counter = aging_counter_ref(tagtime)
        pid = privacy_id_ref(id_secret, counter)
        prefix = build_smarttag(state, counter, pid, flags, b"\x00" * 4)[:16]
        sig = sign_ref(prefix, dev_key)
        payload = build_smarttag(state, counter, pid, flags, sig)
        st_frames.append(f"{'00' * 6} {payload.hex()}")
        st_fields.append(f"idsecret={id_secret.hex()} devkey={dev_key.hex()} "
                         f"state={state:02x} tagtime={tagtime} counter={counter} "
                         f"pid={pid.hex()} flags={flags:02x} sig={sig.hex()} "
                         f"payload={payload.hex()}")
    with open(os.path.join(DATA_DIR, "smarttag_frames.hex"), "w") as f:
        f.write("\n".join(st_frames) + "\n")
    with open(os.path.join(DATA_DIR, "smarttag_fields.vec"), "w") as f:
        f.write("\n".join(st_fields) + "\n")

    # ---- covert channel scalar vectors ------------------------------------
    cc_lines = ["# secret=<hex16> index=<int> value=<0|1> scalar=<hex> px=<hex> py=<hex>"]
    secret = bytes(range(16))
    for index, value in [(0, 0), (0, 1), (7, 0), (31, 1)]:
        mac = hmac.new(secret, b"sendmy" + index.to_bytes(4, "big") + bytes([value]),
                       hashlib.sha256).digest()
        scalar = scalar_from(mac)
        pt = ec_mul(scalar, G)
        cc_lines.append(f"secret={secret.hex()} index={index} value={value} "
                        f"scalar={scalar:x} px={pt[0]:x} py={pt[1]:x}")
    with open(os.path.join(DATA_DIR, "covert_channel.vec"), "w") as f:
        f.write("\n".join(cc_lines) + "\n")

    print("vectors written to", os.path.abspath(DATA_DIR))


if __name__ == "__main__":
    main()
