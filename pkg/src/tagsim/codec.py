"""Bit-exact encoders and decoders for the two beacon families.

Both beacon families ride a 32-byte BLE advertising payload next to a 6-byte
advertiser address. Offsets below are the single source of truth; golden
hexdump files under tests/data pin them.

Curve-key beacon (AirTag style), payload layout:

    offset  len  field
    0       1    0x1E   advertising data length
    1       1    0xFF   manufacturer-specific data marker
    2       2    0x00 0x4C   company identifier
    4       1    0x12   offline-finding type
    5       1    0x19   offline-finding data length
    6       1    status byte
    7       23   public key bytes 5..27
    30      1    top two bits of public key byte 0 (value 0..3)
    31      1    crypto counter

The 28-byte x-coordinate rides split across address and payload: address
bytes 0-4 carry key bytes 0-4 with the address's top two bits forced to 0b11
(BLE random static address), address byte 5 is zero, and payload byte 30
carries the two displaced key bits.

Identifier beacon (SmartTag style), payload layout:

    offset  len  field
    0       1    tag state
    1       3    aging counter, big-endian (15-minute windows since origin)
    4       8    rotating privacy identifier
    12      1    flags: region code bits 0-5, encryption bit 6, UWB bit 7
    13      3    reserved, must be zero
    16      4    truncated authentication tag over payload bytes 0-15
    20      12   unused

Its advertiser address is an opaque random private address.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geo import Fix

ADDRESS_LEN = 6
PAYLOAD_LEN = 32
BEACON_KEY_LEN = 28

AIRTAG_HEADER = bytes.fromhex("1eff004c1219")

SMARTTAG_TIME_ORIGIN = 1593648000  # first aging-counter window start
SMARTTAG_WINDOW_S = 900
SMARTTAG_SIG_LEN = 4
SMARTTAG_ID_LEN = 8


class FrameFormatError(ValueError):
    """Raised when bytes do not parse as the expected beacon family."""


class FieldRangeError(ValueError):
    """Raised when a beacon field is outside its encodable range."""


def _check_byte(name: str, value: int) -> None:
    if not 0 <= value <= 0xFF:
        raise FieldRangeError(f"{name} must fit one byte, got {value!r}")


@dataclass(frozen=True)
class AirTagBeacon:
    """Curve-key beacon content: a 28-byte public key x plus status/counter."""

    key: bytes
    status: int = 0x10
    counter: int = 0

    def __post_init__(self) -> None:
        if len(self.key) != BEACON_KEY_LEN:
            raise FieldRangeError(f"key must be {BEACON_KEY_LEN} bytes, got {len(self.key)}")
        _check_byte("status", self.status)
        _check_byte("counter", self.counter)


@dataclass(frozen=True)
class SmartTagBeacon:
    """Identifier beacon content."""

    tag_state: int
    aging_counter: int
    privacy_id: bytes
    flags: int
    signature: bytes
    unused: bytes = field(default=b"\x00" * 12)

    def __post_init__(self) -> None:
        _check_byte("tag_state", self.tag_state)
        _check_byte("flags", self.flags)
        if not 0 <= self.aging_counter < 1 << 24:
            raise FieldRangeError(f"aging_counter must fit 24 bits, got {self.aging_counter}")
        if len(self.privacy_id) != SMARTTAG_ID_LEN:
            raise FieldRangeError("privacy_id must be 8 bytes")
        if len(self.signature) != SMARTTAG_SIG_LEN:
            raise FieldRangeError("signature must be 4 bytes")
        if len(self.unused) != 12:
            raise FieldRangeError("unused tail must be 12 bytes")

    @property
    def region(self) -> int:
        return self.flags & 0x3F

    @property
    def encrypted(self) -> bool:
        return bool(self.flags & 0x40)

    @property
    def uwb(self) -> bool:
        return bool(self.flags & 0x80)


def region_flags(region: int, encrypted: bool = False, uwb: bool = False) -> int:
    """Pack the flags byte: region in bits 0-5, encryption bit 6, UWB bit 7."""
    if not 0 <= region <= 0x3F:
        raise FieldRangeError(f"region must fit 6 bits, got {region}")
    return region | (0x40 if encrypted else 0) | (0x80 if uwb else 0)


def split_beacon_key(key: bytes) -> tuple[bytes, bytes, int]:
    """Split a 28-byte key into (address, payload body, displaced top bits)."""
    if len(key) != BEACON_KEY_LEN:
        raise FieldRangeError(f"key must be {BEACON_KEY_LEN} bytes, got {len(key)}")
    addr = bytes([(key[0] & 0x3F) | 0xC0]) + key[1:5] + b"\x00"
    return addr, key[5:28], key[0] >> 6


def join_beacon_key(address: bytes, body: bytes, top_bits: int) -> bytes:
    """Inverse of split_beacon_key."""
    if len(address) != ADDRESS_LEN:
        raise FrameFormatError(f"address must be {ADDRESS_LEN} bytes, got {len(address)}")
    if len(body) != 23:
        raise FrameFormatError(f"key body must be 23 bytes, got {len(body)}")
    if not 0 <= top_bits <= 3:
        raise FrameFormatError(f"displaced key bits must be 0..3, got {top_bits}")
    return bytes([(address[0] & 0x3F) | (top_bits << 6)]) + address[1:5] + body


def encode_airtag(beacon: AirTagBeacon) -> tuple[bytes, bytes]:
    """Return (address, payload) bytes for a curve-key beacon."""
    addr, body, top = split_beacon_key(beacon.key)
    payload = bytearray(PAYLOAD_LEN)
    payload[0:6] = AIRTAG_HEADER
    payload[6] = beacon.status
    payload[7:30] = body
    payload[30] = top
    payload[31] = beacon.counter
    return addr, bytes(payload)


def decode_airtag(address: bytes, payload: bytes) -> AirTagBeacon:
    """Parse a curve-key beacon; raises FrameFormatError on any mismatch."""
    if len(payload) != PAYLOAD_LEN:
        raise FrameFormatError(f"payload must be {PAYLOAD_LEN} bytes, got {len(payload)}")
    if len(address) != ADDRESS_LEN:
        raise FrameFormatError(f"address must be {ADDRESS_LEN} bytes, got {len(address)}")
    if payload[0:6] != AIRTAG_HEADER:
        raise FrameFormatError(f"bad header {payload[0:6].hex()}")
    if address[0] & 0xC0 != 0xC0:
        raise FrameFormatError("address top two bits must be 0b11")
    if payload[30] > 3:
        raise FrameFormatError(f"displaced key bits byte out of range: {payload[30]}")
    key = join_beacon_key(address, payload[7:30], payload[30])
    return AirTagBeacon(key=key, status=payload[6], counter=payload[31])


def aging_counter(tagtime: int) -> int:
    """15-minute window index for a given unix time."""
    if tagtime < SMARTTAG_TIME_ORIGIN:
        raise FieldRangeError(f"tagtime {tagtime} precedes counter origin")
    return (tagtime - SMARTTAG_TIME_ORIGIN) // SMARTTAG_WINDOW_S


def smarttag_signed_prefix(tag_state: int, counter: int, privacy_id: bytes,
                           flags: int) -> bytes:
    """The 16 payload bytes covered by the authentication tag."""
    _check_byte("tag_state", tag_state)
    if not 0 <= counter < 1 << 24:
        raise FieldRangeError(f"aging_counter must fit 24 bits, got {counter}")
    if len(privacy_id) != SMARTTAG_ID_LEN:
        raise FieldRangeError("privacy_id must be 8 bytes")
    _check_byte("flags", flags)
    return (bytes([tag_state]) + counter.to_bytes(3, "big") + privacy_id
            + bytes([flags]) + b"\x00\x00\x00")


def encode_smarttag(beacon: SmartTagBeacon) -> bytes:
    """Return the 32 payload bytes for an identifier beacon."""
    prefix = smarttag_signed_prefix(beacon.tag_state, beacon.aging_counter,
                                    beacon.privacy_id, beacon.flags)
    return prefix + beacon.signature + beacon.unused


def decode_smarttag(payload: bytes) -> SmartTagBeacon:
    """Parse an identifier beacon; raises FrameFormatError on any mismatch."""
    if len(payload) != PAYLOAD_LEN:
        raise FrameFormatError(f"payload must be {PAYLOAD_LEN} bytes, got {len(payload)}")
    if payload[13:16] != b"\x00\x00\x00":
        raise FrameFormatError(f"reserved bytes must be zero, got {payload[13:16].hex()}")
    return SmartTagBeacon(
        tag_state=payload[0],
        aging_counter=int.from_bytes(payload[1:4], "big"),
        privacy_id=payload[4:12],
        flags=payload[12],
        signature=payload[16:20],
        unused=payload[20:32],
    )


def classify(payload: bytes) -> str | None:
    """Best-effort beacon family sniff: 'airtag', 'smarttag', or None."""
    if len(payload) != PAYLOAD_LEN:
        return None
    if payload[0:6] == AIRTAG_HEADER:
        return "airtag"
    if payload[13:16] == b"\x00\x00\x00":
        return "smarttag"
    return None


@dataclass(frozen=True)
class AdvertisementFrame:
    """One on-air advertisement: raw bytes plus emission metadata."""

    address: bytes
    payload: bytes
    emit_time: int
    emit_position: Fix
    emitter_id: str
    # Bookkeeping label for trace/metrics only ("tag", "spoof", "replay",
    # "flood", "channel"); server logic must never branch on it.
    via: str = "tag"

    def __post_init__(self) -> None:
        if len(self.address) != ADDRESS_LEN:
            raise FieldRangeError(f"address must be {ADDRESS_LEN} bytes")
        if len(self.payload) != PAYLOAD_LEN:
            raise FieldRangeError(f"payload must be {PAYLOAD_LEN} bytes")
