"""Labeled TCP/IP packets: capture ingestion, synthesis, and featurization.

Every packet is reduced to a fixed 1,525-byte layout, normalized to [0, 1]
by dividing each byte by 255.  The Ethernet header, both IP addresses and
both ports are dropped; everything else keeps its position:

    feature offset  width  source
    0               12     IPv4 header bytes 0-11 (version/IHL through
                           header checksum; address bytes and IP options
                           are dropped)
    12              16     TCP header bytes 4-19 (sequence number through
                           urgent pointer; the 4 port bytes are dropped)
    28              37     TCP options region, zero-padded (clipped when
                           options run longer)
    65              1460   payload, zero-padded (clipped when longer)

The byte offsets below are load-bearing: the perturbation module targets
them and round-trip tests enforce them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _inet
from .errors import ConfigError, MalformedPacket, PcapFormatError, RejectedPacket

PACKET_BYTE_CAP = 1594
FEATURE_LEN = 1525
PAYLOAD_REGION = 1460
OPTIONS_REGION = 37
HEADER_REGION = FEATURE_LEN - PAYLOAD_REGION  # 65

# Named offsets into the feature vector.
FEAT_IP_START = 0
FEAT_TOS = 1
FEAT_TOTAL_LEN = (2, 4)
FEAT_IP_ID = (4, 6)
FEAT_FRAG = (6, 8)
FEAT_TTL = 8
FEAT_PROTO = 9
FEAT_IP_CHECKSUM = (10, 12)
FEAT_TCP_START = 12
FEAT_SEQ = (12, 16)
FEAT_ACK = (16, 20)
FEAT_DATA_OFFSET = 20
FEAT_TCP_FLAGS = 21
FEAT_WINDOW = (22, 24)
FEAT_TCP_CHECKSUM = (24, 26)
FEAT_URGENT = (26, 28)
FEAT_OPTIONS_START = 28
FEAT_PAYLOAD_START = 65

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_IP = 101

BENIGN = 0
MALICIOUS = 1


@dataclass(frozen=True)
class RawPacket:
    """A captured or synthesized packet: raw bytes plus a binary label."""

    data: bytes
    label: int
    timestamp: float = 0.0
    has_link_header: bool = True

    def __post_init__(self):
        if len(self.data) > PACKET_BYTE_CAP:
            raise ValueError(f"packet exceeds {PACKET_BYTE_CAP} bytes")
        if self.label not in (BENIGN, MALICIOUS):
            raise ValueError("label must be 0 (benign) or 1 (malicious)")


@dataclass
class FeatureVector:
    """The 1,525-value normalized byte representation of one packet."""

    values: np.ndarray
    label: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (FEATURE_LEN,):
            raise ValueError(f"feature vector must have length {FEATURE_LEN}")


@dataclass
class Batch:
    samples: list[FeatureVector]
    index: int
    raw: list[RawPacket] | None = None


def stack_features(samples: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """Stack FeatureVectors into an (n, 1525) matrix and an (n,) label array."""
    X = np.stack([s.values for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------

def _ip_offset(data: bytes, has_link_header: bool) -> int:
    if not has_link_header:
        return 0
    if len(data) < _inet.ETH_HEADER_LEN:
        raise MalformedPacket("buffer shorter than an Ethernet header")
    ethertype = struct.unpack(">H", data[12:14])[0]
    if ethertype != _inet.ETHERTYPE_IPV4:
        raise RejectedPacket(f"ethertype 0x{ethertype:04x} is not IPv4")
    return _inet.ETH_HEADER_LEN


def parse_structure(data: bytes, has_link_header: bool) -> tuple[int, int, int, int]:
    """Validate IPv4+TCP framing; return (ip_off, ihl, tcp_off, data_off).

    `ihl` and `data_off` are in bytes.  Raises RejectedPacket for non-IPv4
    or non-TCP traffic and MalformedPacket when length fields disagree
    with the buffer.
    """
    ip_off = _ip_offset(data, has_link_header)
    if len(data) < ip_off + 20:
        raise MalformedPacket("buffer shorter than a minimal IPv4 header")
    version = data[ip_off] >> 4
    if version != 4:
        raise RejectedPacket(f"IP version {version} is not IPv4")
    ihl = (data[ip_off] & 0x0F) * 4
    if ihl < 20:
        raise MalformedPacket(f"IHL {ihl} below the 20-byte minimum")
    if len(data) < ip_off + ihl:
        raise MalformedPacket("buffer shorter than the stated IP header")
    if data[ip_off + 9] != _inet.IP_PROTO_TCP:
        raise RejectedPacket(f"IP protocol {data[ip_off + 9]} is not TCP")
    total_len = struct.unpack(">H", data[ip_off + 2 : ip_off + 4])[0]
    tcp_off = ip_off + ihl
    if len(data) < tcp_off + 20:
        raise MalformedPacket("buffer shorter than a minimal TCP header")
    data_off = (data[tcp_off + 12] >> 4) * 4
    if data_off < 20:
        raise MalformedPacket(f"TCP data offset {data_off} below 20 bytes")
    if total_len < ihl + data_off:
        raise MalformedPacket("IP total length smaller than combined headers")
    if len(data) < tcp_off + data_off:
        raise MalformedPacket("buffer shorter than the stated TCP header")
    return ip_off, ihl, tcp_off, data_off


def preprocess(pkt: RawPacket) -> FeatureVector:
    """Convert one packet to the canonical 1,525-feature vector."""
    data = pkt.data
    ip_off, ihl, tcp_off, data_off = parse_structure(data, pkt.has_link_header)
    total_len = struct.unpack(">H", data[ip_off + 2 : ip_off + 4])[0]

    out = bytearray(FEATURE_LEN)
    out[0:12] = data[ip_off : ip_off + 12]
    out[12:28] = data[tcp_off + 4 : tcp_off + 20]

    options = data[tcp_off + 20 : tcp_off + data_off]
    options = options[:OPTIONS_REGION]
    out[FEAT_OPTIONS_START : FEAT_OPTIONS_START + len(options)] = options

    payload_start = tcp_off + data_off
    payload_end = min(len(data), ip_off + total_len)
    payload = data[payload_start:payload_end][:PAYLOAD_REGION]
    out[FEAT_PAYLOAD_START : FEAT_PAYLOAD_START + len(payload)] = payload

    values = np.frombuffer(bytes(out), dtype=np.uint8).astype(np.float64) / 255.0
    return FeatureVector(values=values, label=pkt.label)


# ---------------------------------------------------------------------------
# classic pcap I/O
# ---------------------------------------------------------------------------

_PCAP_MAGIC = 0xA1B2C3D4
_GLOBAL_HEADER = struct.Struct("IHHiIII")  # endianness applied at runtime
_RECORD_HEADER_LEN = 16


class PcapStream:
    """Iterator over the TCP packets of a classic pcap file.

    Non-TCP records are skipped but still advance the record index used by
    label sidecars.  A truncated record stops the stream and increments
    `truncated_records` instead of raising.
    """

    def __init__(self, path: str | Path, labels: dict[int, int] | None = None):
        self._fh = open(path, "rb")
        header = self._fh.read(24)
        if len(header) < 24:
            self._fh.close()
            raise PcapFormatError("file shorter than a pcap global header")
        magic_be = struct.unpack(">I", header[:4])[0]
        magic_le = struct.unpack("<I", header[:4])[0]
        if magic_be == _PCAP_MAGIC:
            self._endian = ">"
        elif magic_le == _PCAP_MAGIC:
            self._endian = "<"
        else:
            self._fh.close()
            raise PcapFormatError(f"bad magic 0x{magic_be:08x}")
        fields = struct.unpack(self._endian + "HHiIII", header[4:])
        self.linktype = fields[5]
        if self.linktype not in (LINKTYPE_ETHERNET, LINKTYPE_RAW_IP):
            self._fh.close()
            raise PcapFormatError(f"unsupported linktype {self.linktype}")
        self._labels = labels or {}
        self._record_index = 0
        self.truncated_records = 0
        self.skipped_records = 0

    def __iter__(self) -> Iterator[RawPacket]:
        return self

    def __next__(self) -> RawPacket:
        while True:
            rec = self._fh.read(_RECORD_HEADER_LEN)
            if len(rec) == 0:
                self._fh.close()
                raise StopIteration
            if len(rec) < _RECORD_HEADER_LEN:
                self.truncated_records += 1
                self._fh.close()
                raise StopIteration
            ts_sec, ts_usec, incl_len, _orig_len = struct.unpack(self._endian + "IIII", rec)
            data = self._fh.read(incl_len)
            if len(data) < incl_len:
                self.truncated_records += 1
                self._fh.close()
                raise StopIteration
            index = self._record_index
            self._record_index += 1
            has_link = self.linktype == LINKTYPE_ETHERNET
            try:
                parse_structure(data[:PACKET_BYTE_CAP], has_link)
            except (RejectedPacket, MalformedPacket):
                self.skipped_records += 1
                continue
            return RawPacket(
                data=data[:PACKET_BYTE_CAP],
                label=self._labels.get(index, BENIGN),
                timestamp=ts_sec + ts_usec / 1e6,
                has_link_header=has_link,
            )


def parse_pcap(path: str | Path, labels: dict[int, int] | None = None) -> PcapStream:
    return PcapStream(path, labels)


def load_label_sidecar(path: str | Path) -> dict[int, int]:
    """Read `record_index,label` lines into a record-index -> label map."""
    out: dict[int, int] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            idx_s, label_s = line.split(",")
            out[int(idx_s)] = int(label_s)
        except ValueError as exc:
            raise ConfigError(f"bad sidecar line {lineno}: {line!r}") from exc
    return out


def write_pcap(path: str | Path, packets: Sequence[RawPacket],
               linktype: int = LINKTYPE_ETHERNET) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", _PCAP_MAGIC, 2, 4, 0, 0, PACKET_BYTE_CAP, linktype))
        for pkt in packets:
            ts_sec = int(pkt.timestamp)
            ts_usec = int(round((pkt.timestamp - ts_sec) * 1e6))
            fh.write(struct.pack("<IIII", ts_sec, ts_usec, len(pkt.data), len(pkt.data)))
            fh.write(pkt.data)


def write_label_sidecar(path: str | Path, packets: Sequence[RawPacket]) -> None:
    lines = [f"{i},{pkt.label}" for i, pkt in enumerate(packets)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# packet construction
# ---------------------------------------------------------------------------

def build_tcp_packet(*, src_ip: bytes = b"\x0a\x00\x00\x01", dst_ip: bytes = b"\x0a\x00\x00\x02",
                     src_port: int = 40000, dst_port: int = 80, seq: int = 0, ack_seq: int = 0,
                     tcp_flags: int = 0x18, window: int = 8192, ttl: int = 64, ip_id: int = 0,
                     df: bool = True, mf: bool = False, tos: int = 0,
                     options: bytes = b"", payload: bytes = b"",
                     include_ethernet: bool = True) -> bytes:
    """Assemble a checksummed Ethernet(optional)+IPv4+TCP packet."""
    if len(options) % 4:
        raise ValueError("TCP options must be padded to a 4-byte multiple")
    if len(options) > 40:
        raise ValueError("TCP options exceed 40 bytes")
    if len(payload) > PAYLOAD_REGION:
        raise ValueError(f"payload exceeds {PAYLOAD_REGION} bytes")

    data_off = 20 + len(options)
    total_len = 20 + data_off + len(payload)
    frag_word = (IPFlags(df, mf).word())
    ip = bytearray(struct.pack(
        ">BBHHHBBH4s4s",
        0x45, tos, total_len, ip_id, frag_word, ttl, _inet.IP_PROTO_TCP, 0, src_ip, dst_ip,
    ))
    ip[10:12] = struct.pack(">H", _inet.ipv4_header_checksum(bytes(ip)))

    tcp = bytearray(struct.pack(
        ">HHIIBBHHH",
        src_port, dst_port, seq, ack_seq, (data_off // 4) << 4, tcp_flags, window, 0, 0,
    ))
    tcp.extend(options)
    tcp.extend(payload)
    tcp[16:18] = struct.pack(">H", _inet.tcp_checksum(src_ip, dst_ip, bytes(tcp)))

    frame = bytes(ip) + bytes(tcp)
    if include_ethernet:
        eth = b"\x02\x00\x00\x00\x00\x02" + b"\x02\x00\x00\x00\x00\x01" + struct.pack(">H", _inet.ETHERTYPE_IPV4)
        frame = eth + frame
    return frame


@dataclass(frozen=True)
class IPFlags:
    df: bool
    mf: bool
    frag_offset: int = 0

    def word(self) -> int:
        w = self.frag_offset & 0x1FFF
        if self.df:
            w |= _inet.IP_FLAG_DF
        if self.mf:
            w |= _inet.IP_FLAG_MF
        return w


# ---------------------------------------------------------------------------
# synthetic traffic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrafficClassProfile:
    """Byte-pattern distribution for one traffic class (ranges inclusive)."""

    ttl: tuple[int, int]
    window: tuple[int, int]
    payload_len: tuple[int, int]
    payload_bytes: tuple[int, int]
    mss: tuple[int, int] | None = None
    wscale: tuple[int, int] | None = None


@dataclass(frozen=True)
class SynthProfile:
    """Two separable traffic classes.

    Defaults make header fields (TTL, window, option presence) and payload
    length the dominant separators, with payload content a weaker one, so
    that header-level perturbations can plausibly cross the boundary while
    enough residual signal survives for re-training.
    """

    mix: float = 0.5  # malicious fraction
    benign: TrafficClassProfile = TrafficClassProfile(
        ttl=(64, 128), window=(16000, 58000), payload_len=(60, 280),
        payload_bytes=(0x20, 0x7E), mss=(1380, 1460), wscale=(6, 9),
    )
    malicious: TrafficClassProfile = TrafficClassProfile(
        ttl=(32, 96), window=(2048, 14336), payload_len=(16, 60),
        payload_bytes=(0x20, 0xFF),
    )
    include_ethernet: bool = True

    def __post_init__(self):
        if not 0.0 < self.mix < 1.0:
            raise ConfigError("class mix must lie strictly between 0 and 1")


def _draw(rng: np.random.Generator, lohi: tuple[int, int]) -> int:
    return int(rng.integers(lohi[0], lohi[1] + 1))


def _class_options(rng: np.random.Generator, prof: TrafficClassProfile) -> bytes:
    opts = bytearray()
    if prof.mss is not None:
        opts += struct.pack(">BBH", _inet.TCP_OPT_MSS, 4, _draw(rng, prof.mss))
    if prof.wscale is not None:
        opts += bytes([_inet.TCP_OPT_WSCALE, 3, _draw(rng, prof.wscale)])
    if len(opts) % 4:
        opts += b"\x00" * (4 - len(opts) % 4)
    return bytes(opts)


def synth_generate(profile: SynthProfile, n: int, seed: int) -> list[RawPacket]:
    """Generate `n` labeled, checksum-valid IPv4/TCP packets.

    Deterministic for a fixed (profile, n, seed).
    """
    rng = np.random.default_rng(seed)
    packets: list[RawPacket] = []
    base_ts = 1_700_000_000.0
    for i in range(n):
        label = MALICIOUS if rng.random() < profile.mix else BENIGN
        prof = profile.malicious if label == MALICIOUS else profile.benign
        length = _draw(rng, prof.payload_len)
        payload = rng.integers(prof.payload_bytes[0], prof.payload_bytes[1] + 1,
                               size=length, dtype=np.uint8).tobytes()
        data = build_tcp_packet(
            src_ip=rng.integers(0, 256, size=4, dtype=np.uint8).tobytes(),
            dst_ip=rng.integers(0, 256, size=4, dtype=np.uint8).tobytes(),
            src_port=_draw(rng, (1024, 65535)),
            dst_port=_draw(rng, (1, 1023)),
            seq=_draw(rng, (0, 2**32 - 1)),
            ack_seq=_draw(rng, (0, 2**32 - 1)),
            window=_draw(rng, prof.window),
            ttl=_draw(rng, prof.ttl),
            ip_id=_draw(rng, (0, 65535)),
            df=True,
            options=_class_options(rng, prof),
            payload=payload,
            include_ethernet=profile.include_ethernet,
        )
        packets.append(RawPacket(data=data, label=label, timestamp=base_ts + 0.001 * i,
                                 has_link_header=profile.include_ethernet))
    return packets


# ---------------------------------------------------------------------------
# batching
# ---------------------------------------------------------------------------

def batch_split(data: Sequence[FeatureVector], n_batches: int,
                raw: Sequence[RawPacket] | None = None) -> list[Batch]:
    """Split into `n_batches` order-preserving batches with sizes differing by at most 1."""
    if n_batches < 1:
        raise ConfigError("n_batches must be at least 1")
    if len(data) == 0:
        raise ConfigError("cannot batch an empty dataset")
    if n_batches > len(data):
        raise ConfigError(f"n_batches={n_batches} exceeds dataset size {len(data)}")
    if raw is not None and len(raw) != len(data):
        raise ConfigError("raw packet list must align with the feature list")

    base, extra = divmod(len(data), n_batches)
    batches: list[Batch] = []
    start = 0
    for i in range(n_batches):
        size = base + (1 if i < extra else 0)
        sl = slice(start, start + size)
        batches.append(Batch(
            samples=list(data[sl]),
            index=i,
            raw=list(raw[sl]) if raw is not None else None,
        ))
        start += size
    return batches
