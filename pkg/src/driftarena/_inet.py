"""Low-level IPv4/TCP byte helpers shared by the traffic and perturb modules."""

from __future__ import annotations

import struct

ETH_HEADER_LEN = 14
ETHERTYPE_IPV4 = 0x0800
IP_PROTO_TCP = 6

# IP flags live in the top bits of the 16-bit flags/fragment-offset word.
IP_FLAG_DF = 0x4000
IP_FLAG_MF = 0x2000

TCP_OPT_EOL = 0
TCP_OPT_NOP = 1
TCP_OPT_MSS = 2
TCP_OPT_WSCALE = 3


def ones_complement_sum(data: bytes) -> int:
    """RFC 1071 checksum: one's-complement sum of 16-bit big-endian words."""
    if len(data) % 2:
        data = data + b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def ipv4_header_checksum(header: bytes) -> int:
    """Checksum of an IPv4 header whose checksum field is already zeroed."""
    return ones_complement_sum(header)


def tcp_checksum(src_ip: bytes, dst_ip: bytes, segment: bytes) -> int:
    """TCP checksum over the RFC 793 pseudo-header plus the segment.

    The segment's own checksum field must be zeroed by the caller.
    """
    pseudo = src_ip + dst_ip + struct.pack(">BBH", 0, IP_PROTO_TCP, len(segment))
    return ones_complement_sum(pseudo + segment)


def walk_tcp_options(options: bytes) -> list[bytes]:
    """Split a TCP options region into per-option byte chunks.

    NOPs are kept as 1-byte chunks; an EOL terminates the walk (trailing
    padding is dropped). A truncated final option is dropped rather than
    raising, since captures may clip options.
    """
    chunks: list[bytes] = []
    i = 0
    n = len(options)
    while i < n:
        kind = options[i]
        if kind == TCP_OPT_EOL:
            break
        if kind == TCP_OPT_NOP:
            chunks.append(options[i : i + 1])
            i += 1
            continue
        if i + 1 >= n:
            break
        length = options[i + 1]
        if length < 2 or i + length > n:
            break
        chunks.append(options[i : i + length])
        i += length
    return chunks


def find_tcp_option(options: bytes, kind: int) -> tuple[int, int] | None:
    """Return (offset, length) of the first option of `kind`, or None."""
    i = 0
    n = len(options)
    while i < n:
        k = options[i]
        if k == TCP_OPT_EOL:
            return None
        if k == TCP_OPT_NOP:
            i += 1
            continue
        if i + 1 >= n:
            return None
        length = options[i + 1]
        if length < 2 or i + length > n:
            return None
        if k == kind:
            return i, length
        i += length
    return None
