"""Functionality-preserving packet perturbations.

All mutations operate on the real byte buffer, keep the IPv4 and TCP
checksums and length fields consistent, saturate at field bounds, and
never touch the label or (except for the append action) the payload.
An action that cannot change the packet (saturated field, full options
region, full payload, flag bits already in the target state) is reported
as ineffective and leaves the packet untouched.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from . import _inet, traffic
from .errors import MalformedPacket


class PerturbAction(IntEnum):
    SET_FRAGMENT = 0
    SET_MORE_FRAGMENTS = 1
    TTL_INC = 2
    TTL_DEC = 3
    WINDOW_INC = 4
    WINDOW_DEC = 5
    MSS_ADD_OR_INC = 6
    MSS_DEC = 7
    WSCALE_ADD_OR_INC = 8
    WSCALE_DEC = 9
    APPEND_SEGMENT_INFO = 10


N_ACTIONS = len(PerturbAction)

TTL_BOUNDS = (1, 255)
WINDOW_BOUNDS = (1, 65535)
MSS_BOUNDS = (1, 65535)
WSCALE_BOUNDS = (0, 14)
MAX_TCP_OPTIONS = 40


@dataclass(frozen=True)
class PerturbConfig:
    """Mutation step sizes and insertion defaults."""

    ttl_step: int = 1
    window_step: int = 1024
    mss_step: int = 64
    wscale_step: int = 1
    append_pattern: bytes = b"0123456789abcdefghijklmnopqrstuv"
    mss_insert: int = 1400
    wscale_insert: int = 7


DEFAULT_CONFIG = PerturbConfig()


class PacketView:
    """Structured, read-mostly view over a validated IPv4/TCP byte buffer.

    Mutation happens through `apply`, which returns a fresh view; a view's
    buffer is never modified in place.
    """

    def __init__(self, data: bytes, label: int, has_link_header: bool = True,
                 timestamp: float = 0.0):
        self._data = bytes(data)
        self.label = label
        self.has_link_header = has_link_header
        self.timestamp = timestamp
        self._ip_off, self._ihl, self._tcp_off, self._doff = traffic.parse_structure(
            self._data, has_link_header)
        total_len = struct.unpack(">H", self._data[self._ip_off + 2: self._ip_off + 4])[0]
        if self._ip_off + total_len > len(self._data):
            raise MalformedPacket("IP total length exceeds the buffer")
        self._total_len = total_len

    @classmethod
    def from_raw(cls, pkt: traffic.RawPacket) -> "PacketView":
        return cls(pkt.data, pkt.label, pkt.has_link_header, pkt.timestamp)

    def to_raw(self) -> traffic.RawPacket:
        return traffic.RawPacket(data=self._data, label=self.label,
                                 timestamp=self.timestamp,
                                 has_link_header=self.has_link_header)

    # -- field accessors ----------------------------------------------------

    @property
    def raw(self) -> bytes:
        return self._data

    @property
    def ttl(self) -> int:
        return self._data[self._ip_off + 8]

    @property
    def ip_flags(self) -> tuple[bool, bool]:
        """(DF, MF)."""
        word = struct.unpack(">H", self._data[self._ip_off + 6: self._ip_off + 8])[0]
        return bool(word & _inet.IP_FLAG_DF), bool(word & _inet.IP_FLAG_MF)

    @property
    def window_size(self) -> int:
        return struct.unpack(">H", self._data[self._tcp_off + 14: self._tcp_off + 16])[0]

    @property
    def options(self) -> bytes:
        return self._data[self._tcp_off + 20: self._tcp_off + self._doff]

    def _option_value(self, kind: int) -> int | None:
        found = _inet.find_tcp_option(self.options, kind)
        if found is None:
            return None
        off, length = found
        body = self.options[off + 2: off + length]
        return int.from_bytes(body, "big") if body else 0

    @property
    def mss(self) -> int | None:
        return self._option_value(_inet.TCP_OPT_MSS)

    @property
    def window_scale(self) -> int | None:
        return self._option_value(_inet.TCP_OPT_WSCALE)

    @property
    def payload(self) -> bytes:
        start = self._tcp_off + self._doff
        end = self._ip_off + self._total_len
        return self._data[start:end]

    def is_valid(self) -> bool:
        """Re-verify checksums and length-field consistency."""
        d = self._data
        ip = bytearray(d[self._ip_off: self._ip_off + self._ihl])
        stored_ip = struct.unpack(">H", bytes(ip[10:12]))[0]
        ip[10:12] = b"\x00\x00"
        if _inet.ipv4_header_checksum(bytes(ip)) != stored_ip:
            return False
        seg = bytearray(d[self._tcp_off: self._ip_off + self._total_len])
        stored_tcp = struct.unpack(">H", bytes(seg[16:18]))[0]
        seg[16:18] = b"\x00\x00"
        src = d[self._ip_off + 12: self._ip_off + 16]
        dst = d[self._ip_off + 16: self._ip_off + 20]
        if _inet.tcp_checksum(src, dst, bytes(seg)) != stored_tcp:
            return False
        return self._ip_off + self._total_len <= len(d) and len(self.payload) <= traffic.PAYLOAD_REGION


# ---------------------------------------------------------------------------
# checksum maintenance
# ---------------------------------------------------------------------------

def _fix_checksums(buf: bytearray, ip_off: int, ihl: int, tcp_off: int, total_len: int) -> None:
    buf[ip_off + 10: ip_off + 12] = b"\x00\x00"
    buf[ip_off + 10: ip_off + 12] = struct.pack(
        ">H", _inet.ipv4_header_checksum(bytes(buf[ip_off: ip_off + ihl])))
    seg_end = ip_off + total_len
    buf[tcp_off + 16: tcp_off + 18] = b"\x00\x00"
    src = bytes(buf[ip_off + 12: ip_off + 16])
    dst = bytes(buf[ip_off + 16: ip_off + 20])
    buf[tcp_off + 16: tcp_off + 18] = struct.pack(
        ">H", _inet.tcp_checksum(src, dst, bytes(buf[tcp_off: seg_end])))


def recompute_checksums(view: PacketView) -> PacketView:
    """Rewrite both checksums from the current buffer contents (idempotent)."""
    buf = bytearray(view.raw)
    _fix_checksums(buf, view._ip_off, view._ihl, view._tcp_off, view._total_len)
    return PacketView(bytes(buf), view.label, view.has_link_header, view.timestamp)


# ---------------------------------------------------------------------------
# the perturbation operator
# ---------------------------------------------------------------------------

def _saturate(value: int, step: int, bounds: tuple[int, int]) -> int:
    return max(bounds[0], min(bounds[1], value + step))


def _rebuild_options(view: PacketView, new_options: bytes) -> bytearray | None:
    """Replace the TCP options region, shifting the payload; None if too big."""
    if len(new_options) % 4:
        new_options = new_options + b"\x00" * (4 - len(new_options) % 4)
    if len(new_options) > MAX_TCP_OPTIONS:
        return None
    d = view.raw
    head = bytearray(d[: view._tcp_off + 20])
    tail = d[view._tcp_off + view._doff: view._ip_off + view._total_len]
    buf = head + new_options + tail
    new_doff = 20 + len(new_options)
    buf[view._tcp_off + 12] = ((new_doff // 4) << 4) | (buf[view._tcp_off + 12] & 0x0F)
    new_total = view._total_len + (new_doff - view._doff)
    buf[view._ip_off + 2: view._ip_off + 4] = struct.pack(">H", new_total)
    return buf


def _mutate_option(view: PacketView, kind: int, step: int, insert_value: int | None,
                   bounds: tuple[int, int], width: int) -> bytearray | None:
    """Adjust an option value in place, or insert the option when allowed.

    Returns the mutated buffer, or None when the action is ineffective
    (absent option with no insert, saturated value, or no room to insert).
    """
    opts = view.options
    found = _inet.find_tcp_option(opts, kind)
    if found is None:
        if insert_value is None:
            return None
        new_opt = bytes([kind, 2 + width]) + insert_value.to_bytes(width, "big")
        chunks = _inet.walk_tcp_options(opts)
        return _rebuild_options(view, b"".join(chunks) + new_opt)
    off, length = found
    if length != 2 + width:
        return None
    old = int.from_bytes(opts[off + 2: off + length], "big")
    new = _saturate(old, step, bounds)
    if new == old:
        return None
    buf = bytearray(view.raw)
    base = view._tcp_off + 20 + off + 2
    buf[base: base + width] = new.to_bytes(width, "big")
    return buf


def apply(view: PacketView, action: PerturbAction | int,
          config: PerturbConfig = DEFAULT_CONFIG) -> tuple[PacketView, bool]:
    """Apply one perturbation; return (new_view, effective).

    When `effective` is False the original view is returned unchanged.
    The returned view always carries valid checksums and length fields,
    and the label is never altered.
    """
    action = PerturbAction(action)
    buf: bytearray | None = None
    ip_off, tcp_off = view._ip_off, view._tcp_off

    if action in (PerturbAction.SET_FRAGMENT, PerturbAction.SET_MORE_FRAGMENTS):
        df, mf = view.ip_flags
        want_mf = action == PerturbAction.SET_MORE_FRAGMENTS
        if not df and mf == want_mf:
            return view, False
        word = struct.unpack(">H", view.raw[ip_off + 6: ip_off + 8])[0]
        word &= ~(_inet.IP_FLAG_DF | _inet.IP_FLAG_MF)
        if want_mf:
            word |= _inet.IP_FLAG_MF
        buf = bytearray(view.raw)
        buf[ip_off + 6: ip_off + 8] = struct.pack(">H", word)

    elif action in (PerturbAction.TTL_INC, PerturbAction.TTL_DEC):
        step = config.ttl_step if action == PerturbAction.TTL_INC else -config.ttl_step
        new = _saturate(view.ttl, step, TTL_BOUNDS)
        if new == view.ttl:
            return view, False
        buf = bytearray(view.raw)
        buf[ip_off + 8] = new

    elif action in (PerturbAction.WINDOW_INC, PerturbAction.WINDOW_DEC):
        step = config.window_step if action == PerturbAction.WINDOW_INC else -config.window_step
        new = _saturate(view.window_size, step, WINDOW_BOUNDS)
        if new == view.window_size:
            return view, False
        buf = bytearray(view.raw)
        buf[tcp_off + 14: tcp_off + 16] = struct.pack(">H", new)

    elif action in (PerturbAction.MSS_ADD_OR_INC, PerturbAction.MSS_DEC):
        inc = action == PerturbAction.MSS_ADD_OR_INC
        buf = _mutate_option(
            view, _inet.TCP_OPT_MSS,
            config.mss_step if inc else -config.mss_step,
            config.mss_insert if inc else None,
            MSS_BOUNDS, width=2)
        if buf is None:
            return view, False

    elif action in (PerturbAction.WSCALE_ADD_OR_INC, PerturbAction.WSCALE_DEC):
        inc = action == PerturbAction.WSCALE_ADD_OR_INC
        buf = _mutate_option(
            view, _inet.TCP_OPT_WSCALE,
            config.wscale_step if inc else -config.wscale_step,
            config.wscale_insert if inc else None,
            WSCALE_BOUNDS, width=1)
        if buf is None:
            return view, False

    elif action == PerturbAction.APPEND_SEGMENT_INFO:
        room = traffic.PAYLOAD_REGION - len(view.payload)
        if room <= 0 or not config.append_pattern:
            return view, False
        chunk = config.append_pattern[:room]
        insert_at = ip_off + view._total_len
        data = view.raw
        buf = bytearray(data[:insert_at]) + bytearray(chunk) + bytearray(data[insert_at:])
        new_total = view._total_len + len(chunk)
        buf[ip_off + 2: ip_off + 4] = struct.pack(">H", new_total)

    else:  # pragma: no cover - exhaustive over the enum
        raise ValueError(f"unknown action {action}")

    total_len = struct.unpack(">H", bytes(buf[ip_off + 2: ip_off + 4]))[0]
    _fix_checksums(buf, ip_off, view._ihl, tcp_off, total_len)
    return PacketView(bytes(buf), view.label, view.has_link_header, view.timestamp), True


def to_features(view: PacketView) -> traffic.FeatureVector:
    """Feature vector of the serialized packet; matches traffic.preprocess."""
    return traffic.preprocess(view.to_raw())
