"""Exception types shared across the package."""


class ConfigError(ValueError):
    """An argument or configuration value violates an operation's contract."""


class PcapFormatError(RuntimeError):
    """Capture file does not carry a valid classic-pcap global header."""


class RejectedPacket(ValueError):
    """Packet is not Ethernet(optional)+IPv4+TCP and cannot be featurized."""


class MalformedPacket(ValueError):
    """Header length fields are inconsistent with the byte buffer."""


class EpisodeFinished(RuntimeError):
    """step() was called on an environment whose episode already ended."""
