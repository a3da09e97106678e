"""hdyn_exporter: training-hook adapter emitting HDYN dynamics files."""

from .features import export_npz, write_feature_file
from .session import CHANNEL_ORDER, HookSession, ProtocolError

__version__ = "0.1.0"
