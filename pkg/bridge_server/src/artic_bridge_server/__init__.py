"""Protocol-v1 server wrapping pretrained decode-and-perceive models."""

from .adapters import ChannelMap, FakeDecoder, FakePerceiver, Segment, fake_models
from .pretrained import ModelMissing, load_pretrained
from .server import BridgeServer, ModelSession, ServerConfig, serve_socket, serve_stdio

__version__ = "0.1.0"

__all__ = [
    "BridgeServer",
    "ChannelMap",
    "FakeDecoder",
    "FakePerceiver",
    "ModelMissing",
    "ModelSession",
    "Segment",
    "ServerConfig",
    "fake_models",
    "load_pretrained",
    "serve_socket",
    "serve_stdio",
    "__version__",
]
