"""Interactive session service: FastAPI app exposing REST wrappers around the
core pipeline and the WebSocket session protocol used by the browser UI."""

from .app import create_app

__all__ = ["create_app"]
