"""HTTP service wrapping the library: pydantic bodies and the FastAPI app."""

from .app import create_app

__all__ = ["create_app"]
