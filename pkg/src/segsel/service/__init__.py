"""HTTP facade over the selection pipeline."""

from segsel.service.app import app, create_app

__all__ = ["app", "create_app"]
