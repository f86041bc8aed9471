from .app import create_app
from .store import Store, UnknownResearch, UnknownSession

__all__ = ["Store", "UnknownResearch", "UnknownSession", "create_app"]
