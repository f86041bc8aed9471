from .app import create_daemon_app
from .session import DaemonSession, NotConsented

__all__ = ["DaemonSession", "NotConsented", "create_daemon_app"]
