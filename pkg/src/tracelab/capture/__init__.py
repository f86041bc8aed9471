from .activity import Accepted, ActivityFilter, Filtered, UnknownCategory, FILTER_EXCLUDED, FILTER_THROTTLED
from .signatures import extract_signatures
from .snapshots import FileWatcher, SnapshotEngine, language_hint_for

__all__ = [
    "Accepted",
    "ActivityFilter",
    "FILTER_EXCLUDED",
    "FILTER_THROTTLED",
    "FileWatcher",
    "Filtered",
    "SnapshotEngine",
    "UnknownCategory",
    "extract_signatures",
    "language_hint_for",
]
