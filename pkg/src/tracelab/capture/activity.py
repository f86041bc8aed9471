"""Filtering and throttling of adapter-submitted activity events."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..config.types import ActivityPolicy
from ..records import ACTIVITY_CATEGORIES

FILTER_EXCLUDED = "excluded"
FILTER_THROTTLED = "throttled"


class UnknownCategory(Exception):
    def __init__(self, category: str):
        self.category = category
        super().__init__(f"unknown activity category {category!r}")


@dataclass(frozen=True)
class Accepted:
    pass


@dataclass(frozen=True)
class Filtered:
    reason: str


Verdict = Union[Accepted, Filtered]


class ActivityFilter:
    """Stateful per-session filter applying an ActivityPolicy.

    Throttling is keyed by (category, event_id) against the category's
    minimum interval; the timestamp of the last *accepted* event is what
    counts, so a burst does not reset the window.
    """

    def __init__(self, policy: ActivityPolicy):
        self.policy = policy
        self._last_accepted: dict[tuple[str, str], int] = {}

    def check(self, category: str, event_id: str, timestamp: int) -> Verdict:
        if category not in ACTIVITY_CATEGORIES:
            raise UnknownCategory(category)
        if event_id in self.policy.excluded:
            return Filtered(FILTER_EXCLUDED)
        min_interval = self.policy.min_interval_ms.get(category, 0)
        key = (category, event_id)
        last: Optional[int] = self._last_accepted.get(key)
        if min_interval > 0 and last is not None and timestamp - last < min_interval:
            return Filtered(FILTER_THROTTLED)
        self._last_accepted[key] = timestamp
        return Accepted()
