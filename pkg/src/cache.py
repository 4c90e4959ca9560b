"""
Bounded in-memory memo caches.

Antenna gain tables and delay-spread calibration draws are pure functions
of their arguments, so entries never go stale; the oldest unused entry is
dropped when a cache is full.
"""

import logging
from collections import OrderedDict
from functools import wraps
from threading import Lock
from typing import Any, Callable, Hashable, Optional

logger = logging.getLogger(__name__)

_MISSING = object()


class MemoCache:
    """LRU key/value store with hit and miss counters."""

    def __init__(self, max_size: int = 128):
        """
        Args:
            max_size: Number of entries kept before eviction starts
        """
        self._entries: OrderedDict[Hashable, Any] = OrderedDict()
        self._max_size = max_size
        self._lock = Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable, default: Any = None) -> Any:
        """Return the stored value and mark it recently used, else ``default``."""
        with self._lock:
            value = self._entries.get(key, _MISSING)
            if value is _MISSING:
                self.misses += 1
                return default
            self._entries.move_to_end(key)
            self.hits += 1
        logger.debug(f"Memo hit: {key!r:.80}")
        return value

    def set(self, key: Hashable, value: Any) -> None:
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self._max_size:
                evicted, _ = self._entries.popitem(last=False)
                logger.debug(f"Memo evicted: {evicted!r:.80}")

    def clear(self) -> None:
        """Drop every entry and zero the counters."""
        with self._lock:
            self._entries.clear()
            self.hits = self.misses = 0

    @property
    def size(self) -> int:
        return len(self._entries)


gain_cache = MemoCache(max_size=64)
calibration_cache = MemoCache(max_size=64)


def cached(cache: MemoCache, key_func: Optional[Callable[..., Hashable]] = None):
    """
    Memoize a function in ``cache``.

    Values are shared between callers, so the decorated function must return
    immutable results (tuples, read-only arrays). ``None`` results are not
    stored.

    Args:
        cache: MemoCache holding the results
        key_func: Builds the key from the call arguments; defaults to the
            qualified function name plus the arguments
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            key = key_func(*args, **kwargs) if key_func else (
                func.__qualname__, args, tuple(sorted(kwargs.items()))
            )
            value = cache.get(key, _MISSING)
            if value is _MISSING:
                value = func(*args, **kwargs)
                if value is not None:
                    cache.set(key, value)
            return value

        wrapper.cache = cache
        return wrapper
    return decorator
