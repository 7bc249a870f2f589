"""Thread-count configuration from the CHEBMAP_THREADS environment variable."""
import os


def threads() -> int:
    raw = os.environ.get("CHEBMAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
