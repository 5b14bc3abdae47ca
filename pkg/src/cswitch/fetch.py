"""Optional HTTP dump fetcher for pushshift-style search APIs.

Pages through a search endpoint with (subreddit, size, after, before)
parameters and writes what it gets as JSON Lines, the same format the
rest of the pipeline reads from disk.  All analysis stays file-based;
this is the only module that touches the network.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import requests

from . import DataError

logger = logging.getLogger(__name__)

DEFAULT_PAGE_SIZE = 100
REQUEST_TIMEOUT = 30.0


def fetch_dump(url: str, subreddit: str, out_path: str | Path,
               after: int | None = None, before: int | None = None,
               page_size: int = DEFAULT_PAGE_SIZE,
               max_posts: int | None = None,
               session: requests.Session | None = None) -> int:
    """Download posts for one subreddit into a JSON Lines dump.

    Cursors on ``created_utc``: each page asks for posts after the last
    timestamp seen, so the endpoint must return posts in ascending time
    order (the pushshift convention).  Stops on an empty page, when
    ``max_posts`` is reached, or when the cursor stops advancing (which
    would otherwise loop forever on a burst of same-second posts).
    Returns the number of records written.
    """
    owns_session = session is None
    if owns_session:
        session = requests.Session()
    out_path = Path(out_path)
    written = 0
    seen_ids: set[str] = set()
    cursor = after
    try:
        with open(out_path, "w", encoding="utf-8") as out:
            while max_posts is None or written < max_posts:
                params = {"subreddit": subreddit, "size": page_size}
                if cursor is not None:
                    params["after"] = cursor
                if before is not None:
                    params["before"] = before
                try:
                    response = session.get(url, params=params,
                                           timeout=REQUEST_TIMEOUT)
                except requests.RequestException as exc:
                    raise DataError(f"fetch failed: {exc}") from None
                if response.status_code != 200:
                    raise DataError(f"fetch failed: {url} returned "
                                    f"HTTP {response.status_code}")
                try:
                    page = response.json()["data"]
                except (ValueError, KeyError, TypeError):
                    raise DataError(
                        f"fetch failed: {url} did not return a JSON object "
                        "with a 'data' list") from None
                if not isinstance(page, list) or not all(
                        isinstance(r, dict) for r in page):
                    raise DataError(
                        f"fetch failed: {url} did not return a JSON object "
                        "with a 'data' list")
                if not page:
                    break
                fresh = [r for r in page
                         if str(r.get("id")) not in seen_ids]
                if not fresh:
                    logger.warning("cursor stuck at %s; stopping", cursor)
                    break
                for record in fresh:
                    if max_posts is not None and written >= max_posts:
                        break
                    seen_ids.add(str(record.get("id")))
                    out.write(json.dumps(record, sort_keys=True,
                                         ensure_ascii=False) + "\n")
                    written += 1
                last = page[-1].get("created_utc")
                if not isinstance(last, (int, float)):
                    raise DataError("fetch failed: record without a numeric "
                                    "created_utc cannot drive the cursor")
                cursor = int(last)
    finally:
        if owns_session:
            session.close()
    logger.info("fetched %d posts from r/%s into %s", written, subreddit,
                out_path)
    return written
