"""Bounded single-GET fetching of user-supplied URLs."""

from __future__ import annotations

from typing import Optional

import httpx

MAX_BYTES = 5 * 1024 * 1024
TIMEOUT = 10.0
MAX_REDIRECTS = 5


class FetchError(Exception):
    pass


def fetch_url(
    url: str,
    *,
    timeout: float = TIMEOUT,
    max_redirects: int = MAX_REDIRECTS,
    max_bytes: int = MAX_BYTES,
    client: Optional[httpx.Client] = None,
) -> tuple[bytes, str]:
    """GET ``url`` and return (body, content type). Non-2xx, oversize bodies
    and transport failures raise FetchError."""
    own = client is None
    client = client or httpx.Client(timeout=timeout, follow_redirects=True, max_redirects=max_redirects)
    try:
        with client.stream("GET", url) as response:
            if response.status_code >= 400:
                raise FetchError(f"GET {url} returned HTTP {response.status_code}")
            declared = response.headers.get("content-length")
            if declared and declared.isdigit() and int(declared) > max_bytes:
                raise FetchError(f"GET {url}: body of {declared} bytes exceeds {max_bytes}")
            body = bytearray()
            for chunk in response.iter_bytes():
                body.extend(chunk)
                if len(body) > max_bytes:
                    raise FetchError(f"GET {url}: body exceeds {max_bytes} bytes")
            return bytes(body), response.headers.get("content-type", "")
    except httpx.TooManyRedirects:
        raise FetchError(f"GET {url}: more than {max_redirects} redirects") from None
    except httpx.HTTPError as err:
        raise FetchError(f"GET {url} failed: {type(err).__name__}: {err}") from None
    finally:
        if own:
            client.close()
