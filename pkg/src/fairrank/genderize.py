"""Statistical gender inference over first names via an HTTP API.

The wire format is a GET with a ``name`` query parameter answered by JSON
``{name, gender|null, probability, count}``. The base URL always comes from
configuration (the ``FAIRRANK_GENDERIZE_URL`` environment variable or an
explicit argument); live lookups are disabled when it is unset.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import httpx

from .dataset import Gender
from .errors import InputError, QuotaExceededError, TransportError

BASE_URL_ENV_VAR = "FAIRRANK_GENDERIZE_URL"


@dataclass(frozen=True)
class InferredGender:
    gender: Gender
    probability: float


class GenderInferenceClient:
    """Caching client for the name-to-gender prediction endpoint.

    Lookups are cached by name for the lifetime of the client, so a roster
    containing repeated first names costs one request per distinct name.
    """

    def __init__(
        self,
        base_url: str,
        retries: int = 2,
        timeout: float = 10.0,
        transport: httpx.BaseTransport | None = None,
    ):
        if not base_url:
            raise InputError("gender inference requires a base URL")
        self._retries = retries
        self._cache: dict[str, InferredGender | None] = {}
        self._http = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, **kwargs) -> "GenderInferenceClient | None":
        """Build a client from the environment, or None when disabled."""
        base_url = os.environ.get(BASE_URL_ENV_VAR, "")
        if not base_url:
            return None
        return cls(base_url, **kwargs)

    def close(self) -> None:
        self._http.close()

    def lookup(self, first_name: str) -> InferredGender | None:
        """Resolve a first name, returning None when the API has no answer."""
        if not first_name or first_name.isspace():
            raise InputError("cannot infer gender from a blank name")
        key = first_name.strip().lower()
        if key in self._cache:
            return self._cache[key]
        result = self._fetch(key)
        self._cache[key] = result
        return result

    def _fetch(self, name: str) -> InferredGender | None:
        last_exc: Exception | None = None
        for _ in range(self._retries + 1):
            try:
                response = self._http.get("/", params={"name": name})
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            return self._parse(name, response)
        raise TransportError(f"gender lookup for {name!r} failed after {self._retries + 1} attempts: {last_exc}")

    @staticmethod
    def _parse(name: str, response: httpx.Response) -> InferredGender | None:
        if response.status_code == 429:
            raise QuotaExceededError(f"gender API quota exceeded while resolving {name!r}")
        if response.status_code >= 500:
            raise TransportError(f"gender API returned {response.status_code} for {name!r}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise TransportError(f"gender API returned non-JSON payload for {name!r}") from exc
        if isinstance(payload, dict) and "error" in payload:
            message = str(payload["error"])
            if "quota" in message.lower() or "limit" in message.lower():
                raise QuotaExceededError(f"gender API quota exceeded: {message}")
            raise TransportError(f"gender API error for {name!r}: {message}")
        gender = payload.get("gender")
        if gender is None:
            return None
        try:
            resolved = Gender(str(gender))
        except ValueError:
            raise TransportError(f"gender API returned unrecognized gender {gender!r}") from None
        if resolved is Gender.UNKNOWN:
            return None
        return InferredGender(gender=resolved, probability=float(payload.get("probability", 0.0)))


def infer_gender(first_name: str, client: GenderInferenceClient) -> InferredGender | None:
    """Query the inference client for one first name (None = no result)."""
    return client.lookup(first_name)
