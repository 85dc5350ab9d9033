"""Entity linking against the DBLP search API.

Mentions found in a logical form are classified by the relation they sit
next to (person, publication, or venue), then resolved through the
matching search endpoint.  Candidate order is the API's order and is
never re-ranked locally.  Responses are cached on disk in the same
layout the offline fixture mode reads, so a warm cache doubles as a
recorded fixture set.
"""

import hashlib
import json
import logging
import re
import threading
import time
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

import requests

from .sparql import QueryAst, TriplePattern, iter_triples

logger = logging.getLogger(__name__)

AUTHOR, PUBLICATION, VENUE = "author", "publication", "venue"

# API path segment per mention type.
_API_SEGMENT = {AUTHOR: "author", PUBLICATION: "publ", VENUE: "venue"}


class LinkingError(RuntimeError):
    pass


class NetworkError(LinkingError):
    pass


class NoCandidates(LinkingError):
    pass


class FixtureMissing(LinkingError):
    pass


class MalformedResponse(LinkingError):
    pass


@dataclass(frozen=True)
class Mention:
    surface: str
    pattern: TriplePattern | None = None
    slot: str | None = None  # subject | object

    def __post_init__(self):
        if not self.surface.strip():
            raise ValueError("mention surface must be non-empty")

    @property
    def context_predicate(self) -> str | None:
        return self.pattern.predicate.value if self.pattern else None


@dataclass(frozen=True)
class EntityCandidate:
    iri: str
    label: str
    rank: int
    entity_type: str


@dataclass
class LinkerConfig:
    api_base_url: str = "https://dblp.org"
    mode: str = "live"  # live | offline
    fixture_path: str | None = None
    cache_path: str | None = None
    requests_per_second: float = 1.0
    max_candidates: int = 5

    def validate(self) -> None:
        if self.mode not in ("live", "offline"):
            raise ValueError(f"unknown linker mode {self.mode!r}")
        if self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")
        if self.mode == "offline":
            if not self.fixture_path or not Path(self.fixture_path).is_dir():
                raise ValueError("offline mode requires an existing fixture_path")


def extract_mentions(logical_form: QueryAst) -> list[Mention]:
    """Distinct mentions in order of first appearance, with their context."""
    seen: set[str] = set()
    mentions = []
    for pattern in iter_triples(logical_form.where):
        for slot, term in (("subject", pattern.subject), ("object", pattern.object)):
            if term.kind == "mention" and term.value not in seen:
                seen.add(term.value)
                mentions.append(Mention(term.value, pattern, slot))
    return mentions


# Local-name suffixes of the relations that drive type classification.
AUTHORSHIP_RELATIONS = frozenset({"authoredBy", "editedBy"})
PUBLICATION_SUBJECT_RELATIONS = frozenset({
    "authoredBy", "editedBy", "title", "yearOfPublication", "publishedIn",
    "numberOfCreators", "doi",
})
VENUE_OBJECT_RELATIONS = frozenset({"publishedIn", "publishedBy"})


def _local_name(iri: str | None) -> str:
    if not iri:
        return ""
    return iri.rsplit("#", 1)[-1].rsplit("/", 1)[-1]


def classify_mention_type(mention: Mention) -> str:
    """Route a mention to the author, publication, or venue search API.

    Object of an authorship relation -> author; subject of a
    publication-describing relation -> publication; object of a
    published-in relation -> venue; anything else defaults to author.
    """
    name = _local_name(mention.context_predicate)
    if mention.slot == "object":
        if name in AUTHORSHIP_RELATIONS:
            return AUTHOR
        if name in VENUE_OBJECT_RELATIONS:
            return VENUE
    elif mention.slot == "subject":
        if name in PUBLICATION_SUBJECT_RELATIONS:
            return PUBLICATION
    return AUTHOR


def normalize_surface(surface: str) -> str:
    surface = unicodedata.normalize("NFC", surface)
    return re.sub(r"\s+", " ", surface).strip().lower()


def fixture_key(surface: str) -> str:
    return hashlib.sha256(normalize_surface(surface).encode("utf-8")).hexdigest()


def parse_api_response(payload, entity_type: str,
                       max_candidates: int) -> list[EntityCandidate]:
    """Extract ranked candidates from a DBLP search API response."""
    try:
        hits = payload["result"]["hits"]
    except (KeyError, TypeError):
        raise MalformedResponse("response has no result.hits") from None
    hit_list = hits.get("hit") or []
    if isinstance(hit_list, dict):
        hit_list = [hit_list]
    candidates = []
    for entry in hit_list:
        info = entry.get("info") if isinstance(entry, dict) else None
        if not isinstance(info, dict):
            raise MalformedResponse("hit entry has no info object")
        url = info.get("url")
        if not url:
            continue
        if url.endswith(".html"):
            url = url[:-5]
        label = info.get("author") or info.get("title") or info.get("venue") or ""
        candidates.append(EntityCandidate(iri=url, label=label,
                                          rank=len(candidates) + 1,
                                          entity_type=entity_type))
        if len(candidates) >= max_candidates:
            break
    return candidates


class _RateLimiter:
    """Serializes request starts to at most one per 1/rate seconds."""

    def __init__(self, rate: float):
        self.interval = 1.0 / rate
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            delay = self._next_allowed - now
            if delay > 0:
                time.sleep(delay)
                now = time.monotonic()
            self._next_allowed = now + self.interval


class DblpLinker:
    """Resolves mentions to ranked DBLP IRIs; shareable across threads."""

    def __init__(self, config: LinkerConfig,
                 session: requests.Session | None = None):
        config.validate()
        self.config = config
        self.session = session or requests.Session()
        self._limiter = _RateLimiter(config.requests_per_second)
        self._cache_lock = threading.Lock()

    # -- storage -------------------------------------------------------

    def _record_path(self, root: str, entity_type: str, surface: str) -> Path:
        return Path(root) / entity_type / f"{fixture_key(surface)}.json"

    def _read_record(self, root: str, entity_type: str, surface: str):
        path = self._record_path(root, entity_type, surface)
        if not path.is_file():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def _write_cache(self, entity_type: str, surface: str, payload) -> None:
        if not self.config.cache_path:
            return
        path = self._record_path(self.config.cache_path, entity_type, surface)
        with self._cache_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False)
            tmp.replace(path)

    # -- linking ---------------------------------------------------------

    def link(self, mention: Mention) -> list[EntityCandidate]:
        """Ranked candidates for one mention.

        Raises NoCandidates when the API/fixture knows nothing, and
        FixtureMissing when offline mode has no recorded response.
        """
        entity_type = classify_mention_type(mention)
        surface = mention.surface.strip()

        if self.config.cache_path:
            payload = self._read_record(self.config.cache_path, entity_type, surface)
            if payload is not None:
                return self._finish(payload, entity_type, surface)

        if self.config.mode == "offline":
            payload = self._read_record(self.config.fixture_path, entity_type, surface)
            if payload is None:
                raise FixtureMissing(
                    f"no fixture for ({entity_type}, {surface!r}) under "
                    f"{self.config.fixture_path}")
            return self._finish(payload, entity_type, surface)

        payload = self._request(entity_type, surface)
        self._write_cache(entity_type, surface, payload)
        return self._finish(payload, entity_type, surface)

    def _finish(self, payload, entity_type: str, surface: str
                ) -> list[EntityCandidate]:
        candidates = parse_api_response(payload, entity_type,
                                        self.config.max_candidates)
        if not candidates:
            raise NoCandidates(f"no {entity_type} results for {surface!r}")
        return candidates

    def _request(self, entity_type: str, surface: str, retries: int = 2,
                 backoff: float = 0.5):
        url = (f"{self.config.api_base_url}/search/{_API_SEGMENT[entity_type]}"
               f"/api?q={quote(surface)}&format=json")
        last: Exception | None = None
        for attempt in range(retries + 1):
            if attempt:
                time.sleep(backoff * (2 ** (attempt - 1)))
            self._limiter.wait()
            try:
                response = self.session.get(url, timeout=15)
            except requests.RequestException as exc:
                last = NetworkError(f"request failed: {exc}")
                logger.warning("search API request failed (attempt %d): %s",
                               attempt + 1, exc)
                continue
            if response.status_code >= 500:
                last = NetworkError(f"HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise NetworkError(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                return response.json()
            except ValueError:
                raise MalformedResponse("response is not JSON") from None
        raise last
