"""Redlist of public-key hashes: building, refreshing and screening.

Entries live in a frozenset that is replaced wholesale on refresh, so a
reader holding ``entries`` always sees one complete version of the list.
"""

from __future__ import annotations

import email.utils
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Protocol

from .chain import KEY_HASH_SIZE, Block, KeyHash, Transaction

log = logging.getLogger(__name__)


class RedlistError(Exception):
    pass


class RedlistSourceError(RedlistError):
    """Source could not be read."""


class RedlistFormatError(RedlistError):
    def __init__(self, lineno: int, line: str):
        super().__init__(f"malformed redlist entry on line {lineno}: {line!r}")
        self.lineno = lineno


def parse_entries(text: str) -> frozenset[KeyHash]:
    entries = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if len(line) != 2 * KEY_HASH_SIZE:
            raise RedlistFormatError(lineno, line)
        try:
            entries.add(KeyHash.from_hex(line.lower()))
        except ValueError:
            raise RedlistFormatError(lineno, line) from None
    return frozenset(entries)


def format_entries(keys: Iterable[KeyHash]) -> str:
    return "".join(k.hex() + "\n" for k in sorted(keys))


class Source(Protocol):
    descriptor: str
    body_bytes: int

    def fetch_if_newer(self, since: int) -> Optional[tuple[str, int]]:
        """Return ``(body, timestamp)`` if the source is newer than ``since``.

        Raises :class:`RedlistSourceError` when the source cannot be reached.
        """


class FileSource:
    """Hex-lines file; the modification time is the version stamp."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.descriptor = str(self.path)
        self.body_bytes = 0

    def fetch_if_newer(self, since: int) -> Optional[tuple[str, int]]:
        try:
            stamp = int(self.path.stat().st_mtime)
            if stamp <= since:
                return None
            data = self.path.read_bytes()
        except OSError as exc:
            raise RedlistSourceError(f"{self.path}: {exc}") from exc
        self.body_bytes += len(data)
        return data.decode("ascii", errors="replace"), stamp


class HttpSource:
    """Served endpoint, polled with a conditional GET.

    An unchanged list answers 304 with no body, so the poll costs a header
    exchange only.
    """

    def __init__(self, url: str, timeout: float = 5.0):
        self.descriptor = url
        self.url = url
        self.timeout = timeout
        self.body_bytes = 0

    def fetch_if_newer(self, since: int) -> Optional[tuple[str, int]]:
        req = urllib.request.Request(self.url)
        if since > 0:
            req.add_header("If-Modified-Since", email.utils.formatdate(since, usegmt=True))
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                stamp = _parse_http_date(resp.headers.get("Last-Modified"))
                data = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code == 304:
                return None
            raise RedlistSourceError(f"{self.url}: HTTP {exc.code}") from exc
        except (urllib.error.URLError, OSError) as exc:
            raise RedlistSourceError(f"{self.url}: {exc}") from exc
        self.body_bytes += len(data)
        if stamp <= since:
            return None
        return data.decode("ascii", errors="replace"), stamp


def _parse_http_date(value: Optional[str]) -> int:
    if not value:
        return 0
    parsed = email.utils.parsedate_to_datetime(value)
    return int(parsed.timestamp())


def open_source(descriptor: str) -> Source:
    if descriptor.startswith(("http://", "https://")):
        return HttpSource(descriptor)
    return FileSource(descriptor)


class UpdateStatus:
    UNCHANGED = "unchanged"
    REFRESHED = "refreshed"


@dataclass
class Redlist:
    entries: frozenset[KeyHash] = frozenset()
    version_timestamp: int = 0
    source: Optional[Source] = None
    _write_lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: object) -> bool:
        return key in self.entries

    def add(self, *keys: KeyHash) -> None:
        with self._write_lock:
            self.entries = self.entries | frozenset(keys)

    def replace(self, entries: frozenset[KeyHash], timestamp: int) -> None:
        with self._write_lock:
            self.entries = entries
            self.version_timestamp = max(self.version_timestamp, timestamp)


def build_redlist(source: Source | str | os.PathLike | None = None) -> Redlist:
    if source is None:
        return Redlist()
    if not hasattr(source, "fetch_if_newer"):
        source = open_source(os.fspath(source))
    fetched = source.fetch_if_newer(-1)
    assert fetched is not None
    body, stamp = fetched
    return Redlist(parse_entries(body), stamp, source)


def check_update(r: Redlist) -> str:
    if r.source is None:
        return UpdateStatus.UNCHANGED
    try:
        fetched = r.source.fetch_if_newer(r.version_timestamp)
        if fetched is None:
            return UpdateStatus.UNCHANGED
        body, stamp = fetched
        entries = parse_entries(body)
    except RedlistError as exc:
        log.warning("redlist %s not refreshed, keeping %d entries: %s",
                    r.source.descriptor, len(r.entries), exc)
        return UpdateStatus.UNCHANGED
    r.replace(entries, stamp)
    return UpdateStatus.REFRESHED


def check_key(r: Redlist, k: KeyHash) -> bool:
    return k in r.entries


@dataclass(frozen=True)
class Hit:
    key: KeyHash
    role: str  # "input" or "output"
    tx_index: int
    key_index: int


@dataclass(frozen=True)
class TaintVerdict:
    hits: tuple[Hit, ...] = ()

    @property
    def tainted(self) -> bool:
        return bool(self.hits)

    def __bool__(self) -> bool:
        return self.tainted


CLEAN = TaintVerdict()


def _tx_hits(entries: frozenset[KeyHash], tx: Transaction, tx_index: int) -> list[Hit]:
    hits = [Hit(k, "output", tx_index, i) for i, k in enumerate(tx.output_keys) if k in entries]
    hits += [Hit(k, "input", tx_index, i) for i, k in enumerate(tx.input_keys) if k in entries]
    return hits


def check_transaction(r: Redlist, tx: Transaction, tx_index: int = 0) -> TaintVerdict:
    entries = r.entries
    if not entries:
        return CLEAN
    return TaintVerdict(tuple(_tx_hits(entries, tx, tx_index)))


def check_block(r: Redlist, b: Block) -> TaintVerdict:
    entries = r.entries
    if not entries:
        return CLEAN
    hits: list[Hit] = []
    for i, tx in enumerate(b.txs):
        hits.extend(_tx_hits(entries, tx, i))
    return TaintVerdict(tuple(hits))


def touch(path: str | os.PathLike, when: Optional[float] = None) -> None:
    when = time.time() if when is None else when
    os.utime(path, (when, when))
