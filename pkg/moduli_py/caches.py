import hashlib
import logging
import threading
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from moduli_py.enums import SCHEMA_VERSION
from moduli_py.exceptions import CacheError
from moduli_py.fg import FGTable
from moduli_py.models import EtaSpec, RankDegreeGenus
from moduli_py.schemas import CacheRecord

logger = logging.getLogger(__name__)

fg_table: FGTable = FGTable()
"""Process-wide memo of F(k, s), shared by every client."""


def engine_version() -> str:
    try:
        return version("moduli-py")
    except PackageNotFoundError:
        return "0+local"


def cache_key(command: str, rdg: RankDegreeGenus, spec: EtaSpec, extra: str = "") -> str:
    """sha256 over schema version, command, (n, d, g) and the canonical spec."""
    text = f"{SCHEMA_VERSION}|{command}|{rdg.n}|{rdg.d}|{rdg.g}|{spec.canonical()}|{extra}"
    return hashlib.sha256(text.encode()).hexdigest()


class ResultCache:
    """Append-only JSON-lines store of exact results.

    Later records win over earlier ones with the same key, so a recomputed value simply appends.
    """

    FILENAME = "results.jsonl"

    def __init__(self, directory: Path | str) -> None:
        self.path = Path(directory) / self.FILENAME
        self._lock = threading.Lock()
        self._records: dict[str, CacheRecord] | None = None

    def _load(self) -> dict[str, CacheRecord]:
        if self._records is not None:
            return self._records
        records: dict[str, CacheRecord] = {}
        if self.path.exists():
            for number, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    record = CacheRecord.model_validate_json(line)
                except ValidationError as e:
                    raise CacheError(f"{self.path}:{number} is not a cache record: {e}") from e
                if record.schema_version == SCHEMA_VERSION:
                    records[record.key] = record
        self._records = records
        logger.info("loaded %d cache records from %s", len(records), self.path)
        return records

    def get(self, key: str) -> CacheRecord | None:
        with self._lock:
            record = self._load().get(key)
        logger.info("cache %s for %s", "hit" if record else "miss", key[:12])
        return record

    def put(self, command: str, rdg: RankDegreeGenus, spec: EtaSpec, value: Any, extra: str = "") -> CacheRecord:
        record = CacheRecord(
            key=cache_key(command, rdg, spec, extra),
            command=command,
            n=rdg.n,
            d=rdg.d,
            g=rdg.g,
            eta=spec.canonical(),
            value=value,
            engine_version=engine_version(),
        )
        with self._lock:
            records = self._load()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as f:
                f.write(record.model_dump_json() + "\n")
            records[record.key] = record
        return record

    def __len__(self) -> int:
        with self._lock:
            return len(self._load())
