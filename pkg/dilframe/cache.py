"""Φ_ℓ value cache with SQLite persistence."""

import hashlib
import json
import logging
from dataclasses import asdict
from datetime import UTC, datetime

import aiosqlite

from dilframe.config import QuadratureConfig
from dilframe.groups import GroupElement

logger = logging.getLogger("dilframe.cache")


def phi_cache_key(h: GroupElement, ell: int, quad: QuadratureConfig) -> str:
    """SHA-256 over (group descriptor, element parameters, ℓ, quadrature settings)."""
    payload = json.dumps(
        {
            "group": h.spec.to_json(),
            "params": [repr(p) for p in h.params],
            "ell": ell,
            "quad": asdict(quad),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class PhiCache:
    """Stores computed Φ_ℓ values keyed by phi_cache_key."""

    def __init__(self, db_path: str) -> None:
        self._db_path = db_path
        # Database connection; initialized by init(), closed by close()
        self._db: aiosqlite.Connection | None = None

    async def init(self) -> None:
        """Open database connection and create tables if needed."""
        self._db = await aiosqlite.connect(self._db_path)

        # WAL keeps concurrent readers from blocking the sweep writer
        await self._db.execute("PRAGMA journal_mode=WAL")

        await self._db.execute("""
            CREATE TABLE IF NOT EXISTS phi_values (
                key TEXT PRIMARY KEY,
                family TEXT NOT NULL,
                params TEXT NOT NULL,
                ell INTEGER NOT NULL,
                value REAL NOT NULL,
                error REAL NOT NULL,
                created_at TEXT NOT NULL
            )
        """)

        await self._db.commit()
        logger.info("Φ cache opened at %s", self._db_path)

    async def get(
        self, h: GroupElement, ell: int, quad: QuadratureConfig
    ) -> tuple[float, float] | None:
        """Cached (value, error) or None."""
        assert self._db is not None
        cursor = await self._db.execute(
            "SELECT value, error FROM phi_values WHERE key = ?",
            (phi_cache_key(h, ell, quad),),
        )
        row = await cursor.fetchone()
        if row is None:
            return None
        return float(row[0]), float(row[1])

    async def put(
        self, h: GroupElement, ell: int, quad: QuadratureConfig, value: float, error: float
    ) -> None:
        """Insert or replace one value."""
        assert self._db is not None
        now = datetime.now(UTC).isoformat()
        await self._db.execute(
            "INSERT OR REPLACE INTO phi_values"
            " (key, family, params, ell, value, error, created_at)"
            " VALUES (?, ?, ?, ?, ?, ?, ?)",
            (
                phi_cache_key(h, ell, quad),
                h.spec.family.value,
                json.dumps(list(h.params)),
                ell,
                value,
                error,
                now,
            ),
        )
        await self._db.commit()
        logger.debug("Cached Φ_%d%s = %.6g", ell, h.params, value)

    async def count(self) -> int:
        assert self._db is not None
        cursor = await self._db.execute("SELECT COUNT(*) FROM phi_values")
        row = await cursor.fetchone()
        return int(row[0]) if row else 0

    async def close(self) -> None:
        """Close the database connection."""
        if self._db:
            await self._db.close()
            self._db = None
            logger.info("Φ cache closed")
