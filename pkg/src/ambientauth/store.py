"""Single-file SQLite persistence: user accounts and the append-only log of
login attempts. No audio, plaintext or encrypted, is ever written here."""
from __future__ import annotations

import hashlib
import os
import sqlite3
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .errors import UsernameTaken

_SCHEMA = """
CREATE TABLE IF NOT EXISTS accounts (
    username        TEXT PRIMARY KEY,
    password_salt   BLOB NOT NULL,
    password_digest BLOB NOT NULL,
    phone_pubkey    BLOB NOT NULL,
    fallback_secret BLOB NOT NULL,
    enrolled_at     INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS attempts (
    id        INTEGER PRIMARY KEY AUTOINCREMENT,
    username  TEXT NOT NULL,
    timestamp INTEGER NOT NULL,
    outcome   TEXT NOT NULL,
    score     REAL,
    client    TEXT
);
"""


@dataclass(frozen=True)
class UserAccount:
    username: str
    phone_pubkey: bytes
    fallback_secret: bytes
    enrolled_at: int


@dataclass(frozen=True)
class AttemptRecord:
    username: str
    timestamp: int
    outcome: str
    score: Optional[float]
    client: str


class Store:
    """Thread-safe wrapper over one SQLite file (or :memory:).

    Password digests use scrypt; the cost exponent is configurable so test
    suites stay fast while deployments keep a slow hash.
    """

    def __init__(self, path: str = ":memory:", scrypt_n: int = 2 ** 14):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        self._scrypt_n = scrypt_n
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def _digest(self, password: str, salt: bytes) -> bytes:
        return hashlib.scrypt(password.encode("utf-8"), salt=salt,
                              n=self._scrypt_n, r=8, p=1, dklen=32)

    def create_account(self, username: str, password: str,
                       phone_pubkey: bytes) -> UserAccount:
        salt = os.urandom(16)
        digest = self._digest(password, salt)
        secret = os.urandom(20)
        now = int(time.time() * 1000)
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO accounts VALUES (?, ?, ?, ?, ?, ?)",
                    (username, salt, digest, phone_pubkey, secret, now))
                self._conn.commit()
            except sqlite3.IntegrityError as exc:
                raise UsernameTaken(f"username {username!r} exists") from exc
        return UserAccount(username=username, phone_pubkey=phone_pubkey,
                           fallback_secret=secret, enrolled_at=now)

    def get_account(self, username: str) -> Optional[UserAccount]:
        with self._lock:
            row = self._conn.execute(
                "SELECT username, phone_pubkey, fallback_secret, enrolled_at "
                "FROM accounts WHERE username = ?", (username,)).fetchone()
        if row is None:
            return None
        return UserAccount(username=row[0], phone_pubkey=row[1],
                           fallback_secret=row[2], enrolled_at=row[3])

    def verify_password(self, username: str, password: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT password_salt, password_digest FROM accounts "
                "WHERE username = ?", (username,)).fetchone()
        if row is None:
            return False
        import hmac
        return hmac.compare_digest(self._digest(password, row[0]), row[1])

    def append_attempt(self, record: AttemptRecord) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO attempts (username, timestamp, outcome, score, "
                "client) VALUES (?, ?, ?, ?, ?)",
                (record.username, record.timestamp, record.outcome,
                 record.score, record.client))
            self._conn.commit()

    def attempts_for(self, username: str) -> list[AttemptRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT username, timestamp, outcome, score, client "
                "FROM attempts WHERE username = ? ORDER BY id",
                (username,)).fetchall()
        return [AttemptRecord(*row) for row in rows]
