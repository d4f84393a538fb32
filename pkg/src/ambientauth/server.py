"""The authentication web service: accounts, login sessions, the push
channel to enrolled phones, encrypted-sample proxying, verdict collection,
throttling and code fallback.

HTTP endpoints serve the browser; a persistent length-prefixed-JSON TCP
channel serves enrolled devices (standing in for a production push
service). Audio payloads pass through as opaque ciphertext: the server
never holds a key that could open them.
"""
from __future__ import annotations

import argparse
import collections
import json
import logging
import mimetypes
import os
import secrets
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field, fields as dc_fields
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import crypto, sessions, wire
from .decision import ScoringPolicy, default_policy
from .errors import (AmbientAuthError, BadCode, BadCredentials, BadSession,
                     BadSignature, Throttled, WrongState)
from .store import AttemptRecord, Store

log = logging.getLogger("ambientauth.server")

CHANNEL_IDENT_CONTEXT = wire.CHANNEL_IDENT_CONTEXT

_HTTP_STATUS = {
    "BAD_CREDENTIALS": 401,
    "USERNAME_TAKEN": 409,
    "THROTTLED": 429,
    "BAD_SESSION": 404,
    "WRONG_STATE": 409,
    "BAD_CODE": 403,
    "BAD_SIGNATURE": 403,
}


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    http_port: int = 0
    channel_port: int = 0
    db_path: str = ":memory:"
    static_dir: Optional[str] = None
    retry_limit: int = 3
    sessions_per_minute: int = 5
    record_ms: int = 3000
    freshness_window_ms: int = 30000
    session_expiry_s: float = 60.0
    db_offset: float = 96.0
    scrypt_cost: int = 2 ** 14
    policy: dict = field(default_factory=lambda: default_policy().to_record())

    _ENV_MAP = {
        "AMBIENTAUTH_HOST": ("host", str),
        "AMBIENTAUTH_HTTP_PORT": ("http_port", int),
        "AMBIENTAUTH_CHANNEL_PORT": ("channel_port", int),
        "AMBIENTAUTH_DB": ("db_path", str),
        "AMBIENTAUTH_STATIC_DIR": ("static_dir", str),
        "AMBIENTAUTH_RETRY_LIMIT": ("retry_limit", int),
        "AMBIENTAUTH_SESSIONS_PER_MINUTE": ("sessions_per_minute", int),
        "AMBIENTAUTH_RECORD_MS": ("record_ms", int),
        "AMBIENTAUTH_FRESHNESS_MS": ("freshness_window_ms", int),
        "AMBIENTAUTH_SESSION_EXPIRY_S": ("session_expiry_s", float),
    }

    @classmethod
    def load(cls, path: Optional[str] = None,
             env: Optional[dict] = None) -> "ServerConfig":
        """Build a config from an optional JSON file plus environment
        overrides (AMBIENTAUTH_* variables win over the file)."""
        values: dict = {}
        if path:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
            known = {f.name for f in dc_fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(raw)
        env = os.environ if env is None else env
        for var, (key, cast) in cls._ENV_MAP.items():
            if var in env:
                values[key] = cast(env[var])
        return cls(**values)

    def scoring_policy(self) -> ScoringPolicy:
        return ScoringPolicy.from_record(self.policy)


class _DeviceChannel:
    def __init__(self, sock: socket.socket, username: str):
        self.sock = sock
        self.username = username
        self.send_lock = threading.Lock()

    def send(self, message: dict) -> None:
        with self.send_lock:
            wire.send_frame(self.sock, message)


class AuthServer:
    """Owns the account store, live sessions and device channels."""

    def __init__(self, config: Optional[ServerConfig] = None):
        self.config = config or ServerConfig()
        self.store = Store(self.config.db_path,
                           scrypt_n=self.config.scrypt_cost)
        self.policy = self.config.scoring_policy()
        self._sessions: dict[str, sessions.LoginSession] = {}
        self._sessions_lock = threading.Lock()
        self._channels: dict[str, _DeviceChannel] = {}
        self._channels_lock = threading.Lock()
        self._login_times: dict[str, collections.deque] = {}
        self._throttle_lock = threading.Lock()
        self._http: Optional[ThreadingHTTPServer] = None
        self._channel_srv: Optional[socketserver.ThreadingTCPServer] = None
        self.http_port: Optional[int] = None
        self.channel_port: Optional[int] = None

    # ------------------------------------------------------------------
    # lifecycle

    def start(self) -> "AuthServer":
        handler = _make_http_handler(self)
        self._http = ThreadingHTTPServer(
            (self.config.host, self.config.http_port), handler)
        self._http.daemon_threads = True
        self.http_port = self._http.server_address[1]

        server = self

        class ChannelHandler(socketserver.BaseRequestHandler):
            def handle(self):
                server._run_channel(self.request)

        self._channel_srv = socketserver.ThreadingTCPServer(
            (self.config.host, self.config.channel_port), ChannelHandler)
        self._channel_srv.daemon_threads = True
        self.channel_port = self._channel_srv.server_address[1]

        threading.Thread(target=self._http.serve_forever, daemon=True).start()
        threading.Thread(target=self._channel_srv.serve_forever,
                         daemon=True).start()
        log.info("listening: http=%s:%s channel=%s:%s", self.config.host,
                 self.http_port, self.config.host, self.channel_port)
        return self

    def stop(self) -> None:
        if self._http:
            self._http.shutdown()
            self._http.server_close()
        if self._channel_srv:
            self._channel_srv.shutdown()
            self._channel_srv.server_close()
        with self._channels_lock:
            for chan in self._channels.values():
                try:
                    chan.sock.close()
                except OSError:
                    pass
            self._channels.clear()
        self.store.close()

    def now_ms(self) -> int:
        return int(time.time() * 1000)

    # ------------------------------------------------------------------
    # operations

    def enroll(self, username: str, password: str,
               phone_pubkey_b64: str) -> dict:
        if not username or not password:
            raise BadCredentials("username and password are required")
        pubkey = crypto.unb64(phone_pubkey_b64)
        crypto.load_public_key(pubkey)  # reject garbage keys at enrollment
        self.store.create_account(username, password, pubkey)
        return {"type": wire.ACK, "username": username}

    def _check_throttle(self, username: str) -> None:
        now = time.monotonic()
        with self._throttle_lock:
            times = self._login_times.setdefault(
                username, collections.deque())
            while times and now - times[0] > 60.0:
                times.popleft()
            if len(times) >= self.config.sessions_per_minute:
                raise Throttled("too many login attempts; retry later")
            times.append(now)

    def login_init(self, username: str, password: str,
                   client: str = "") -> dict:
        self._check_throttle(username)
        account = self.store.get_account(username)
        if account is None or not self.store.verify_password(username,
                                                             password):
            # same failure shape whether the user exists or not
            self._record(username, "BAD_CREDENTIALS", None, client)
            raise BadCredentials("unknown username or wrong password")

        session = sessions.LoginSession(
            session_id=secrets.token_urlsafe(24), username=username,
            retry_limit=self.config.retry_limit,
            record_ms=self.config.record_ms, created_at_ms=self.now_ms())
        with self._sessions_lock:
            self._sessions[session.session_id] = session
        self._push_challenge(session)
        return {
            "type": wire.LOGIN_CHALLENGE,
            "session_id": session.session_id,
            "phone_pubkey": crypto.b64(account.phone_pubkey),
            "record_ms": session.record_ms,
        }

    def _push_challenge(self, session: sessions.LoginSession) -> None:
        session.apply(sessions.EV_CHALLENGE_PUSHED)
        chan = self._channel_for(session.username)
        if chan is None:
            log.warning("no device channel for %s; challenge not delivered",
                        session.username)
            return
        try:
            chan.send(wire.message(wire.CHALLENGE,
                                   session_id=session.session_id,
                                   record_ms=session.record_ms))
        except OSError:
            self._drop_channel(session.username, chan)

    def _get_session(self, session_id: str) -> sessions.LoginSession:
        with self._sessions_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise BadSession(f"unknown session {session_id!r}")
        if session.expired(self.now_ms(), self.config.session_expiry_s):
            raise BadSession("session expired")
        return session

    def submit_sample(self, session_id: str, fields: dict) -> dict:
        session = self._get_session(session_id)
        payload = {}
        for key in ("wrapped_key", "nonce", "ciphertext"):
            value = fields.get(key)
            if not isinstance(value, str) or not value:
                raise AmbientAuthError(f"missing field {key}")
            payload[key] = value
        session.apply(sessions.EV_SAMPLE_SUBMITTED)
        chan = self._channel_for(session.username)
        if chan is not None:
            # forwarded verbatim: the ciphertext reaching the phone is
            # byte-identical to what the browser uploaded
            chan.send(wire.message(wire.SAMPLE, session_id=session_id,
                                   **payload))
        return {"type": wire.ACK, "session_id": session_id}

    def receive_verdict(self, msg: dict) -> dict:
        session = self._get_session(str(msg.get("session_id", "")))
        account = self.store.get_account(session.username)
        assert account is not None
        accepted = bool(msg.get("accepted"))
        reason = str(msg.get("reason", ""))
        score = msg.get("score")
        signed = crypto.verdict_signing_bytes(session.session_id, accepted,
                                              reason, score)
        try:
            crypto.verify_signature(account.phone_pubkey,
                                    crypto.unb64(str(msg.get("signature", ""))),
                                    signed)
        except (BadSignature, ValueError):
            # forged or corrupted: the session is left untouched
            raise BadSignature("verdict signature invalid")

        if session.state != sessions.AWAITING_VERDICT:
            raise WrongState(f"verdict in state {session.state}")
        session.set_verdict_info(reason, score)
        if accepted:
            session.apply(sessions.EV_VERDICT_ACCEPT_SIGNED)
            outcome = sessions.ACCEPTED
        else:
            state = session.apply(sessions.EV_VERDICT_REJECT_SIGNED,
                                  sessions.EV_RETRY_OR_FALLBACK)
            outcome = sessions.REJECTED
            if state == sessions.AWAITING_SAMPLES:
                self._repush(session)
        self._record(session.username, outcome, score, "phone")
        return {"type": wire.ACK, "session_id": session.session_id,
                "state": session.state}

    def _repush(self, session: sessions.LoginSession) -> None:
        chan = self._channel_for(session.username)
        if chan is not None:
            try:
                chan.send(wire.message(wire.CHALLENGE,
                                       session_id=session.session_id,
                                       record_ms=session.record_ms))
            except OSError:
                self._drop_channel(session.username, chan)

    def verify_fallback(self, session_id: str, code: str) -> dict:
        session = self._get_session(session_id)
        account = self.store.get_account(session.username)
        assert account is not None
        if session.state != sessions.FALLBACK_CODE:
            raise WrongState(f"fallback code in state {session.state}")
        if crypto.verify_fallback_code(account.fallback_secret, str(code),
                                       self.now_ms()):
            session.apply(sessions.EV_CODE_VALID)
            self._record(session.username, "ACCEPTED_FALLBACK", None,
                         "browser")
            return self.result(session_id)
        session.apply(sessions.EV_CODE_INVALID)
        self._record(session.username, "BAD_CODE", None, "browser")
        raise BadCode("verification code rejected")

    def sync_response(self, t1) -> dict:
        t2 = self.now_ms()
        return {"type": wire.SYNC_RESP, "t1": t1, "t2": t2,
                "t3": self.now_ms()}

    def result(self, session_id: str, wait_while: Optional[str] = None,
               wait_ms: int = 0) -> dict:
        session = self._get_session(session_id)
        if wait_while and wait_ms > 0:
            status = session.wait_while_state(wait_while, wait_ms / 1000)
        else:
            status = session.status()
        status["type"] = wire.RESULT
        status["session_id"] = session_id
        return status

    def _record(self, username: str, outcome: str, score, client: str) -> None:
        self.store.append_attempt(AttemptRecord(
            username=username, timestamp=self.now_ms(), outcome=outcome,
            score=score, client=client))

    # ------------------------------------------------------------------
    # device channel

    def _channel_for(self, username: str) -> Optional[_DeviceChannel]:
        with self._channels_lock:
            return self._channels.get(username)

    def _drop_channel(self, username: str, chan: _DeviceChannel) -> None:
        with self._channels_lock:
            if self._channels.get(username) is chan:
                del self._channels[username]
        try:
            chan.sock.close()
        except OSError:
            pass

    def _run_channel(self, sock: socket.socket) -> None:
        username = None
        chan = None
        try:
            nonce = secrets.token_bytes(16)
            wire.send_frame(sock, wire.message(wire.CHANNEL_NONCE,
                                               nonce=crypto.b64(nonce)))
            ident = wire.read_frame(sock)
            if ident.get("type") != wire.IDENT:
                wire.send_frame(sock, wire.error_message(
                    "BAD_SESSION", "expected IDENT"))
                return
            username = str(ident.get("username", ""))
            account = self.store.get_account(username)
            if account is None:
                wire.send_frame(sock, wire.error_message(
                    "BAD_CREDENTIALS", "unknown device account"))
                return
            try:
                crypto.verify_signature(
                    account.phone_pubkey,
                    crypto.unb64(str(ident.get("signature", ""))),
                    CHANNEL_IDENT_CONTEXT + nonce)
            except (BadSignature, ValueError):
                wire.send_frame(sock, wire.error_message(
                    "BAD_SIGNATURE", "device identity rejected"))
                return
            chan = _DeviceChannel(sock, username)
            with self._channels_lock:
                old = self._channels.get(username)
                self._channels[username] = chan
            if old is not None:
                try:
                    old.sock.close()
                except OSError:
                    pass
            chan.send(wire.message(wire.IDENT_OK, username=username))

            while True:
                msg = wire.read_frame(sock)
                mtype = msg.get("type")
                if mtype == wire.SYNC_REQ:
                    chan.send(self.sync_response(msg.get("t1")))
                elif mtype == wire.VERDICT:
                    try:
                        chan.send(self.receive_verdict(msg))
                    except AmbientAuthError as exc:
                        chan.send(wire.error_message(exc.code, str(exc)))
                else:
                    chan.send(wire.error_message("ERROR",
                                                 f"unknown type {mtype}"))
        except (ConnectionError, OSError, ValueError, json.JSONDecodeError):
            pass
        finally:
            if username and chan is not None:
                self._drop_channel(username, chan)


# ----------------------------------------------------------------------
# HTTP front end

def _make_http_handler(server: AuthServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _send_json(self, obj: dict, status: int = 200) -> None:
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length", "0"))
            if length <= 0 or length > wire.MAX_FRAME_BYTES:
                return {}
            return json.loads(self.rfile.read(length).decode("utf-8"))

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self):
            path = urlparse(self.path).path
            try:
                body = self._read_json()
                if path == "/api/enroll":
                    out = server.enroll(str(body.get("username", "")),
                                        str(body.get("password", "")),
                                        str(body.get("phone_pubkey", "")))
                elif path == "/api/login_init":
                    out = server.login_init(
                        str(body.get("username", "")),
                        str(body.get("password", "")),
                        client=self.client_address[0])
                elif path == "/api/sample":
                    out = server.submit_sample(
                        str(body.get("session_id", "")), body)
                elif path == "/api/fallback":
                    out = server.verify_fallback(
                        str(body.get("session_id", "")),
                        str(body.get("code", "")))
                elif path == "/api/sync":
                    out = server.sync_response(body.get("t1"))
                else:
                    self._send_json(wire.error_message(
                        "ERROR", "unknown endpoint"), 404)
                    return
                self._send_json(out)
            except AmbientAuthError as exc:
                self._send_json(wire.error_message(exc.code, str(exc)),
                                _HTTP_STATUS.get(exc.code, 400))
            except (ValueError, json.JSONDecodeError) as exc:
                self._send_json(wire.error_message("ERROR", str(exc)), 400)

        def do_GET(self):
            parsed = urlparse(self.path)
            if parsed.path == "/api/result":
                query = parse_qs(parsed.query)
                try:
                    out = server.result(
                        query.get("session_id", [""])[0],
                        wait_while=query.get("wait_while", [None])[0],
                        wait_ms=int(query.get("wait_ms", ["0"])[0]))
                    self._send_json(out)
                except AmbientAuthError as exc:
                    self._send_json(wire.error_message(exc.code, str(exc)),
                                    _HTTP_STATUS.get(exc.code, 400))
                return
            self._serve_static(parsed.path)

        def _serve_static(self, path: str) -> None:
            root = server.config.static_dir
            if not root:
                self._send_json(wire.error_message(
                    "ERROR", "no static content configured"), 404)
                return
            rel = path.lstrip("/") or "index.html"
            target = (Path(root) / rel).resolve()
            if not str(target).startswith(str(Path(root).resolve())) \
                    or not target.is_file():
                self._send_json(wire.error_message("ERROR", "not found"), 404)
                return
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            data = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return Handler


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Run the ambient-audio 2FA server")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host")
    parser.add_argument("--http-port", type=int)
    parser.add_argument("--channel-port", type=int)
    parser.add_argument("--db")
    parser.add_argument("--static-dir")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    config = ServerConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.http_port is not None:
        config.http_port = args.http_port
    if args.channel_port is not None:
        config.channel_port = args.channel_port
    if args.db:
        config.db_path = args.db
    if args.static_dir:
        config.static_dir = args.static_dir

    server = AuthServer(config).start()
    print(f"http: {config.host}:{server.http_port}  "
          f"device channel: {config.host}:{server.channel_port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
