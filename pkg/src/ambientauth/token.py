"""Phone-side software token, run as a standalone process.

Connects to the server's device channel, proves its identity with the
enrolled key, and answers login challenges: record ambient audio (from the
microphone, a fixture file, or a synthetic generator), sync the clock,
receive the browser's encrypted sample, decrypt and score it locally, and
return a signed verdict. The phone's own recording never leaves the
process.
"""
from __future__ import annotations

import argparse
import json
import logging
import queue
import socket
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import crypto, timesync, wire
from .audio import AudioSample, CANONICAL_FS, decode_wav, resample
from .decision import ScoringPolicy, default_policy, evaluate
from .errors import (AmbientAuthError, ChallengeTimeout, DecryptFail,
                     DurationMismatch, MicUnavailable)

log = logging.getLogger("ambientauth.token")

# wire-level verdict reasons for failures upstream of scoring
REASON_DECRYPT_FAIL = "DECRYPT_FAIL"
REASON_STALE_SAMPLE = "STALE_SAMPLE"
REASON_DURATION_MISMATCH = "DURATION_MISMATCH"

DEFAULT_FRESHNESS_MS = 30000


class AudioSource:
    """Produces exactly record_ms of mono audio at the requested rate."""

    def record(self, record_ms: int, fs: int) -> np.ndarray:
        raise NotImplementedError


def _fit_length(pcm: np.ndarray, n: int) -> np.ndarray:
    if pcm.size >= n:
        return pcm[:n]
    return np.concatenate([pcm, np.zeros(n - pcm.size)])


class FixtureSource(AudioSource):
    """Replays WAV fixtures; successive recordings cycle through the
    given paths."""

    def __init__(self, paths: Sequence[str | Path]):
        if not paths:
            raise ValueError("at least one fixture path is required")
        self._paths = [Path(p) for p in paths]
        self._index = 0

    def record(self, record_ms: int, fs: int) -> np.ndarray:
        path = self._paths[self._index % len(self._paths)]
        self._index += 1
        sample = decode_wav(path.read_bytes())
        sample = resample(sample, fs)
        return _fit_length(sample.pcm, round(record_ms / 1000 * fs))


class SyntheticSource(AudioSource):
    """Deterministic ambient-noise generator for tests and demos."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def record(self, record_ms: int, fs: int) -> np.ndarray:
        from .harness.synth import ambient_track
        return ambient_track(self._rng, round(record_ms / 1000 * fs), fs)


class MicrophoneSource(AudioSource):
    """Live capture; requires the optional sounddevice package."""

    def record(self, record_ms: int, fs: int) -> np.ndarray:
        try:
            import sounddevice
        except ImportError as exc:
            raise MicUnavailable(
                "live capture needs the 'sounddevice' package and a "
                "microphone") from exc
        frames = round(record_ms / 1000 * fs)
        pcm = sounddevice.rec(frames, samplerate=fs, channels=1,
                              dtype="float64", blocking=True)
        return np.clip(pcm[:, 0], -1.0, 1.0)


class TokenEmulator:
    """The software token bound to one account."""

    def __init__(self, host: str, http_port: int, channel_port: int,
                 username: str, password: str,
                 keypair: Optional[crypto.DeviceKeyPair] = None,
                 source: Optional[AudioSource] = None,
                 policy: Optional[ScoringPolicy] = None,
                 clock_skew_ms: int = 0,
                 freshness_window_ms: int = DEFAULT_FRESHNESS_MS,
                 sync_rounds: int = timesync.DEFAULT_SYNC_ROUNDS,
                 sample_timeout_s: float = 20.0,
                 outbound_tap: Optional[Callable[[dict], None]] = None):
        self.host = host
        self.http_port = http_port
        self.channel_port = channel_port
        self.username = username
        self.password = password
        self.keypair = keypair or crypto.DeviceKeyPair.generate()
        self.source = source or SyntheticSource(seed=0)
        self.policy = policy or default_policy()
        self.clock_skew_ms = clock_skew_ms
        self.freshness_window_ms = freshness_window_ms
        self.sync_rounds = sync_rounds
        self.sample_timeout_s = sample_timeout_s
        self.device_id = f"phone-{username}"
        self.attempt_log: list[dict] = []
        self.last_verdict: Optional[dict] = None
        self.received_samples: list[dict] = []

        self._outbound_tap = outbound_tap
        self._sock: Optional[socket.socket] = None
        self._send_lock = threading.Lock()
        self._reader: Optional[threading.Thread] = None
        self._sync_resp: "queue.Queue[dict]" = queue.Queue()
        self._samples: dict[str, "queue.Queue[dict]"] = {}
        self._samples_lock = threading.Lock()
        self._busy = threading.Lock()
        self._closed = threading.Event()

    # ------------------------------------------------------------------
    # clock

    def local_now_ms(self) -> int:
        return int(time.time() * 1000) + self.clock_skew_ms

    # ------------------------------------------------------------------
    # HTTP helpers

    def _post(self, path: str, payload: dict) -> dict:
        url = f"http://{self.host}:{self.http_port}{path}"
        req = urllib.request.Request(
            url, data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            body = json.loads(exc.read().decode("utf-8"))
            err = AmbientAuthError(body.get("detail", ""))
            err.code = body.get("error", "ERROR")
            raise err from exc

    def enroll(self) -> dict:
        """One-time registration of this device's public key."""
        return self._post("/api/enroll", {
            "username": self.username,
            "password": self.password,
            "phone_pubkey": crypto.b64(self.keypair.public_bytes()),
        })

    # ------------------------------------------------------------------
    # device channel

    def connect(self) -> "TokenEmulator":
        sock = socket.create_connection((self.host, self.channel_port),
                                        timeout=10)
        hello = wire.read_frame(sock)
        if hello.get("type") != wire.CHANNEL_NONCE:
            raise ConnectionError("unexpected channel greeting")
        nonce = crypto.unb64(hello["nonce"])
        signature = self.keypair.sign(wire.CHANNEL_IDENT_CONTEXT + nonce)
        wire.send_frame(sock, wire.message(
            wire.IDENT, username=self.username,
            signature=crypto.b64(signature)))
        reply = wire.read_frame(sock)
        if reply.get("type") != wire.IDENT_OK:
            raise ConnectionError(
                f"channel identity rejected: {reply.get('error')}")
        sock.settimeout(None)
        self._sock = sock
        self._closed.clear()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        return self

    def close(self) -> None:
        self._closed.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def _send(self, message: dict) -> None:
        if self._outbound_tap is not None:
            self._outbound_tap(message)
        with self._send_lock:
            sock = self._sock
            if sock is None:
                raise ConnectionError("device channel is closed")
            wire.send_frame(sock, message)

    def _read_loop(self) -> None:
        try:
            while not self._closed.is_set():
                msg = wire.read_frame(self._sock)
                mtype = msg.get("type")
                if mtype == wire.CHALLENGE:
                    threading.Thread(target=self._challenge_entry,
                                     args=(msg,), daemon=True).start()
                elif mtype == wire.SAMPLE:
                    self.received_samples.append(msg)
                    self._sample_queue(str(msg.get("session_id"))).put(msg)
                elif mtype == wire.SYNC_RESP:
                    self._sync_resp.put(msg)
                elif mtype in (wire.ACK, wire.ERROR):
                    log.debug("channel: %s", msg)
        except (ConnectionError, OSError, ValueError):
            if not self._closed.is_set():
                log.warning("device channel closed")

    def _sample_queue(self, session_id: str) -> "queue.Queue[dict]":
        with self._samples_lock:
            return self._samples.setdefault(session_id, queue.Queue())

    def _sync_exchange(self, t1: int) -> tuple[int, int]:
        self._send(wire.message(wire.SYNC_REQ, t1=t1))
        resp = self._sync_resp.get(timeout=10)
        return int(resp["t2"]), int(resp["t3"])

    # ------------------------------------------------------------------
    # challenge handling

    def _challenge_entry(self, msg: dict) -> None:
        session_id = str(msg.get("session_id"))
        if not self._busy.acquire(blocking=False):
            # one microphone: overlapping challenges are refused
            self._send(wire.error_message("BUSY", session_id))
            return
        verdict_msg = None
        try:
            verdict_msg = self.handle_challenge(msg)
        except AmbientAuthError as exc:
            log.warning("challenge %s failed: %s", session_id, exc.code)
        except (ConnectionError, OSError):
            log.warning("channel lost while handling %s", session_id)
        finally:
            # released before the verdict goes out: the server's follow-up
            # challenge (retry) must never race against a held lock
            self._busy.release()
        if verdict_msg is not None:
            try:
                self._send(verdict_msg)
            except (ConnectionError, OSError):
                log.warning("channel lost sending verdict for %s",
                            session_id)

    def handle_challenge(self, msg: dict) -> dict:
        session_id = str(msg.get("session_id"))
        record_ms = int(msg.get("record_ms", 3000))
        challenge_local_ms = self.local_now_ms()

        # sync rounds run while the microphone records
        collector = timesync.SyncCollector(self._sync_exchange,
                                           self.local_now_ms,
                                           self.sync_rounds).start()
        record_start_local = self.local_now_ms()
        pcm = self.source.record(record_ms, CANONICAL_FS)
        rounds = collector.result(timeout=30)
        offset = timesync.estimate_offset(rounds)

        local = AudioSample.from_pcm(
            pcm, CANONICAL_FS,
            captured_at=timesync.adjust_timestamp(record_start_local, offset),
            device_id=self.device_id)
        challenge_at = timesync.adjust_timestamp(challenge_local_ms, offset)

        try:
            sample_msg = self._sample_queue(session_id).get(
                timeout=self.sample_timeout_s)
        except queue.Empty:
            raise ChallengeTimeout(
                f"no sample for session {session_id} within "
                f"{self.sample_timeout_s}s") from None
        finally:
            with self._samples_lock:
                self._samples.pop(session_id, None)

        verdict = self._score_remote(local, sample_msg, challenge_at)
        return self._build_verdict(session_id, verdict)

    def _score_remote(self, local: AudioSample, sample_msg: dict,
                      challenge_at: int) -> dict:
        try:
            es = crypto.EncryptedSample.from_wire(sample_msg)
            plaintext = crypto.decrypt_payload(self.keypair, es)
            remote = crypto.plaintext_to_sample(plaintext)
        except (DecryptFail, ValueError, KeyError):
            return {"accepted": False, "reason": REASON_DECRYPT_FAIL,
                    "score": None}

        if remote.captured_at < challenge_at - self.freshness_window_ms:
            return {"accepted": False, "reason": REASON_STALE_SAMPLE,
                    "score": None}

        if remote.fs != local.fs:
            # computer-side rates vary more across hardware; normalize theirs
            remote = resample(remote, local.fs)

        try:
            verdict = evaluate(local, remote, self.policy)
        except DurationMismatch:
            return {"accepted": False, "reason": REASON_DURATION_MISMATCH,
                    "score": None}
        return {"accepted": verdict.accepted, "reason": verdict.reason,
                "score": verdict.score}

    def _build_verdict(self, session_id: str, verdict: dict) -> dict:
        signed = crypto.verdict_signing_bytes(
            session_id, verdict["accepted"], verdict["reason"],
            verdict["score"])
        message = wire.message(
            wire.VERDICT, session_id=session_id,
            accepted=verdict["accepted"], reason=verdict["reason"],
            score=verdict["score"],
            signature=crypto.b64(self.keypair.sign(signed)))
        record = dict(message)
        record["at_ms"] = self.local_now_ms()
        self.attempt_log.append(record)
        self.last_verdict = message
        return message


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Run the phone software-token emulator")
    parser.add_argument("--server", default="127.0.0.1",
                        help="server hostname")
    parser.add_argument("--http-port", type=int, required=True)
    parser.add_argument("--channel-port", type=int, required=True)
    parser.add_argument("--credentials", required=True,
                        help="JSON file with username/password")
    parser.add_argument("--keyfile",
                        help="device private key PEM; generated if missing")
    parser.add_argument("--enroll", action="store_true",
                        help="register the account and device key first")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--fixture", action="append",
                        help="WAV file to replay (repeatable)")
    source.add_argument("--synthetic-seed", type=int,
                        help="seeded synthetic ambience")
    source.add_argument("--mic", action="store_true",
                        help="record from the live microphone")
    parser.add_argument("--policy", help="JSON policy override file")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    with open(args.credentials, "r", encoding="utf-8") as fh:
        creds = json.load(fh)

    keypair = None
    if args.keyfile:
        path = Path(args.keyfile)
        if path.exists():
            keypair = crypto.DeviceKeyPair.load_pem(str(path))
        else:
            keypair = crypto.DeviceKeyPair.generate()
            keypair.save_pem(str(path))

    if args.mic:
        src: AudioSource = MicrophoneSource()
    elif args.fixture:
        src = FixtureSource(args.fixture)
    else:
        src = SyntheticSource(args.synthetic_seed or 0)

    policy = None
    if args.policy:
        with open(args.policy, "r", encoding="utf-8") as fh:
            policy = ScoringPolicy.from_record(json.load(fh))

    emulator = TokenEmulator(
        host=args.server, http_port=args.http_port,
        channel_port=args.channel_port, username=creds["username"],
        password=creds["password"], keypair=keypair, source=src,
        policy=policy)
    if args.enroll:
        emulator.enroll()
        print(f"enrolled {creds['username']}")
    emulator.connect()
    print("token connected; waiting for challenges (Ctrl-C to stop)")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        emulator.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
