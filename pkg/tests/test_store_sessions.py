import socket
import threading

import pytest

from ambientauth import wire
from ambientauth.errors import UsernameTaken, WrongState
from ambientauth.sessions import (ACCEPTED, AWAITING_SAMPLES,
                                  AWAITING_VERDICT, EV_CHALLENGE_PUSHED,
                                  EV_CODE_INVALID, EV_CODE_VALID,
                                  EV_SAMPLE_SUBMITTED,
                                  EV_VERDICT_ACCEPT_SIGNED,
                                  EV_VERDICT_FORGED,
                                  EV_VERDICT_REJECT_SIGNED,
                                  EV_RETRY_OR_FALLBACK, FALLBACK_CODE,
                                  LoginSession, PASSWORD_OK, REJECTED,
                                  transition)
from ambientauth.store import AttemptRecord, Store


class TestStore:
    def test_account_round_trip(self):
        store = Store(scrypt_n=2 ** 4)
        store.create_account("alice", "hunter2", b"pubkey-bytes")
        account = store.get_account("alice")
        assert account.username == "alice"
        assert account.phone_pubkey == b"pubkey-bytes"
        assert len(account.fallback_secret) == 20

    def test_username_taken(self):
        store = Store(scrypt_n=2 ** 4)
        store.create_account("alice", "x", b"k1")
        with pytest.raises(UsernameTaken):
            store.create_account("alice", "y", b"k2")

    def test_password_verification(self):
        store = Store(scrypt_n=2 ** 4)
        store.create_account("alice", "hunter2", b"k")
        assert store.verify_password("alice", "hunter2")
        assert not store.verify_password("alice", "hunter3")
        assert not store.verify_password("bob", "hunter2")

    def test_attempts_append_only_in_order(self):
        store = Store(scrypt_n=2 ** 4)
        store.create_account("alice", "x", b"k")
        for i, outcome in enumerate(("REJECTED", "ACCEPTED")):
            store.append_attempt(AttemptRecord(
                username="alice", timestamp=1000 + i, outcome=outcome,
                score=0.1 * i, client="test"))
        attempts = store.attempts_for("alice")
        assert [a.outcome for a in attempts] == ["REJECTED", "ACCEPTED"]

    def test_no_audio_marker_in_db_file(self, tmp_path, rng):
        # a distinctive PCM marker must never show up in the store file
        marker = (rng.integers(-30000, 30000, size=256)
                  .astype("<i2").tobytes())
        path = tmp_path / "accounts.db"
        store = Store(str(path), scrypt_n=2 ** 4)
        store.create_account("alice", "x", b"k")
        store.append_attempt(AttemptRecord("alice", 1, "ACCEPTED", 0.9,
                                           "test"))
        store.close()
        blob = path.read_bytes()
        assert marker not in blob


class TestWireFraming:
    def test_frame_round_trip(self):
        a, b = socket.socketpair()
        try:
            message = wire.message(wire.SYNC_REQ, t1=123)
            wire.send_frame(a, message)
            assert wire.read_frame(b) == {"type": "SYNC_REQ", "t1": 123}
        finally:
            a.close()
            b.close()

    def test_oversize_rejected(self):
        with pytest.raises(ValueError):
            wire.encode_frame({"type": "X", "blob": "a" * wire.MAX_FRAME_BYTES})

    def test_interleaved_frames(self):
        a, b = socket.socketpair()
        try:
            for i in range(5):
                wire.send_frame(a, {"type": "ACK", "i": i})
            got = [wire.read_frame(b)["i"] for _ in range(5)]
            assert got == [0, 1, 2, 3, 4]
        finally:
            a.close()
            b.close()


class TestTransitions:
    def test_happy_path(self):
        state, attempts = PASSWORD_OK, 0
        for event, expect in ((EV_CHALLENGE_PUSHED, AWAITING_SAMPLES),
                              (EV_SAMPLE_SUBMITTED, AWAITING_VERDICT),
                              (EV_VERDICT_ACCEPT_SIGNED, ACCEPTED)):
            state, attempts = transition(state, attempts, event, 3)
            assert state == expect
        assert attempts == 1

    def test_retry_loop_then_fallback(self):
        state, attempts = AWAITING_SAMPLES, 0
        for round_no in range(1, 4):
            state, attempts = transition(state, attempts,
                                         EV_SAMPLE_SUBMITTED, 3)
            state, attempts = transition(state, attempts,
                                         EV_VERDICT_REJECT_SIGNED, 3)
            assert state == REJECTED and attempts == round_no
            state, attempts = transition(state, attempts,
                                         EV_RETRY_OR_FALLBACK, 3)
        assert state == FALLBACK_CODE
        state, attempts = transition(state, attempts, EV_CODE_INVALID, 3)
        assert state == FALLBACK_CODE
        state, attempts = transition(state, attempts, EV_CODE_VALID, 3)
        assert state == ACCEPTED

    def test_forged_verdict_is_noop(self):
        state, attempts = transition(AWAITING_VERDICT, 0,
                                     EV_VERDICT_FORGED, 3)
        assert (state, attempts) == (AWAITING_VERDICT, 0)

    def test_out_of_order_rejected(self):
        with pytest.raises(WrongState):
            transition(AWAITING_SAMPLES, 0, EV_VERDICT_ACCEPT_SIGNED, 3)
        with pytest.raises(WrongState):
            transition(PASSWORD_OK, 0, EV_SAMPLE_SUBMITTED, 3)
        with pytest.raises(WrongState):
            transition(ACCEPTED, 1, EV_SAMPLE_SUBMITTED, 3)
        with pytest.raises(WrongState):
            transition(AWAITING_VERDICT, 0, EV_CODE_VALID, 3)


class TestLoginSession:
    def test_status_and_wait(self):
        session = LoginSession("sid", "alice", retry_limit=3,
                               record_ms=3000)
        session.apply(EV_CHALLENGE_PUSHED)
        session.apply(EV_SAMPLE_SUBMITTED)

        def finish():
            session.set_verdict_info("OK", 0.9)
            session.apply(EV_VERDICT_ACCEPT_SIGNED)

        t = threading.Timer(0.05, finish)
        t.start()
        status = session.wait_while_state(AWAITING_VERDICT, timeout_s=2)
        t.join()
        assert status["state"] == ACCEPTED
        assert status["reason"] == "OK"

    def test_expiry(self):
        session = LoginSession("sid", "alice", retry_limit=3,
                               record_ms=3000, created_at_ms=1000)
        assert not session.expired(now_ms=60_500, expiry_s=60)
        assert session.expired(now_ms=61_100, expiry_s=60)
        session.apply(EV_CHALLENGE_PUSHED)
        session.apply(EV_SAMPLE_SUBMITTED)
        session.set_verdict_info("OK", 1.0)
        session.apply(EV_VERDICT_ACCEPT_SIGNED)
        # terminal sessions do not expire
        assert not session.expired(now_ms=10_000_000, expiry_s=60)
