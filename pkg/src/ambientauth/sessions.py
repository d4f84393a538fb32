"""Login-session state machine.

The transition core is a pure function so its safety properties can be
checked exhaustively; the server wraps it in a lock-guarded object with a
condition variable for result polling.

States and the paths between them:

    PASSWORD_OK -> AWAITING_SAMPLES -> AWAITING_VERDICT -> ACCEPTED
                        ^                                | REJECTED
                        |                                v
                        +--- retries left --- REJECTED --+-> FALLBACK_CODE
                                                              |  ACCEPTED
                                                              +->(valid code)

A rejected scoring attempt loops back to AWAITING_SAMPLES until
retry_limit scoring attempts have been consumed, then the session falls
back to verification codes.
"""
from __future__ import annotations

import threading
import time
from typing import Optional

from .errors import WrongState

PASSWORD_OK = "PASSWORD_OK"
AWAITING_SAMPLES = "AWAITING_SAMPLES"
AWAITING_VERDICT = "AWAITING_VERDICT"
ACCEPTED = "ACCEPTED"
REJECTED = "REJECTED"
FALLBACK_CODE = "FALLBACK_CODE"

STATES = (PASSWORD_OK, AWAITING_SAMPLES, AWAITING_VERDICT, ACCEPTED,
          REJECTED, FALLBACK_CODE)

# Events understood by the pure transition function. *_SIGNED events are
# only emitted by the server after the device signature verified; FORGED
# and INVALID stand for messages whose authenticator failed.
EV_CHALLENGE_PUSHED = "challenge_pushed"
EV_SAMPLE_SUBMITTED = "sample_submitted"
EV_VERDICT_ACCEPT_SIGNED = "verdict_accept_signed"
EV_VERDICT_REJECT_SIGNED = "verdict_reject_signed"
EV_VERDICT_FORGED = "verdict_forged"
EV_RETRY_OR_FALLBACK = "retry_or_fallback"
EV_CODE_VALID = "code_valid"
EV_CODE_INVALID = "code_invalid"

EVENTS = (EV_CHALLENGE_PUSHED, EV_SAMPLE_SUBMITTED,
          EV_VERDICT_ACCEPT_SIGNED, EV_VERDICT_REJECT_SIGNED,
          EV_VERDICT_FORGED, EV_RETRY_OR_FALLBACK,
          EV_CODE_VALID, EV_CODE_INVALID)

TERMINAL_STATES = (ACCEPTED,)


def transition(state: str, attempts: int, event: str,
               retry_limit: int) -> tuple[str, int]:
    """Pure state transition; raises WrongState for out-of-order events.

    `attempts` counts completed scoring attempts. Unauthenticated events
    (forged verdicts, invalid codes) never change the state.
    """
    if event == EV_CHALLENGE_PUSHED:
        if state != PASSWORD_OK:
            raise WrongState(f"challenge push in state {state}")
        return AWAITING_SAMPLES, attempts
    if event == EV_SAMPLE_SUBMITTED:
        if state != AWAITING_SAMPLES:
            raise WrongState(f"sample submitted in state {state}")
        return AWAITING_VERDICT, attempts
    if event == EV_VERDICT_ACCEPT_SIGNED:
        if state != AWAITING_VERDICT:
            raise WrongState(f"verdict received in state {state}")
        return ACCEPTED, attempts + 1
    if event == EV_VERDICT_REJECT_SIGNED:
        if state != AWAITING_VERDICT:
            raise WrongState(f"verdict received in state {state}")
        return REJECTED, attempts + 1
    if event == EV_VERDICT_FORGED:
        return state, attempts  # dropped; session untouched
    if event == EV_RETRY_OR_FALLBACK:
        if state != REJECTED:
            raise WrongState(f"retry decision in state {state}")
        if attempts < retry_limit:
            return AWAITING_SAMPLES, attempts
        return FALLBACK_CODE, attempts
    if event == EV_CODE_VALID:
        if state != FALLBACK_CODE:
            raise WrongState(f"fallback code in state {state}")
        return ACCEPTED, attempts
    if event == EV_CODE_INVALID:
        if state != FALLBACK_CODE:
            raise WrongState(f"fallback code in state {state}")
        return FALLBACK_CODE, attempts
    raise ValueError(f"unknown event {event!r}")


class LoginSession:
    """One in-flight login: state, scoring-attempt budget and the last
    reported verdict, guarded by a per-session lock."""

    def __init__(self, session_id: str, username: str, retry_limit: int,
                 record_ms: int, created_at_ms: Optional[int] = None):
        self.session_id = session_id
        self.username = username
        self.retry_limit = retry_limit
        self.record_ms = record_ms
        self.created_at = (created_at_ms if created_at_ms is not None
                           else int(time.time() * 1000))
        self.state = PASSWORD_OK
        self.attempt_count = 0
        self.last_reason: Optional[str] = None
        self.last_score: Optional[float] = None
        self._cond = threading.Condition()

    def apply(self, *events: str) -> str:
        """Apply one or more events atomically; pollers observe only the
        final state (a rejected attempt and its retry/fallback decision
        land together)."""
        with self._cond:
            for event in events:
                self.state, self.attempt_count = transition(
                    self.state, self.attempt_count, event, self.retry_limit)
            self._cond.notify_all()
            return self.state

    def set_verdict_info(self, reason: str, score: Optional[float]) -> None:
        with self._cond:
            self.last_reason = reason
            self.last_score = score

    def status(self) -> dict:
        with self._cond:
            return {
                "state": self.state,
                "reason": self.last_reason,
                "attempt_count": self.attempt_count,
                "retry_limit": self.retry_limit,
            }

    def wait_while_state(self, state: str, timeout_s: float) -> dict:
        """Block until the state differs from `state` (or timeout)."""
        deadline = time.monotonic() + timeout_s
        with self._cond:
            while self.state == state:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self._cond.wait(remaining)
        return self.status()

    def expired(self, now_ms: int, expiry_s: float) -> bool:
        return (self.state not in TERMINAL_STATES
                and now_ms - self.created_at > expiry_s * 1000)
