"""Exception hierarchy. Every error carries a stable ``code`` string that is
also used verbatim on the wire."""


class AmbientAuthError(Exception):
    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# -- audio / DSP ------------------------------------------------------------

class MalformedWav(AmbientAuthError):
    code = "MALFORMED_WAV"


class UnsupportedEncoding(AmbientAuthError):
    code = "UNSUPPORTED_ENCODING"


class FsTooLow(AmbientAuthError):
    code = "FS_TOO_LOW"


class FsMismatch(AmbientAuthError):
    code = "FS_MISMATCH"


class LengthMismatch(AmbientAuthError):
    code = "LENGTH_MISMATCH"


class DurationMismatch(AmbientAuthError):
    code = "DURATION_MISMATCH"


# -- time sync ---------------------------------------------------------------

class NoRounds(AmbientAuthError):
    code = "NO_ROUNDS"


# -- decision ----------------------------------------------------------------

class UntabulatedAlpha(AmbientAuthError):
    code = "UNTABULATED_ALPHA"


# -- protocol ----------------------------------------------------------------

class UsernameTaken(AmbientAuthError):
    code = "USERNAME_TAKEN"


class BadCredentials(AmbientAuthError):
    code = "BAD_CREDENTIALS"


class Throttled(AmbientAuthError):
    code = "THROTTLED"


class BadSession(AmbientAuthError):
    code = "BAD_SESSION"


class WrongState(AmbientAuthError):
    code = "WRONG_STATE"


class BadSignature(AmbientAuthError):
    code = "BAD_SIGNATURE"


class BadCode(AmbientAuthError):
    code = "BAD_CODE"


# -- token emulator ----------------------------------------------------------

class DecryptFail(AmbientAuthError):
    code = "DECRYPT_FAIL"


class StaleSample(AmbientAuthError):
    code = "STALE_SAMPLE"


class ChallengeTimeout(AmbientAuthError):
    code = "TIMEOUT"


class DeviceBusy(AmbientAuthError):
    code = "BUSY"


class MicUnavailable(AmbientAuthError):
    code = "MIC_UNAVAILABLE"


# -- evaluation harness --------------------------------------------------------

class SingleSubject(AmbientAuthError):
    code = "SINGLE_SUBJECT"
