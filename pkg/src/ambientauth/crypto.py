"""Cryptographic plumbing: device keypairs, hybrid sample encryption,
verdict signatures and time-based fallback codes.

Audio payloads travel browser -> server -> phone as hybrid ciphertext: a
fresh 256-bit AES-GCM key encrypts the payload, and that key is wrapped
under the phone's RSA-2048 public key (OAEP). The server proxies the
ciphertext without ever holding a decryption key. The same device key
signs verdicts (PSS), binding them to the enrolled phone.
"""
from __future__ import annotations

import base64
import hashlib
import hmac as hmac_mod
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .audio import AudioSample
from .errors import BadSignature, DecryptFail

_OAEP = padding.OAEP(mgf=padding.MGF1(hashes.SHA256()),
                     algorithm=hashes.SHA256(), label=None)
_PSS = padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=32)


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))


class DeviceKeyPair:
    """RSA-2048 keypair held by the phone token. The private half never
    leaves the process; only DER-encoded public bytes are shared."""

    def __init__(self, private_key=None):
        self._private = private_key or rsa.generate_private_key(
            public_exponent=65537, key_size=2048)

    @classmethod
    def generate(cls) -> "DeviceKeyPair":
        return cls()

    def public_bytes(self) -> bytes:
        return self._private.public_key().public_bytes(
            encoding=serialization.Encoding.DER,
            format=serialization.PublicFormat.SubjectPublicKeyInfo)

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message, _PSS, hashes.SHA256())

    def unwrap_key(self, wrapped: bytes) -> bytes:
        try:
            return self._private.decrypt(wrapped, _OAEP)
        except ValueError as exc:
            raise DecryptFail("key unwrap failed") from exc

    def save_pem(self, path: str) -> None:
        pem = self._private.private_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PrivateFormat.PKCS8,
            encryption_algorithm=serialization.NoEncryption())
        with open(path, "wb") as fh:
            fh.write(pem)

    @classmethod
    def load_pem(cls, path: str) -> "DeviceKeyPair":
        with open(path, "rb") as fh:
            key = serialization.load_pem_private_key(fh.read(), password=None)
        return cls(private_key=key)


def load_public_key(der: bytes):
    return serialization.load_der_public_key(der)


def verify_signature(public_der: bytes, signature: bytes,
                     message: bytes) -> None:
    """Raises BadSignature unless `signature` is valid for `message`."""
    try:
        load_public_key(public_der).verify(signature, message, _PSS,
                                           hashes.SHA256())
    except (InvalidSignature, ValueError) as exc:
        raise BadSignature("signature verification failed") from exc


@dataclass(frozen=True)
class EncryptedSample:
    """Hybrid-encrypted audio payload: AES-256-GCM ciphertext plus the
    AES key wrapped under the recipient's public key."""

    wrapped_key: bytes
    nonce: bytes
    ciphertext: bytes

    def to_wire(self) -> dict:
        return {"wrapped_key": b64(self.wrapped_key),
                "nonce": b64(self.nonce),
                "ciphertext": b64(self.ciphertext)}

    @classmethod
    def from_wire(cls, fields: dict) -> "EncryptedSample":
        return cls(wrapped_key=unb64(fields["wrapped_key"]),
                   nonce=unb64(fields["nonce"]),
                   ciphertext=unb64(fields["ciphertext"]))


def encrypt_payload(public_der: bytes, plaintext: bytes) -> EncryptedSample:
    key = os.urandom(32)
    nonce = os.urandom(12)
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, None)
    wrapped = load_public_key(public_der).encrypt(key, _OAEP)
    return EncryptedSample(wrapped_key=wrapped, nonce=nonce,
                           ciphertext=ciphertext)


def decrypt_payload(keypair: DeviceKeyPair, es: EncryptedSample) -> bytes:
    key = keypair.unwrap_key(es.wrapped_key)
    try:
        return AESGCM(key).decrypt(es.nonce, es.ciphertext, None)
    except InvalidTag as exc:
        raise DecryptFail("authentication tag mismatch") from exc


# -- audio payload serialization ----------------------------------------------

def sample_to_plaintext(sample: AudioSample) -> bytes:
    """Serialize a sample for encryption: int16 PCM plus metadata."""
    ints = np.clip(np.rint(sample.pcm * 32768.0), -32768, 32767).astype("<i2")
    return json.dumps({
        "pcm": b64(ints.tobytes()),
        "fs": sample.fs,
        "captured_at": sample.captured_at,
        "device_id": sample.device_id,
    }).encode("utf-8")


def plaintext_to_sample(data: bytes) -> AudioSample:
    try:
        obj = json.loads(data.decode("utf-8"))
        raw = np.frombuffer(unb64(obj["pcm"]), dtype="<i2")
        return AudioSample.from_pcm(raw.astype(np.float64) / 32768.0,
                                    int(obj["fs"]),
                                    captured_at=int(obj["captured_at"]),
                                    device_id=str(obj.get("device_id", "")))
    except (KeyError, ValueError, TypeError) as exc:
        raise DecryptFail(f"malformed sample payload: {exc}") from exc


# -- verdict signing -----------------------------------------------------------

def verdict_signing_bytes(session_id: str, accepted: bool, reason: str,
                          score) -> bytes:
    """Canonical byte string the phone signs for a verdict."""
    return json.dumps([session_id, accepted, reason, score],
                      separators=(",", ":")).encode("utf-8")


# -- fallback verification codes -----------------------------------------------

CODE_STEP_S = 30
CODE_DIGITS = 6


def fallback_code(secret: bytes, at_ms: int, step_offset: int = 0) -> str:
    """Time-based 6-digit code (HMAC-SHA1, 30 s steps)."""
    counter = at_ms // (CODE_STEP_S * 1000) + step_offset
    mac = hmac_mod.new(secret, struct.pack(">Q", counter),
                       hashlib.sha1).digest()
    offset = mac[-1] & 0x0F
    value = struct.unpack(">I", mac[offset:offset + 4])[0] & 0x7FFFFFFF
    return f"{value % 10 ** CODE_DIGITS:0{CODE_DIGITS}d}"


def verify_fallback_code(secret: bytes, code: str, at_ms: int,
                         skew_steps: int = 1) -> bool:
    """Accept the current code or one within +-skew_steps time steps."""
    candidates = {fallback_code(secret, at_ms, k)
                  for k in range(-skew_steps, skew_steps + 1)}
    return any(hmac_mod.compare_digest(code, c) for c in candidates)
