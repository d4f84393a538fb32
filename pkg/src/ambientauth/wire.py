"""Wire format: length-prefixed JSON messages.

Every message is a JSON object with a "type" field, UTF-8 encoded and
prefixed with a 4-byte big-endian length. HTTP endpoints carry the same
JSON objects as request/response bodies; the persistent device channel
carries them as raw frames over TCP.
"""
from __future__ import annotations

import json
import socket
import struct

MAX_FRAME_BYTES = 32 * 1024 * 1024

# domain separator for device-channel identity signatures
CHANNEL_IDENT_CONTEXT = b"channel-ident:"

# browser -> server
LOGIN_INIT = "LOGIN_INIT"
SAMPLE_UPLOAD = "SAMPLE_UPLOAD"
FALLBACK_CODE = "FALLBACK_CODE"
SYNC_REQ = "SYNC_REQ"
ENROLL = "ENROLL"

# server -> browser
LOGIN_CHALLENGE = "LOGIN_CHALLENGE"
SYNC_RESP = "SYNC_RESP"
RESULT = "RESULT"

# server -> phone
CHALLENGE = "CHALLENGE"
SAMPLE = "SAMPLE"
CHANNEL_NONCE = "CHANNEL_NONCE"
IDENT_OK = "IDENT_OK"

# phone -> server
IDENT = "IDENT"
VERDICT = "VERDICT"

ERROR = "ERROR"
ACK = "ACK"


def encode_frame(message: dict) -> bytes:
    body = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise ValueError("frame too large")
    return struct.pack(">I", len(body)) + body


def recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("peer closed the channel")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> dict:
    (length,) = struct.unpack(">I", recv_exact(sock, 4))
    if length > MAX_FRAME_BYTES:
        raise ValueError("frame too large")
    return json.loads(recv_exact(sock, length).decode("utf-8"))


def send_frame(sock: socket.socket, message: dict) -> None:
    sock.sendall(encode_frame(message))


def message(mtype: str, **fields) -> dict:
    fields["type"] = mtype
    return fields


def error_message(code: str, detail: str = "") -> dict:
    return {"type": ERROR, "error": code, "detail": detail}
