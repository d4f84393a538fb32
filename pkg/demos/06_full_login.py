"""A complete login, in process: server, phone token and a scripted
browser on loopback. Shows the accept path, then an attack-shaped reject
path that falls back to verification codes.
"""
import json
import tempfile
import time
import urllib.request
from pathlib import Path

import numpy as np

from ambientauth import crypto, timesync
from ambientauth.audio import AudioSample, CANONICAL_FS, encode_wav
from ambientauth.harness.synth import ambient_track
from ambientauth.server import AuthServer, ServerConfig
from ambientauth.token import FixtureSource, TokenEmulator

fs = CANONICAL_FS


def post(base, path, payload):
    req = urllib.request.Request(
        base + path, data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    with urllib.request.urlopen(req, timeout=15) as resp:
        return json.loads(resp.read())


def browser_login(base, username, source, max_rounds=4):
    challenge = post(base, "/api/login_init",
                     {"username": username, "password": "demo-pass"})
    print(f"  server -> browser: LOGIN_CHALLENGE session="
          f"{challenge['session_id'][:8]}… record_ms="
          f"{challenge['record_ms']}")
    result = None
    for attempt in range(1, max_rounds + 1):
        start = int(time.time() * 1000)
        pcm = source.record(challenge["record_ms"], fs)
        sample = AudioSample.from_pcm(pcm, fs, captured_at=start,
                                      device_id="browser")
        payload = crypto.encrypt_payload(
            crypto.unb64(challenge["phone_pubkey"]),
            crypto.sample_to_plaintext(sample))
        post(base, "/api/sample",
             {"session_id": challenge["session_id"], **payload.to_wire()})
        print(f"  browser -> server: SAMPLE_UPLOAD "
              f"({len(payload.ciphertext)} ciphertext bytes), attempt "
              f"{attempt}")
        with urllib.request.urlopen(
                f"{base}/api/result?session_id={challenge['session_id']}"
                "&wait_while=AWAITING_VERDICT&wait_ms=10000",
                timeout=15) as resp:
            result = json.loads(resp.read())
        print(f"  server -> browser: RESULT state={result['state']} "
              f"reason={result['reason']}")
        if result["state"] != "AWAITING_SAMPLES":
            break
    return challenge, result


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    rng = np.random.default_rng(11)
    n = round(4.0 * fs)
    lag = round(0.04 * fs)
    track = ambient_track(rng, n + lag, fs)
    noise = 0.1 * 10 ** (-15 / 20)

    here = tmp / "room_phone.wav"
    here_pc = tmp / "room_computer.wav"
    here.write_bytes(encode_wav(AudioSample.from_pcm(
        track[:n] + noise * rng.standard_normal(n), fs)))
    here_pc.write_bytes(encode_wav(AudioSample.from_pcm(
        track[lag:lag + n] + noise * rng.standard_normal(n), fs)))
    elsewhere = tmp / "attacker_room.wav"
    elsewhere.write_bytes(encode_wav(AudioSample.from_pcm(
        ambient_track(rng, n, fs), fs)))

    server = AuthServer(ServerConfig(record_ms=3500,
                                     scrypt_cost=2 ** 12)).start()
    base = f"http://127.0.0.1:{server.http_port}"
    phone = TokenEmulator(
        host="127.0.0.1", http_port=server.http_port,
        channel_port=server.channel_port, username="demo",
        password="demo-pass", source=FixtureSource([here]))
    try:
        phone.enroll()
        phone.connect()
        print("enrolled 'demo' and connected the phone token\n")

        print("-- legitimate login: browser in the same room as the phone")
        _, result = browser_login(base, "demo",
                                  FixtureSource([here_pc]))
        print(f"  phone verdict: score={phone.last_verdict['score']:.3f} "
              f"-> {result['state']}\n")

        print("-- attack-shaped login: browser hears a different room")
        challenge, result = browser_login(base, "demo",
                                          FixtureSource([elsewhere]))
        print(f"  after {result['attempt_count']} scoring attempts the "
              f"session state is {result['state']}")
        account = server.store.get_account("demo")
        code = crypto.fallback_code(account.fallback_secret,
                                    server.now_ms())
        final = post(base, "/api/fallback",
                     {"session_id": challenge["session_id"], "code": code})
        print(f"  the real user enters the fallback code {code} -> "
              f"{final['state']}")
    finally:
        phone.close()
        server.stop()
