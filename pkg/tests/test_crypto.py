import numpy as np
import pytest

from ambientauth import crypto
from ambientauth.errors import BadSignature, DecryptFail

from conftest import make_sample


@pytest.fixture(scope="module")
def keypair():
    return crypto.DeviceKeyPair.generate()


@pytest.fixture(scope="module")
def other_keypair():
    return crypto.DeviceKeyPair.generate()


class TestSignatures:
    def test_round_trip(self, keypair):
        sig = keypair.sign(b"hello")
        crypto.verify_signature(keypair.public_bytes(), sig, b"hello")

    def test_tampered_message(self, keypair):
        sig = keypair.sign(b"hello")
        with pytest.raises(BadSignature):
            crypto.verify_signature(keypair.public_bytes(), sig, b"hellp")

    def test_wrong_key(self, keypair, other_keypair):
        sig = other_keypair.sign(b"hello")
        with pytest.raises(BadSignature):
            crypto.verify_signature(keypair.public_bytes(), sig, b"hello")

    def test_pem_round_trip(self, tmp_path, keypair):
        path = tmp_path / "device.pem"
        keypair.save_pem(str(path))
        loaded = crypto.DeviceKeyPair.load_pem(str(path))
        sig = loaded.sign(b"x")
        crypto.verify_signature(keypair.public_bytes(), sig, b"x")


class TestHybridEncryption:
    def test_round_trip(self, keypair):
        es = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        assert crypto.decrypt_payload(keypair, es) == b"payload"

    def test_fresh_key_per_message(self, keypair):
        a = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        b = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        assert a.ciphertext != b.ciphertext
        assert a.wrapped_key != b.wrapped_key

    def test_flipped_ciphertext_bit(self, keypair):
        es = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        bad = bytearray(es.ciphertext)
        bad[0] ^= 0x01
        tampered = crypto.EncryptedSample(es.wrapped_key, es.nonce,
                                          bytes(bad))
        with pytest.raises(DecryptFail):
            crypto.decrypt_payload(keypair, tampered)

    def test_wrong_private_key(self, keypair, other_keypair):
        es = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        with pytest.raises(DecryptFail):
            crypto.decrypt_payload(other_keypair, es)

    def test_wire_fields_base64(self, keypair):
        es = crypto.encrypt_payload(keypair.public_bytes(), b"payload")
        wire_form = es.to_wire()
        assert set(wire_form) == {"wrapped_key", "nonce", "ciphertext"}
        assert crypto.EncryptedSample.from_wire(wire_form) == es


class TestSamplePayload:
    def test_round_trip(self, rng):
        pcm = rng.uniform(-0.9, 0.9, 44100)
        sample = make_sample(pcm, captured_at=123456, device_id="dev-1")
        back = crypto.plaintext_to_sample(crypto.sample_to_plaintext(sample))
        assert back.fs == sample.fs
        assert back.captured_at == 123456
        assert back.device_id == "dev-1"
        assert np.max(np.abs(back.pcm - sample.pcm)) <= 1 / 32768

    def test_malformed_payload(self):
        with pytest.raises(DecryptFail):
            crypto.plaintext_to_sample(b"not json")
        with pytest.raises(DecryptFail):
            crypto.plaintext_to_sample(b"{}")


class TestFallbackCodes:
    SECRET = b"0123456789abcdef0123"

    def test_format(self):
        code = crypto.fallback_code(self.SECRET, 1_700_000_000_000)
        assert len(code) == 6 and code.isdigit()

    def test_current_step_accepted(self):
        now = 1_700_000_123_456
        code = crypto.fallback_code(self.SECRET, now)
        assert crypto.verify_fallback_code(self.SECRET, code, now)

    def test_adjacent_steps_accepted(self):
        now = 1_700_000_123_456
        for k in (-1, 1):
            code = crypto.fallback_code(self.SECRET, now, step_offset=k)
            assert crypto.verify_fallback_code(self.SECRET, code, now)

    def test_stale_code_rejected(self):
        now = 1_700_000_123_456
        code = crypto.fallback_code(self.SECRET, now, step_offset=-2)
        assert not crypto.verify_fallback_code(self.SECRET, code, now)

    def test_deterministic(self):
        a = crypto.fallback_code(self.SECRET, 1_700_000_000_000)
        b = crypto.fallback_code(self.SECRET, 1_700_000_000_000)
        assert a == b

    def test_random_guess_rarely_valid(self, rng):
        # 3 accepted codes out of 10^6: a fixed wrong guess almost never
        # verifies across many secrets
        now = 1_700_000_000_000
        hits = 0
        for _ in range(300):
            secret = rng.bytes(20)
            if crypto.verify_fallback_code(secret, "000000", now):
                hits += 1
        assert hits <= 1
