// Hybrid encryption with the browser's native WebCrypto: a fresh AES-256-GCM
// key per upload, wrapped under the phone's RSA-2048-OAEP(SHA-256) public
// key. Field encodings are base64, matching the server/phone wire format
// byte for byte.

export interface EncryptedSample {
  wrapped_key: string;
  nonce: string;
  ciphertext: string;
}

export function toBase64(bytes: Uint8Array): string {
  let out = "";
  const CHUNK = 0x8000; // String.fromCharCode argument limit
  for (let i = 0; i < bytes.length; i += CHUNK) {
    out += String.fromCharCode(...bytes.subarray(i, i + CHUNK));
  }
  return btoa(out);
}

export function fromBase64(text: string): Uint8Array {
  const raw = atob(text);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return bytes;
}

export async function importPhoneKey(spkiBase64: string): Promise<CryptoKey> {
  const der = fromBase64(spkiBase64);
  return crypto.subtle.importKey(
    "spki",
    der.buffer as ArrayBuffer,
    { name: "RSA-OAEP", hash: "SHA-256" },
    false,
    ["encrypt"],
  );
}

export async function hybridEncrypt(
  phoneKey: CryptoKey,
  payload: Uint8Array,
): Promise<EncryptedSample> {
  const aesKey = await crypto.subtle.generateKey(
    { name: "AES-GCM", length: 256 },
    true,
    ["encrypt"],
  );
  const nonce = crypto.getRandomValues(new Uint8Array(12));
  const ciphertext = new Uint8Array(
    await crypto.subtle.encrypt(
      { name: "AES-GCM", iv: nonce },
      aesKey,
      payload.buffer as ArrayBuffer,
    ),
  );
  const rawAes = new Uint8Array(await crypto.subtle.exportKey("raw", aesKey));
  const wrapped = new Uint8Array(
    await crypto.subtle.encrypt(
      { name: "RSA-OAEP" },
      phoneKey,
      rawAes.buffer as ArrayBuffer,
    ),
  );
  return {
    wrapped_key: toBase64(wrapped),
    nonce: toBase64(nonce),
    ciphertext: toBase64(ciphertext),
  };
}
