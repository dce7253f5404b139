"""Symmetric building blocks: hash oracles, stream cipher, MAC, wide-block PRP.

All keyed primitives take kappa-byte keys, where kappa is the format security
parameter (16 in production).  The four hash oracles are domain-separated
SHA-256; the stream cipher is AES-128-CTR; the MAC is truncated HMAC-SHA256;
the wide-block PRP is a four-round LIONESS-style unbalanced Feistel network,
so flipping any ciphertext bit scrambles the whole plaintext block.
"""

import hashlib
import hmac as hmac_mod

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

# Domain separation prefixes for the hash oracles.
_DOM_BLIND = b"\xb0"
_DOM_STREAM = b"\xb1"
_DOM_MAC = b"\xb2"
_DOM_PRP = b"\xb3"
_DOM_RNG = b"\xb4"


def xor_bytes(a: bytes, b: bytes) -> bytes:
    """XOR two equal-length byte strings."""
    assert len(a) == len(b), "xor operands must have equal length"
    n = len(a)
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(n, "big")


class SeedRng:
    """Deterministic byte stream expanded from a seed.

    Used for every random choice an onion former or game challenger makes, so
    that whole runs replay bit-identically from a single seed.
    """

    def __init__(self, seed: bytes):
        assert isinstance(seed, (bytes, bytearray))
        self._key = hashlib.sha256(_DOM_RNG + bytes(seed)).digest()[:16]
        self._offset = 0

    def read(self, n: int) -> bytes:
        """Return the next n bytes of the stream."""
        out = _aes_ctr_stream(self._key, self._offset, n)
        self._offset += n
        return out

    def fork(self, label: bytes) -> "SeedRng":
        """An independent stream derived from this seed and a label."""
        return SeedRng(self._key + bytes(label))


def _aes_ctr_stream(key16: bytes, offset: int, n: int) -> bytes:
    """AES-128-CTR keystream bytes [offset, offset+n) for a zero IV."""
    block, skip = divmod(offset, 16)
    cipher = Cipher(algorithms.AES(key16), modes.CTR(block.to_bytes(16, "big")))
    enc = cipher.encryptor()
    return enc.update(b"\x00" * (skip + n))[skip:]


def _stream_key(key: bytes) -> bytes:
    """Map a kappa-byte key onto an AES-128 key."""
    if len(key) == 16:
        return bytes(key)
    return hashlib.sha256(_DOM_STREAM + bytes(key)).digest()[:16]


def ro_hb(group, alpha: int, s: int) -> int:
    """Blinding-factor oracle h_b: group element pair -> nonzero scalar."""
    material = group.encode(alpha) + group.encode(s)
    ctr = 0
    while True:
        digest = hashlib.sha256(_DOM_BLIND + bytes([ctr]) + material).digest()
        b = int.from_bytes(digest, "big") % group.q
        if b != 0:
            return b
        ctr += 1


def _key_oracle(domain: bytes, group, s: int, kappa: int) -> bytes:
    digest = hashlib.sha256(domain + group.encode(s)).digest()
    assert kappa <= len(digest)
    return digest[:kappa]


_SYM_DOMAINS = {"rho": _DOM_STREAM, "mu": _DOM_MAC, "pi": _DOM_PRP}


def ro_hsym(tag: str, group, s: int, kappa: int) -> bytes:
    """Key-derivation oracles h_rho / h_mu / h_pi, selected by tag."""
    return _key_oracle(_SYM_DOMAINS[tag], group, s, kappa)


def prg(key: bytes, out_len: int, cap: int = None) -> bytes:
    """Pseudorandom stream of out_len bytes under the given key.

    Callers that slice header padding pass their format's maximum stream
    length as cap; requesting more is an argument error.
    """
    assert out_len >= 0
    if cap is not None and out_len > cap:
        raise ValueError("requested %d stream bytes, cap is %d" % (out_len, cap))
    return _aes_ctr_stream(_stream_key(key), 0, out_len)


def mac(key: bytes, data: bytes, kappa: int) -> bytes:
    """HMAC-SHA256 truncated to kappa bytes."""
    return hmac_mod.new(bytes(key), bytes(data), hashlib.sha256).digest()[:kappa]


def _prp_subkeys(key: bytes, kappa: int):
    base = bytes(key)
    ks = [hashlib.sha256(_DOM_PRP + bytes([i]) + base).digest() for i in range(1, 5)]
    # Rounds 1 and 3 XOR into the kappa-byte left part; rounds 2 and 4 are
    # HMAC keys for compressing the right part.
    return ks[0][:kappa], ks[1], ks[2][:kappa], ks[3]


def prp_enc(key: bytes, block: bytes, kappa: int) -> bytes:
    """LIONESS encryption of a block wider than kappa bytes."""
    assert len(block) > kappa, "PRP block must exceed the left-part width"
    left, right = block[:kappa], block[kappa:]
    k1, k2, k3, k4 = _prp_subkeys(key, kappa)
    right = xor_bytes(right, prg(xor_bytes(left, k1), len(right)))
    left = xor_bytes(left, mac(k2, right, kappa))
    right = xor_bytes(right, prg(xor_bytes(left, k3), len(right)))
    left = xor_bytes(left, mac(k4, right, kappa))
    return left + right


def prp_dec(key: bytes, block: bytes, kappa: int) -> bytes:
    """Inverse of prp_enc."""
    assert len(block) > kappa, "PRP block must exceed the left-part width"
    left, right = block[:kappa], block[kappa:]
    k1, k2, k3, k4 = _prp_subkeys(key, kappa)
    left = xor_bytes(left, mac(k4, right, kappa))
    right = xor_bytes(right, prg(xor_bytes(left, k3), len(right)))
    left = xor_bytes(left, mac(k2, right, kappa))
    right = xor_bytes(right, prg(xor_bytes(left, k1), len(right)))
    return left + right
