"""Prime-order cyclic groups used by the KEM layer.

Two instantiations are provided:

* ``TOY_GROUP``: the order-5 subgroup of Z_11^*, small enough that tests can
  enumerate every element and exponent by hand.
* ``PROD_GROUP``: the order-q subgroup of Z_p^* for a hardcoded 257-bit safe
  prime p = 2q + 1, giving roughly 128-bit security with exact (unclamped)
  exponent arithmetic.

Group elements are plain ints in [1, p); scalars are ints in [1, q).
Elements travel on the wire as fixed-width big-endian byte strings.
"""

from dataclasses import dataclass


class GroupDecodeError(ValueError):
    """Raised when a byte string is not a valid encoding of a group element."""


@dataclass(frozen=True)
class GroupParams:
    """A prime-order subgroup of Z_p^* with generator g and fixed encoding width."""

    name: str
    p: int          # modulus of the ambient field
    q: int          # prime order of the subgroup
    g: int          # generator of the order-q subgroup
    elem_len: int   # wire width of an encoded element, in bytes

    def exp(self, base: int, e: int) -> int:
        """Modular exponentiation base**e mod p."""
        assert self.is_element(base), "base must be a subgroup element"
        return pow(base, e % self.q, self.p)

    def is_element(self, v) -> bool:
        """True if v is a member of the order-q subgroup (including identity)."""
        if not isinstance(v, int) or not 1 <= v < self.p:
            return False
        return pow(v, self.q, self.p) == 1

    def is_scalar(self, e) -> bool:
        """True if e is a valid nonzero exponent."""
        return isinstance(e, int) and 1 <= e < self.q

    def encode(self, v: int) -> bytes:
        """Fixed-width big-endian encoding of an element."""
        assert self.is_element(v), "cannot encode a non-element"
        return v.to_bytes(self.elem_len, "big")

    def decode(self, data: bytes) -> int:
        """Inverse of encode; rejects wrong widths and non-members."""
        if len(data) != self.elem_len:
            raise GroupDecodeError(
                "element encoding must be %d bytes, got %d" % (self.elem_len, len(data))
            )
        v = int.from_bytes(data, "big")
        if not self.is_element(v):
            raise GroupDecodeError("byte string does not encode a subgroup element")
        return v

    def random_scalar(self, rng) -> int:
        """Uniform scalar in [1, q) drawn from the given deterministic rng."""
        nbytes = (self.q.bit_length() + 7) // 8
        while True:
            e = int.from_bytes(rng.read(nbytes + 8), "big") % self.q
            if e != 0:
                return e


# Order-5 subgroup of Z_11^*: {3, 9, 5, 4, 1}, generated by 3.
TOY_GROUP = GroupParams(name="toy", p=11, q=5, g=3, elem_len=1)

# Safe-prime production group: p = 2q + 1, both prime, q about 2**256.
_PROD_Q = 0x1000000000000000000000000000000000000000000000000000000000000482B
_PROD_P = 0x20000000000000000000000000000000000000000000000000000000000009057
PROD_GROUP = GroupParams(name="prod", p=_PROD_P, q=_PROD_Q, g=4, elem_len=33)
