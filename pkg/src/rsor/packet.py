"""Byte-exact onion packet format: forming, processing, and replying.

An onion is a fixed-width packet (header eta = (alpha, beta, gamma), payload
delta).  The sender derives every byte from a seed, so any layer of any onion
can be recomputed on demand; relays peel one layer at a time with only their
private key.  Forward payloads may embed a pre-built reply header so the exit
relay can send an answer back without learning who asked.
"""

import functools
from dataclasses import dataclass

from .crypto import SeedRng, mac, prg, prp_dec, prp_enc, xor_bytes
from .group import GroupDecodeError, GroupParams
from .kem import KemChain, kem_blind, kem_chain_create, kem_decap

# Address type tags (first byte of every addr_len-wide address field).
ADDR_RELAY = 0x01
ADDR_EXIT = 0x02        # the final-hop sentinel on a forward path
ADDR_REPLY_RETURN = 0x03  # final hop of a reply path: the original sender
ADDR_RECEIVER = 0x04


@dataclass(frozen=True)
class FormatParams:
    """All width constants of the packet format.

    beta always spans (2*max_hops+1)*kappa bytes regardless of path length;
    payload_len must leave room for the mandatory payload fields plus a
    nonempty message.  legacy_zero_filler selects the broken variant whose
    final-layer header filler is all-zero bytes instead of random ones.
    """

    group: GroupParams
    kappa: int = 16
    max_hops: int = 5
    addr_len: int = 16
    payload_len: int = 355
    legacy_zero_filler: bool = False

    def __post_init__(self):
        assert self.kappa >= 8 and self.max_hops >= 1
        # The beta slicing tables assume address fields and MACs share a width.
        assert self.addr_len == self.kappa, "addr_len must equal kappa"
        assert self.payload_len >= self.min_payload_len

    @property
    def beta_len(self):
        return (2 * self.max_hops + 1) * self.kappa

    @property
    def header_len(self):
        return self.group.elem_len + self.beta_len + self.kappa

    @property
    def reply_block_len(self):
        # first-hop address + serialized reply header + k_tilde
        return self.addr_len + self.header_len + self.kappa

    @property
    def min_payload_len(self):
        # 0_kappa + receiver address + reply block + 2-byte frame + 1 byte
        return self.kappa + self.addr_len + self.reply_block_len + 3

    @property
    def msg_slot_len(self):
        return self.payload_len - (self.kappa + self.addr_len + self.reply_block_len)

    @property
    def max_msg_len(self):
        return self.msg_slot_len - 2

    @property
    def stream_len(self):
        # Widest PRG slice any header operation needs: (2*max_hops+3)*kappa.
        return self.beta_len + 2 * self.kappa

    @property
    def onion_len(self):
        return self.header_len + self.payload_len


@dataclass(frozen=True)
class Header:
    alpha: int
    beta: bytes
    gamma: bytes


@dataclass(frozen=True)
class Onion:
    header: Header
    delta: bytes


@dataclass(frozen=True)
class ReplyInfo:
    """What an exit relay needs to answer: where to send the pre-built reply
    header and the key sealing the reply payload.  ident is only known to the
    onion's creator (it travels encrypted inside eta0), so parsed instances
    carry None there."""

    first_hop: bytes
    eta0: Header
    k_tilde: bytes
    ident: bytes = None


@dataclass(frozen=True)
class OnionSpec:
    """Everything that determines one onion: seed, message, receiver, and the
    two paths as ((name, pubkey), ...) tuples.  An empty reply path means the
    onion is not repliable."""

    seed: bytes
    message: bytes
    receiver: bytes
    path: tuple
    reply_path: tuple = ()


@dataclass(frozen=True)
class ProcResult:
    """Outcome of processing one onion at one relay.

    kind is one of "forward", "exit", "reply", "fail".  Callers other than
    tests must treat every "fail" identically; reason is diagnostic only.
    """

    kind: str
    next_hop: bytes = None
    next_onion: Onion = None
    message: bytes = None
    receiver: bytes = None
    reply_info: ReplyInfo = None
    ident: bytes = None
    reason: str = None


def _fail(reason):
    return ProcResult(kind="fail", reason=reason)


# ---------------------------------------------------------------------------
# Address fields

def encode_addr(tag: int, name: bytes, params) -> bytes:
    """Pack a type tag and a short name into a fixed-width address field."""
    assert len(name) <= params.addr_len - 1, "name too long for address field"
    return bytes([tag]) + name.ljust(params.addr_len - 1, b"\x00")


def decode_addr(field: bytes):
    """Split an address field into (tag, name) with zero padding removed."""
    return field[0], field[1:].rstrip(b"\x00")


def relay_addr(name, params):
    return encode_addr(ADDR_RELAY, name, params)


def exit_addr(params):
    return encode_addr(ADDR_EXIT, b"", params)


def receiver_addr(name, params):
    return encode_addr(ADDR_RECEIVER, name, params)


# ---------------------------------------------------------------------------
# Spec validation

def validate_spec(spec: OnionSpec, params: FormatParams):
    """Check the structural invariants of an onion description."""
    assert isinstance(spec.seed, bytes) and spec.seed, "seed must be nonempty bytes"
    if not 1 <= len(spec.path) <= params.max_hops:
        raise ValueError("forward path length out of range")
    if len(spec.reply_path) > params.max_hops:
        raise ValueError("reply path length out of range")
    if len(spec.message) > params.max_msg_len:
        raise ValueError("message does not fit the payload frame")
    if len(spec.receiver) != params.addr_len:
        raise ValueError("receiver must be a full address field")
    for path in (spec.path, spec.reply_path):
        names = [name for name, _pk in path]
        if len(set(names)) != len(names):
            raise ValueError("path must be acyclic")
        for name, pk in path:
            if len(name) > params.addr_len - 1:
                raise ValueError("relay name too long")
            if not params.group.is_element(pk):
                raise ValueError("hop public key is not a group element")


# ---------------------------------------------------------------------------
# Header construction (sender side)

def build_padding(chain: KemChain, upto: int, params: FormatParams) -> bytes:
    """The accumulated filler Phi_upto that pads peeled-off header space.

    Phi_0 is empty; each hop extends it by 2*kappa bytes and XORs in the tail
    of that hop's beta keystream, exactly the bytes a peeling relay will
    later shift into view.
    """
    kappa, r = params.kappa, params.max_hops
    assert 0 <= upto <= len(chain.layers)
    phi = b""
    for i in range(1, upto + 1):
        stream = prg(chain.layers[i - 1].k_rho, params.stream_len)
        phi = xor_bytes(phi + b"\x00" * (2 * kappa), stream[(2 * (r - i) + 3) * kappa:])
    return phi


def build_header(chain: KemChain, path_addrs, final_contents: bytes, params):
    """All n header layers for one direction.

    path_addrs[i] is the address field of hop i+1 (path_addrs[0], the first
    hop's own address, is never embedded -- the sender delivers directly).
    final_contents fills the last layer's routing slot, width
    (2*(max_hops - n) + 3)*kappa; its tail filler must already be chosen
    (random, or zeros in legacy mode).
    """
    kappa, r = params.kappa, params.max_hops
    n = len(chain.layers)
    if n > r:
        raise ValueError("path exceeds max_hops")
    assert len(path_addrs) == n
    assert len(final_contents) == (2 * (r - n) + 3) * kappa

    streams = [prg(layer.k_rho, params.stream_len) for layer in chain.layers]
    phi = build_padding(chain, n - 1, params)

    beta = xor_bytes(final_contents, streams[n - 1][: len(final_contents)]) + phi
    gamma = mac(chain.layers[n - 1].k_mu, beta, kappa)
    headers = [Header(chain.layers[n - 1].alpha, beta, gamma)]
    for i in range(n - 2, -1, -1):
        inner = path_addrs[i + 1] + gamma + beta[: params.beta_len - 2 * kappa]
        beta = xor_bytes(inner, streams[i][: params.beta_len])
        gamma = mac(chain.layers[i].k_mu, beta, kappa)
        headers.append(Header(chain.layers[i].alpha, beta, gamma))
    headers.reverse()
    return headers


# ---------------------------------------------------------------------------
# Payload construction

def _frame(message: bytes, params) -> bytes:
    assert len(message) <= params.max_msg_len
    return len(message).to_bytes(2, "big") + message.ljust(
        params.max_msg_len, b"\x00"
    )


def _unframe(framed: bytes):
    length = int.from_bytes(framed[:2], "big")
    if length > len(framed) - 2:
        return None
    return framed[2 : 2 + length]


def serialize_reply_block(info: ReplyInfo, params) -> bytes:
    return info.first_hop + serialize_header(info.eta0, params) + info.k_tilde


def parse_reply_block(block: bytes, params):
    """ReplyInfo from payload bytes, or None for the all-zero filler."""
    assert len(block) == params.reply_block_len
    if block == b"\x00" * params.reply_block_len:
        return None
    try:
        eta0 = parse_header(block[params.addr_len : params.addr_len + params.header_len], params)
    except GroupDecodeError:
        return None
    return ReplyInfo(
        first_hop=block[: params.addr_len],
        eta0=eta0,
        k_tilde=block[-params.kappa :],
    )


def build_payload_forward(params, receiver: bytes, reply, message: bytes) -> bytes:
    """Innermost forward plaintext: 0_kappa | receiver | reply block | message.

    A missing reply (None) is encoded as an all-zero block of the same width,
    so repliable and non-repliable payloads are indistinguishable by length.
    """
    if len(message) > params.max_msg_len:
        raise ValueError("message too long for payload")
    assert len(receiver) == params.addr_len
    block = (
        serialize_reply_block(reply, params)
        if reply is not None
        else b"\x00" * params.reply_block_len
    )
    out = b"\x00" * params.kappa + receiver + block + _frame(message, params)
    assert len(out) == params.payload_len
    return out


def build_payload_reply(params, message: bytes) -> bytes:
    """Innermost reply plaintext: 0_kappa | zero filler | message, padded to
    the exact forward-payload width."""
    if len(message) > params.max_msg_len:
        raise ValueError("message too long for payload")
    pad = b"\x00" * (params.addr_len + params.reply_block_len)
    out = b"\x00" * params.kappa + pad + _frame(message, params)
    assert len(out) == params.payload_len
    return out


# ---------------------------------------------------------------------------
# Derivation of a complete onion from its spec

@dataclass(frozen=True)
class _Derived:
    fwd_chain: KemChain
    rep_chain: KemChain          # None when non-repliable
    fwd_headers: tuple
    rep_headers: tuple
    fwd_deltas: tuple
    rep_deltas: tuple
    ident: bytes
    k_tilde: bytes
    reply_info: ReplyInfo


def _filler(rng: SeedRng, n_bytes: int, params) -> bytes:
    if params.legacy_zero_filler:
        return b"\x00" * n_bytes
    return rng.read(n_bytes)


@functools.lru_cache(maxsize=512)
def _derive(spec: OnionSpec, params: FormatParams) -> _Derived:
    """Expand a spec's seed into both KEM chains, every header layer, and
    every payload layer.  Cached: specs are reused heavily by recognition."""
    validate_spec(spec, params)
    kappa, r = params.kappa, params.max_hops
    rng = SeedRng(spec.seed)
    n = len(spec.path)
    nr = len(spec.reply_path)

    x_fwd = params.group.random_scalar(rng.fork(b"x-forward"))
    fwd_chain = kem_chain_create(
        params.group, x_fwd, [pk for _name, pk in spec.path], kappa
    )

    rep_chain = None
    rep_headers = ()
    rep_deltas = ()
    ident = None
    k_tilde = None
    reply_info = None
    if nr:
        x_rep = params.group.random_scalar(rng.fork(b"x-reply"))
        rep_chain = kem_chain_create(
            params.group, x_rep, [pk for _name, pk in spec.reply_path], kappa
        )
        ident = rng.fork(b"ident").read(kappa)
        k_tilde = rng.fork(b"k-tilde").read(kappa)
        sender_name = spec.reply_path[-1][0]
        final = (
            encode_addr(ADDR_REPLY_RETURN, sender_name, params)
            + ident
            + _filler(rng.fork(b"reply-filler"), (2 * (r - nr) + 1) * kappa, params)
        )
        addrs = [relay_addr(name, params) for name, _pk in spec.reply_path]
        rep_headers = tuple(build_header(rep_chain, addrs, final, params))
        reply_info = ReplyInfo(
            first_hop=addrs[0],
            eta0=rep_headers[0],
            k_tilde=k_tilde,
            ident=ident,
        )
        # Reply payload layers: the exit seals under k_tilde, then every
        # reply-path relay (the sender included) peels one PRP layer.
        delta = prp_enc(k_tilde, build_payload_reply(params, spec.message), kappa)
        rep_deltas = [delta]
        for j in range(1, nr):
            rep_deltas.append(prp_dec(rep_chain.layers[j - 1].k_pi, rep_deltas[-1], kappa))
        rep_deltas = tuple(rep_deltas)

    final = exit_addr(params) + _filler(
        rng.fork(b"forward-filler"), (2 * (r - n) + 2) * kappa, params
    )
    addrs = [relay_addr(name, params) for name, _pk in spec.path]
    fwd_headers = tuple(build_header(fwd_chain, addrs, final, params))

    plaintext = build_payload_forward(params, spec.receiver, reply_info, spec.message)
    fwd_deltas = [None] * n
    delta = plaintext
    for i in range(n - 1, -1, -1):
        delta = prp_enc(fwd_chain.layers[i].k_pi, delta, kappa)
        fwd_deltas[i] = delta

    return _Derived(
        fwd_chain=fwd_chain,
        rep_chain=rep_chain,
        fwd_headers=fwd_headers,
        rep_headers=rep_headers,
        fwd_deltas=tuple(fwd_deltas),
        rep_deltas=rep_deltas,
        ident=ident,
        k_tilde=k_tilde,
        reply_info=reply_info,
    )


def form_onion(i: int, spec: OnionSpec, params: FormatParams) -> Onion:
    """The onion exactly as it arrives at hop i of its combined path.

    Layers 1..n are the forward trip; layers n+1..n+n_rep are the reply trip
    carrying the spec's own message back along the reply path.
    """
    d = _derive(spec, params)
    n, nr = len(spec.path), len(spec.reply_path)
    if not 1 <= i <= n + nr:
        raise ValueError("layer index out of range")
    if i <= n:
        return Onion(d.fwd_headers[i - 1], d.fwd_deltas[i - 1])
    return Onion(d.rep_headers[i - n - 1], d.rep_deltas[i - n - 1])


def recognize_onion(i: int, onion: Onion, spec: OnionSpec, params) -> bool:
    """Header-only comparison against the i-th layer; the payload may have
    been tampered with and is deliberately ignored."""
    expected = form_onion(i, spec, params).header
    try:
        got = serialize_header(onion.header, params)
    except (AssertionError, GroupDecodeError):
        return False
    return got == serialize_header(expected, params)


def tag_payload(onion: Onion, mask: bytes) -> Onion:
    """Adversary helper: XOR a nonzero mask into the payload only."""
    if len(mask) != len(onion.delta):
        raise ValueError("mask width must equal payload width")
    if mask == b"\x00" * len(mask):
        raise ValueError("mask must be nonzero")
    return Onion(onion.header, xor_bytes(onion.delta, mask))


# ---------------------------------------------------------------------------
# Relay-side processing

class InMemoryView:
    """Minimal replay/expectation store for tests and standalone use."""

    def __init__(self):
        self._seen = set()
        self._expectations = {}

    def check_and_add(self, header_bytes: bytes) -> bool:
        if header_bytes in self._seen:
            return False
        self._seen.add(header_bytes)
        return True

    def expect_reply(self, ident: bytes, spec: OnionSpec):
        self._expectations[ident] = spec

    def lookup_reply(self, ident: bytes):
        return self._expectations.get(ident)

    def forget_reply(self, ident: bytes):
        self._expectations.pop(ident, None)


def _peel_beta(layer, header: Header, params):
    stream = prg(layer.k_rho, params.stream_len)
    wide = xor_bytes(header.beta + b"\x00" * (2 * params.kappa), stream)
    return (
        wide[: params.kappa],
        wide[params.kappa : 2 * params.kappa],
        wide[2 * params.kappa :],
    )


def proc_onion(sk: int, onion: Onion, self_name: bytes, params, view) -> ProcResult:
    """Process one onion with this relay's private key.

    Every failure collapses to kind="fail"; the reason field exists for
    tests only and must never influence honest behavior.
    """
    kappa = params.kappa
    header, delta = onion.header, onion.delta
    if not params.group.is_element(header.alpha):
        return _fail("bad-element")
    if len(header.beta) != params.beta_len or len(delta) != params.payload_len:
        return _fail("bad-width")

    layer = kem_decap(params.group, sk, header.alpha, kappa)
    if mac(layer.k_mu, header.beta, kappa) != header.gamma:
        return _fail("mac")
    if not view.check_and_add(serialize_header(header, params)):
        return _fail("replay")

    addr, gamma_next, beta_next = _peel_beta(layer, header, params)
    delta_peeled = prp_dec(layer.k_pi, delta, kappa)
    tag, name = decode_addr(addr)

    if tag == ADDR_RELAY:
        alpha_next = kem_blind(params.group, header.alpha, layer.b)
        return ProcResult(
            kind="forward",
            next_hop=name,
            next_onion=Onion(Header(alpha_next, beta_next, gamma_next), delta_peeled),
        )

    if tag == ADDR_EXIT:
        if delta_peeled[:kappa] != b"\x00" * kappa:
            return _fail("integrity")
        receiver = delta_peeled[kappa : kappa + params.addr_len]
        block = delta_peeled[
            kappa + params.addr_len : kappa + params.addr_len + params.reply_block_len
        ]
        message = _unframe(delta_peeled[kappa + params.addr_len + params.reply_block_len :])
        if message is None:
            return _fail("integrity")
        return ProcResult(
            kind="exit",
            message=message,
            receiver=receiver,
            reply_info=parse_reply_block(block, params),
        )

    if tag == ADDR_REPLY_RETURN:
        if name != self_name:
            return _fail("misdirected")
        ident = gamma_next  # the reply final layer carries P_s | I
        espec = view.lookup_reply(ident)
        if espec is None:
            return _fail("unsolicited")
        d = _derive(espec, params)
        expected = serialize_header(d.rep_headers[-1], params)
        if serialize_header(header, params) != expected:
            return _fail("unsolicited")
        # Invert the reply-path PRP composition: our own peel above applied
        # this hop's layer, so re-encrypt hop by hop, then strip k_tilde.
        plain = delta_peeled
        for j in range(len(d.rep_chain.layers) - 1, -1, -1):
            plain = prp_enc(d.rep_chain.layers[j].k_pi, plain, kappa)
        plain = prp_dec(d.k_tilde, plain, kappa)
        if plain[:kappa] != b"\x00" * kappa:
            return _fail("integrity")
        message = _unframe(plain[kappa + params.addr_len + params.reply_block_len :])
        if message is None:
            return _fail("integrity")
        return ProcResult(kind="reply", message=message, ident=ident)

    return _fail("bad-address")


def form_reply(m_reply: bytes, onion_at_exit: Onion, exit_name: bytes, sk: int, params):
    """Build the reply onion an exit relay sends back, or None.

    Reprocesses the stored exit-layer onion (without replay checks), extracts
    the embedded ReplyInfo, seals the reply message under k_tilde, and
    attaches the pre-built reply header.  None when the forward onion was
    non-repliable or malformed.
    """

    class _NoReplayView(InMemoryView):
        def check_and_add(self, header_bytes):
            return True

    result = proc_onion(sk, onion_at_exit, exit_name, params, _NoReplayView())
    if result.kind != "exit" or result.reply_info is None:
        return None
    try:
        onion = build_reply_onion(result.reply_info, m_reply, params)
    except ValueError:
        return None
    _tag, first_hop = decode_addr(result.reply_info.first_hop)
    return onion, first_hop


def build_reply_onion(info: ReplyInfo, m_reply: bytes, params) -> Onion:
    """Seal a reply message under k_tilde and attach the stored header."""
    delta = prp_enc(info.k_tilde, build_payload_reply(params, m_reply), params.kappa)
    return Onion(info.eta0, delta)


# ---------------------------------------------------------------------------
# Wire format

def serialize_header(header: Header, params) -> bytes:
    out = params.group.encode(header.alpha) + header.beta + header.gamma
    assert len(out) == params.header_len
    return out


def parse_header(data: bytes, params) -> Header:
    if len(data) != params.header_len:
        raise GroupDecodeError("bad header width")
    alpha = params.group.decode(data[: params.group.elem_len])
    beta = data[params.group.elem_len : params.group.elem_len + params.beta_len]
    return Header(alpha=alpha, beta=beta, gamma=data[-params.kappa :])


def serialize_onion(onion: Onion, params) -> bytes:
    out = serialize_header(onion.header, params) + onion.delta
    assert len(out) == params.onion_len
    return out


def parse_onion(data: bytes, params) -> Onion:
    if len(data) != params.onion_len:
        raise GroupDecodeError("bad onion width")
    return Onion(
        header=parse_header(data[: params.header_len], params),
        delta=data[params.header_len :],
    )


# ---------------------------------------------------------------------------
# Test vectors

def onion_vector_lines(spec: OnionSpec, params: FormatParams):
    """Hex test-vector records for one spec: padding, per-layer header
    pieces, and full serialized onions for both directions."""
    d = _derive(spec, params)
    lines = []
    for i in range(len(spec.path) + 1):
        lines.append("phi_%d,%s" % (i, build_padding(d.fwd_chain, i, params).hex()))
    for i, header in enumerate(d.fwd_headers):
        lines.append("beta_%d,%s" % (i, header.beta.hex()))
        lines.append("gamma_%d,%s" % (i, header.gamma.hex()))
    for i in range(1, len(spec.path) + len(spec.reply_path) + 1):
        kind = "onion" if i <= len(spec.path) else "reply_onion"
        lines.append(
            "%s_%d,%s" % (kind, i, serialize_onion(form_onion(i, spec, params), params).hex())
        )
    return lines


def write_vector_file(path, lines):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vector_file(path):
    with open(path, encoding="ascii") as fh:
        return [line.strip() for line in fh if line.strip()]


def check_onion_vectors(path, spec, params) -> bool:
    """True iff the file's records match a fresh derivation of the spec."""
    return read_vector_file(path) == onion_vector_lines(spec, params)
