"""Sphinx RO-KEM: the alpha blinding chain and its IND-CCA game harness.

A sender picks a secret x, sets alpha_0 = g^x, and derives for each hop i a
shared secret s_i = y_i^(x*b_0*...*b_{i-1}) together with a blinding factor
b_i = h_b(alpha_i, s_i).  Relays recover the same secrets from (alpha, sk)
alone, so the chain can be computed hop by hop without the sender's state.
"""

from dataclasses import dataclass

from .crypto import ro_hb, ro_hsym


@dataclass(frozen=True)
class KemKeyPair:
    sk: int
    pk: int


@dataclass(frozen=True)
class LayerSecrets:
    """Per-hop KEM output: the element pair plus all derived symmetric keys."""

    alpha: int
    s: int
    b: int
    k_rho: bytes
    k_mu: bytes
    k_pi: bytes


@dataclass(frozen=True)
class KemChain:
    """Sender-side view of every hop's LayerSecrets for one onion direction."""

    x: int
    layers: tuple


def kem_keygen(group, rng) -> KemKeyPair:
    """Fresh keypair (x, g^x) from the injected randomness source."""
    sk = group.random_scalar(rng)
    return KemKeyPair(sk=sk, pk=group.exp(group.g, sk))


def _layer_from_secret(group, alpha: int, s: int, kappa: int) -> LayerSecrets:
    return LayerSecrets(
        alpha=alpha,
        s=s,
        b=ro_hb(group, alpha, s),
        k_rho=ro_hsym("rho", group, s, kappa),
        k_mu=ro_hsym("mu", group, s, kappa),
        k_pi=ro_hsym("pi", group, s, kappa),
    )


def kem_chain_create(group, x: int, pubkeys, kappa: int) -> KemChain:
    """Sender-side chain of LayerSecrets for the given hop public keys."""
    if not pubkeys:
        raise ValueError("a KEM chain needs at least one hop public key")
    assert group.is_scalar(x)
    layers = []
    exponent = x
    for pk in pubkeys:
        assert group.is_element(pk), "hop public key must be a group element"
        alpha = group.exp(group.g, exponent)
        s = group.exp(pk, exponent)
        layer = _layer_from_secret(group, alpha, s, kappa)
        layers.append(layer)
        exponent = (exponent * layer.b) % group.q
    return KemChain(x=x, layers=tuple(layers))


def kem_decap(group, sk: int, alpha: int, kappa: int) -> LayerSecrets:
    """Relay-side decapsulation; agrees with the sender's layer at this hop."""
    assert group.is_element(alpha)
    s = group.exp(alpha, sk)
    return _layer_from_secret(group, alpha, s, kappa)


def kem_blind(group, alpha: int, b: int) -> int:
    """Re-randomize alpha for the next hop."""
    return group.exp(alpha, b)


def h_star(group, s: int, kappa: int) -> bytes:
    """Concatenation of the three key oracles on one shared secret."""
    return (
        ro_hsym("rho", group, s, kappa)
        + ro_hsym("mu", group, s, kappa)
        + ro_hsym("pi", group, s, kappa)
    )


class KemGameOracles:
    """Oracle front end handed to KEM-game adversaries.

    Every query is logged so the harness can check transcript-shape
    invariants; the decapsulation oracle refuses the challenge element.
    """

    def __init__(self, group, kappa, sk):
        self._group = group
        self._kappa = kappa
        self._sk = sk
        self.challenge_alpha = None
        self.decap_log = []
        self.h_log = []
        self.hb_log = []

    def decap(self, alpha):
        """(h_*(alpha^sk), h_b(alpha, alpha^sk)), refusing the challenge alpha."""
        self.decap_log.append(alpha)
        if not self._group.is_element(alpha):
            return None
        if self.challenge_alpha is not None and alpha == self.challenge_alpha:
            return None
        s = self._group.exp(alpha, self._sk)
        return h_star(self._group, s, self._kappa), ro_hb(self._group, alpha, s)

    def h_star(self, s):
        self.h_log.append(s)
        return h_star(self._group, s, self._kappa)

    def h_b(self, alpha, s):
        self.hb_log.append((alpha, s))
        return ro_hb(self._group, alpha, s)


def kem_game_run(adversary, group, kappa, rng, max_hops=5, reveal_secret=False):
    """Run the KEM indistinguishability experiment against one adversary.

    The adversary object implements begin/submit/on_challenge/guess.  With
    reveal_secret=True the challenger leaks its chain secret x' to the
    adversary after the challenge (white-box positive control).
    Returns a result dict including a transcript of (label, byte-length)
    pairs, which must be independent of the hidden bit.
    """
    keypair = kem_keygen(group, rng.fork(b"keygen"))
    oracles = KemGameOracles(group, kappa, keypair.sk)
    transcript = [("pk", group.elem_len)]

    adversary.begin(group, kappa, keypair.pk, oracles)
    j, pubkeys = adversary.submit()

    n = len(pubkeys)
    if not (0 <= j < n and n <= max_hops):
        raise ValueError("challenge position out of range")
    submitted = [pk for i, pk in enumerate(pubkeys) if i != j]
    if len(submitted) != n - 1 or any(pk is None for pk in submitted):
        raise ValueError("expected n-1 public keys around position j")
    if len(set(submitted)) != len(submitted) or any(
        not group.is_element(pk) for pk in submitted
    ):
        raise ValueError("submitted public keys must be distinct valid elements")

    ys = list(pubkeys)
    ys[j] = keypair.pk

    bit = rng.fork(b"bit").read(1)[0] & 1
    x = group.random_scalar(rng.fork(b"x"))

    # Walk the chain; the challenge layer's keys and blinding factor are
    # either honest or uniformly random depending on the hidden bit.
    exponent = x
    alpha0 = group.exp(group.g, exponent)
    pre = []
    post = []
    challenge = None
    for i in range(n):
        alpha = group.exp(group.g, exponent)
        s = group.exp(ys[i], exponent)
        if i == j:
            oracles.challenge_alpha = alpha
            if bit == 0:
                keys = h_star(group, s, kappa)
                b = ro_hb(group, alpha, s)
            else:
                keys = rng.fork(b"rkeys").read(3 * kappa)
                b = group.random_scalar(rng.fork(b"rblind"))
            challenge = (alpha, keys, b)
        else:
            keys = h_star(group, s, kappa)
            b = ro_hb(group, alpha, s)
            (pre if i < j else post).append((keys, b))
        exponent = (exponent * b) % group.q

    transcript.append(("aux", group.elem_len + sum(3 * kappa for _ in pre) + len(pre)))
    transcript.append(("challenge", group.elem_len + 3 * kappa + 1))
    transcript.append(("post", sum(3 * kappa for _ in post) + len(post)))

    adversary.on_challenge(alpha0, pre, challenge, post)
    if reveal_secret:
        adversary.on_reveal(x)
    guess = adversary.guess()
    transcript.append(("guess", 1))
    return {
        "b": bit,
        "guess": guess,
        "adversary_won": guess == bit,
        "transcript": transcript,
    }


class GuessingKemAdversary:
    """Negative control: ignores everything and flips a coin."""

    def __init__(self, rng, n=3, j=1):
        self._rng = rng
        self._n = n
        self._j = j
        self._group = None

    def begin(self, group, kappa, pk, oracles):
        self._group = group
        self._kappa = kappa

    def submit(self):
        pubkeys = []
        for i in range(self._n):
            if i == self._j:
                pubkeys.append(None)
            else:
                pubkeys.append(kem_keygen(self._group, self._rng).pk)
        return self._j, pubkeys

    def on_challenge(self, alpha0, pre, challenge, post):
        pass

    def guess(self):
        return self._rng.read(1)[0] & 1


class WhiteBoxKemAdversary(GuessingKemAdversary):
    """Positive control: told the challenger secret x', it recomputes s_j
    and compares h_*(s_j) against the challenge keys."""

    def begin(self, group, kappa, pk, oracles):
        super().begin(group, kappa, pk, oracles)
        self._pk = pk
        self._oracles = oracles

    def on_challenge(self, alpha0, pre, challenge, post):
        self._pre = pre
        self._challenge = challenge

    def on_reveal(self, x):
        exponent = x
        for _keys, b in self._pre:
            exponent = (exponent * b) % self._group.q
        s_j = self._group.exp(self._pk, exponent)
        expected = self._oracles.h_star(s_j)
        self._answer = 0 if expected == self._challenge[1] else 1

    def guess(self):
        return self._answer
