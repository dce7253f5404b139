import pytest

from rsor.crypto import SeedRng, ro_hb, ro_hsym
from rsor.group import PROD_GROUP, TOY_GROUP
from rsor.kem import (
    GuessingKemAdversary,
    WhiteBoxKemAdversary,
    kem_blind,
    kem_chain_create,
    kem_decap,
    kem_game_run,
    kem_keygen,
)

KAPPA = 16


def test_toy_kem_values():
    kp = kem_keygen(TOY_GROUP, SeedRng(b"fix"))
    # Whatever scalar the seed gives, pk must be g^sk.
    assert kp.pk == TOY_GROUP.exp(TOY_GROUP.g, kp.sk)
    # Hand-checked values in Z_11: sk=2 -> pk=3^2=9; s = 9^2 = 4.
    assert TOY_GROUP.exp(TOY_GROUP.g, 2) == 9
    assert TOY_GROUP.exp(9, 2) == 4
    assert kem_blind(TOY_GROUP, 9, 3) == 3  # 9^3 mod 11


def test_chain_matches_decap():
    # Sender-side chains and relay-side decapsulation agree at every hop,
    # including the blinded alpha handoff between hops.
    rng = SeedRng(b"chain-test")
    for trial in range(50):
        trng = rng.fork(b"t%d" % trial)
        n = 1 + trng.read(1)[0] % 5
        keypairs = [kem_keygen(PROD_GROUP, trng.fork(b"k%d" % i)) for i in range(n)]
        x = PROD_GROUP.random_scalar(trng.fork(b"x"))
        chain = kem_chain_create(PROD_GROUP, x, [kp.pk for kp in keypairs], KAPPA)
        alpha = chain.layers[0].alpha
        for i, keypair in enumerate(keypairs):
            layer = kem_decap(PROD_GROUP, keypair.sk, alpha, KAPPA)
            assert layer == chain.layers[i]
            alpha = kem_blind(PROD_GROUP, alpha, layer.b)


def test_chain_keys_distinct_across_hops():
    rng = SeedRng(b"distinct")
    keypairs = [kem_keygen(PROD_GROUP, rng.fork(b"k%d" % i)) for i in range(5)]
    chain = kem_chain_create(
        PROD_GROUP, PROD_GROUP.random_scalar(rng.fork(b"x")),
        [kp.pk for kp in keypairs], KAPPA,
    )
    assert len({layer.k_rho for layer in chain.layers}) == 5
    assert len({layer.alpha for layer in chain.layers}) == 5


def test_chain_rejects_empty_and_bad_keys():
    with pytest.raises(ValueError):
        kem_chain_create(PROD_GROUP, 5, [], KAPPA)
    with pytest.raises(AssertionError):
        kem_chain_create(PROD_GROUP, 5, [0], KAPPA)


def test_layer_keys_from_oracles():
    kp = kem_keygen(PROD_GROUP, SeedRng(b"lk"))
    x = PROD_GROUP.random_scalar(SeedRng(b"lx"))
    chain = kem_chain_create(PROD_GROUP, x, [kp.pk], KAPPA)
    layer = chain.layers[0]
    assert layer.k_rho == ro_hsym("rho", PROD_GROUP, layer.s, KAPPA)
    assert layer.k_mu == ro_hsym("mu", PROD_GROUP, layer.s, KAPPA)
    assert layer.k_pi == ro_hsym("pi", PROD_GROUP, layer.s, KAPPA)
    assert layer.b == ro_hb(PROD_GROUP, layer.alpha, layer.s)


def test_game_white_box_always_wins():
    rng = SeedRng(b"wb")
    for trial in range(50):
        adversary = WhiteBoxKemAdversary(rng.fork(b"a%d" % trial))
        result = kem_game_run(
            adversary, PROD_GROUP, KAPPA, rng.fork(b"g%d" % trial),
            reveal_secret=True,
        )
        assert result["adversary_won"]


def test_game_guessing_near_half():
    rng = SeedRng(b"guess")
    games = 400
    wins = 0
    for trial in range(games):
        adversary = GuessingKemAdversary(rng.fork(b"a%d" % trial))
        result = kem_game_run(adversary, PROD_GROUP, KAPPA, rng.fork(b"g%d" % trial))
        wins += result["adversary_won"]
    assert abs(wins / games - 0.5) < 0.07


def test_game_transcript_shape_is_bit_independent():
    rng = SeedRng(b"shape")
    shapes = set()
    for trial in range(20):
        adversary = GuessingKemAdversary(rng.fork(b"a%d" % trial))
        result = kem_game_run(adversary, PROD_GROUP, KAPPA, rng.fork(b"g%d" % trial))
        shapes.add(tuple(result["transcript"]))
    assert len(shapes) == 1


def test_game_decap_refuses_challenge():
    class ProbingAdversary(GuessingKemAdversary):
        def on_challenge(self, alpha0, pre, challenge, post):
            self.refused = self._oracles.decap(challenge[0]) is None
            self.answered = self._oracles.decap(alpha0) is not None

        def begin(self, group, kappa, pk, oracles):
            super().begin(group, kappa, pk, oracles)
            self._oracles = oracles

    adversary = ProbingAdversary(SeedRng(b"probe"), n=3, j=1)
    kem_game_run(adversary, PROD_GROUP, KAPPA, SeedRng(b"probe-game"))
    assert adversary.refused
    assert adversary.answered


def test_game_rejects_bad_submissions():
    class BadJ(GuessingKemAdversary):
        def submit(self):
            j, pubkeys = super().submit()
            return len(pubkeys), pubkeys  # out of range

    with pytest.raises(ValueError):
        kem_game_run(BadJ(SeedRng(b"bj")), PROD_GROUP, KAPPA, SeedRng(b"bjg"))

    class BadKey(GuessingKemAdversary):
        def submit(self):
            j, pubkeys = super().submit()
            pubkeys[0] = 0
            return j, pubkeys

    with pytest.raises(ValueError):
        kem_game_run(BadKey(SeedRng(b"bk")), PROD_GROUP, KAPPA, SeedRng(b"bkg"))
