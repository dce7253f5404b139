"""Command-line front end: rsor-sim run | attack | game."""

import argparse
import json
import sys

from . import sim
from .games import ADVERSARIES, GAMES, game_correctness, run_game_batch
from .group import PROD_GROUP
from .packet import FormatParams


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rsor-sim",
        description="Deterministic simulator and game harness for the "
        "repliable service onion routing packet format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named or configured scenario")
    run.add_argument("--scenario", default="baseline",
                     help="built-in scenario name (%s)" % ", ".join(sorted(sim.SCENARIOS)))
    run.add_argument("--config", help="key-value scenario description file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--legacy-zero-padding", action="store_true")
    run.add_argument("--legacy-nymserver", action="store_true")
    run.add_argument("--out", help="write the trace as JSON lines to this file")

    attack = sub.add_parser("attack", help="reproduce a deployed-format attack")
    attack.add_argument("name", choices=("tagging", "nymserver", "padding"))
    attack.add_argument("--trials", type=int, default=50)
    attack.add_argument("--seed", type=int, default=0)

    game = sub.add_parser("game", help="run an onion-security game batch")
    game.add_argument("name", choices=sorted(GAMES))
    game.add_argument("--adversary", default="guessing",
                      help="adversary name (%s)" % ", ".join(sorted(ADVERSARIES)))
    game.add_argument("--games", type=int, default=200)
    game.add_argument("--seed", type=int, default=0)
    game.add_argument("--legacy-zero-padding", action="store_true")
    return parser


def _cmd_run(args):
    if args.config:
        with open(args.config) as handle:
            scenario = sim.parse_config(handle.read())
    else:
        if args.scenario not in sim.SCENARIOS:
            print("unknown scenario: %s" % args.scenario, file=sys.stderr)
            return 2
        scenario = sim.SCENARIOS[args.scenario]()
    import dataclasses
    scenario = dataclasses.replace(
        scenario,
        seed=args.seed,
        legacy_zero_padding=args.legacy_zero_padding or scenario.legacy_zero_padding,
        legacy_nymserver=args.legacy_nymserver or scenario.legacy_nymserver,
    )
    trace = sim.run_scenario(scenario)
    if args.out:
        sim.write_trace(args.out, trace)
        print("wrote %d events to %s" % (len(trace), args.out))
    else:
        for event in trace:
            print(json.dumps(event, sort_keys=True))
    findings = sim.check_usage_conditions(scenario)
    for finding in findings:
        print("usage-warning: %s" % finding, file=sys.stderr)
    return 0


def _cmd_attack(args):
    runner = {
        "tagging": sim.attack_tagging,
        "nymserver": sim.attack_nymserver,
        "padding": sim.attack_padding,
    }[args.name]
    summary = runner(trials=args.trials, seed=args.seed)
    width = max(len(k) for k in summary)
    for key in sorted(summary):
        print("%-*s  %s" % (width, key, summary[key]))
    return 0


def _cmd_game(args):
    params = FormatParams(group=PROD_GROUP,
                          legacy_zero_filler=args.legacy_zero_padding)
    if args.name == "correctness":
        result = game_correctness(args.games, args.seed, params=params)
        print("correctness trials=%d pass=%s" % (result["trials"], result["pass"]))
        for failure in result["failures"]:
            print("failure: %r" % (failure,))
        return 0 if result["pass"] else 1
    if args.adversary not in ADVERSARIES:
        print("unknown adversary: %s" % args.adversary, file=sys.stderr)
        return 2
    if args.name not in ADVERSARIES[args.adversary][1]:
        print("adversary %s is not registered for game %s"
              % (args.adversary, args.name), file=sys.stderr)
        return 2
    result = run_game_batch(args.name, args.adversary, args.games, args.seed,
                            params=params)
    print("game=%s adversary=%s games=%d wins=%d win-rate=%.4f p-value=%.4f"
          % (result["game"], result["adversary"], result["games"],
             result["wins"], result["win_rate"], result["binomial_pvalue"]))
    if result["expectation"] == "negative":
        ok = result["binomial_pvalue"] >= 0.01
        print("expected: indistinguishable from a fair coin -> %s"
              % ("pass" if ok else "FAIL"))
    else:
        ok = result["win_rate"] >= 0.95
        print("expected: win rate of at least 0.95 -> %s"
              % ("pass" if ok else "FAIL"))
    return 0 if ok else 1


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "attack": _cmd_attack, "game": _cmd_game}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
