"""Run the same scenario against the real protocol and the ideal
functionality and diff what the environment can see.

Run with: python3 demos/ideal_vs_real.py
"""

from collections import Counter

from rsor.sim import (
    baseline_scenario,
    normalize_trace,
    run_ideal_scenario,
    run_scenario,
    traces_equivalent,
)

scenario = baseline_scenario(seed=2024)
real = run_scenario(scenario)
env, adv = run_ideal_scenario(scenario)

print("scenario: %s (one repliable onion, echoed by the service)\n" % scenario.name)

print("-- real-world trace (%d events) --" % len(real))
for event in real:
    if event["kind"] == "link":
        continue
    print("  t=%2d %-9s %s" % (
        event["time"], event.get("actor", "-"), event["kind"]))

print("\n-- ideal-world environment trace (%d events) --" % len(env))
for event in env:
    print("  t=%2d %-9s %s" % (event["time"], event["actor"], event["kind"]))

print("\n-- ideal-world adversary view --")
for event in adv:
    fields = {k: v for k, v in event.items() if k not in ("kind", "time")}
    print("  %-12s %s" % (event["kind"], fields))

real_n = Counter(normalize_trace(real))
ideal_n = Counter(normalize_trace(env))
print("\nnormalized event multisets equal: %s" % traces_equivalent(real, env))
if real_n != ideal_n:
    print("real only: ", real_n - ideal_n)
    print("ideal only:", ideal_n - real_n)
else:
    for event, count in sorted(real_n.items()):
        print("  %dx %s" % (count, event))
