"""
Expected message counts
=======================

Skipping a hop saves a message but consumes two positions of the walk
budget. The expected count follows a two-term recurrence. The closed form
``expected_messages`` solves that recurrence from the wrong initial values,
so it undercounts slightly for p > 0; ``exact_expected_messages`` does not.
"""

from fedwalk.walker import exact_expected_messages, expected_messages, expected_messages_recurrence

print(f"{'p':>4} {'closed':>10} {'exact':>8} {'recurrence':>11} {'saved/walk':>11}")
for p in (0.0, 0.1, 0.2, 0.3, 0.4):
    pub, ex = expected_messages(40, p), exact_expected_messages(40, p)
    print(f"{p:>4} {pub:>10.4f} {ex:>8.4f} {expected_messages_recurrence(40, p):>11.4f} {39 - pub:>11.4f}")

# The gap is an initial-condition mismatch: at l = 3 one walk either skips (1 message) or not (2)
for p in (0.2, 1.0):
    print(f"l=3 p={p}: closed form {expected_messages(3, p):.2f}, protocol {exact_expected_messages(3, p):.2f}")
