"""Builds a 60-meeting, 7-agent transcript set whose aggregates hit fixed
target counts, plus a one-round set for the belief-free variant.

Targets (label order Raise, Hold, Lower):
  * per-belief label counts before and after debate
  * before x after transition counts
  * confusion of the final vote and of the round-0 vote against true labels
  * belief-free round-0 label totals and vote confusion

Usage: python3 reconstruct.py  (writes the JSONL files next to this script)
"""
import itertools
import json
import math
import os
import random

R, H, L = 0, 1, 2
NAMES = ["Raise", "Hold", "Lower"]
BELIEFS = ["StrongHawkish", "ModeratelyHawkish", "Neutral", "ModeratelyDovish", "StrongDovish"]
ROSTER = [0, 1, 2, 2, 2, 3, 4]  # belief index per agent slot
AFTER = [[30, 29, 1], [28, 32, 0], [31, 136, 13], [3, 53, 4], [4, 46, 10]]
BEFORE = [[33, 22, 5], [27, 27, 6], [45, 117, 18], [15, 36, 9], [15, 32, 13]]
TRANSITION = [[80, 55, 0], [16, 217, 1], [0, 24, 27]]  # rows before, cols after
FINAL_CM = [[7, 8, 0], [8, 20, 2], [0, 11, 4]]  # rows truth, cols predicted
# Only macro scores are known for the round-0 vote and the belief-free run;
# these are matrices with 15/30/15 rows that round to those scores.
INITIAL_CM = [[6, 9, 0], [7, 22, 1], [0, 13, 2]]
FREE_TOTALS = [111, 280, 29]
FREE_CM = [[7, 8, 0], [10, 19, 1], [1, 12, 2]]
TIE_ORDER = [H, R, L]
N_MEETINGS = 60
LAST_ROUND = 10
STEPS = int(os.environ.get("RECONSTRUCT_STEPS", "400000"))


def vote(labels):
    counts = [labels.count(k) for k in range(3)]
    best = max(counts)
    return next(k for k in TIE_ORDER if counts[k] == best)


def belief_transitions(rng):
    """Per-belief 3x3 transition tables with the belief's margins that add
    up to TRANSITION."""
    def tables(before, after):
        cap = TRANSITION
        out = []
        for a in range(min(before[0], cap[0][0]) + 1):
            for b in range(min(before[0] - a, cap[0][1]) + 1):
                c = before[0] - a - b
                if c > cap[0][2]:
                    continue
                for d in range(min(before[1], cap[1][0], after[0] - a) + 1):
                    for e in range(min(before[1] - d, cap[1][1], after[1] - b) + 1):
                        f = before[1] - d - e
                        g, h, i = after[0] - a - d, after[1] - b - e, after[2] - c - f
                        if min(f, g, h, i) < 0 or g + h + i != before[2]:
                            continue
                        t = [[a, b, c], [d, e, f], [g, h, i]]
                        if all(t[x][y] <= cap[x][y] for x in range(3) for y in range(3)):
                            out.append(t)
        return out

    options = [tables(BEFORE[b], AFTER[b]) for b in range(5)]
    for o in options:
        rng.shuffle(o)

    # meet in the middle: index Neutral x StrongDovish sums, then scan the rest
    def flat(*ts):
        return tuple(sum(t[x][y] for t in ts) for x in range(3) for y in range(3))

    right = {}
    for tn in options[2]:
        for ts in options[4]:
            right.setdefault(flat(tn, ts), (tn, ts))
    target = flat(TRANSITION)
    for t0 in options[0]:
        for t1 in options[1]:
            for t3 in options[3]:
                s = flat(t0, t1, t3)
                need = tuple(target[k] - s[k] for k in range(9))
                hit = right.get(need)
                if hit is not None:
                    return [t0, t1, hit[0], t3, hit[1]]
    raise AssertionError("no consistent per-belief transitions")


def anneal(state_init, energy, moves, rng, steps, t0=2.0):
    state = state_init
    e = energy(state)
    for step in range(steps):
        if e == 0:
            break
        temp = t0 * (1 - step / steps) + 1e-3
        undo = rng.choice(moves)(state)
        e2 = energy(state)
        if e2 <= e or rng.random() < math.exp((e - e2) / temp):
            e = e2
        else:
            undo()
    return state, e


def deficit(labels, want):
    """How many single-vote changes stand between `labels` and a plurality
    for `want` under TIE_ORDER."""
    counts = [labels.count(k) for k in range(3)]
    rank = {k: i for i, k in enumerate(TIE_ORDER)}
    d = 0
    for k in range(3):
        if k != want:
            need = counts[k] - counts[want] + (1 if rank[k] < rank[want] else 0)
            d += max(0, need)
    return d


def targets(cm, truth, rng):
    """Per-meeting predictions reproducing `cm` against `truth`."""
    out = [None] * len(truth)
    for t in range(3):
        preds = [p for p in range(3) for _ in range(cm[t][p])]
        rng.shuffle(preds)
        for m in (m for m in range(len(truth)) if truth[m] == t):
            out[m] = preds.pop()
    return out


def reconstruct(seed):
    rng = random.Random(seed)
    tables = belief_transitions(rng)
    pools = []
    for b in range(5):
        pool = [(x, y) for x in range(3) for y in range(3) for _ in range(tables[b][x][y])]
        rng.shuffle(pool)
        pools.append(pool)
    # slots[m][s] = (before, after)
    slots = [[None] * 7 for _ in range(N_MEETINGS)]
    cursor = [0] * 5
    for m in range(N_MEETINGS):
        for s, b in enumerate(ROSTER):
            slots[m][s] = pools[b][cursor[b]]
            cursor[b] += 1
    truth = [R] * 15 + [H] * 30 + [L] * 15
    rng.shuffle(truth)
    state = {
        "slots": slots,
        "truth": truth,
        "init": targets(INITIAL_CM, truth, rng),
        "final": targets(FINAL_CM, truth, rng),
    }
    by_belief = {b: [s for s, x in enumerate(ROSTER) if x == b] for b in range(5)}
    by_truth = {t: [m for m in range(N_MEETINGS) if truth[m] == t] for t in range(3)}

    def contribution(st, m):
        before = [p[0] for p in st["slots"][m]]
        after = [p[1] for p in st["slots"][m]]
        bad = 4 if len(set(before)) == 1 and before != after else 0
        return deficit(before, st["init"][m]) + deficit(after, st["final"][m]) + bad

    contrib = [contribution(state, m) for m in range(N_MEETINGS)]
    total = [sum(contrib)]
    touched = set()

    def energy(st):
        for m in touched:
            c = contribution(st, m)
            total[0] += c - contrib[m]
            contrib[m] = c
        touched.clear()
        return total[0]

    def swap_pairs(st):
        b = rng.randrange(5)
        m1, m2 = rng.randrange(N_MEETINGS), rng.randrange(N_MEETINGS)
        s1, s2 = rng.choice(by_belief[b]), rng.choice(by_belief[b])
        sl = st["slots"]
        sl[m1][s1], sl[m2][s2] = sl[m2][s2], sl[m1][s1]
        touched.update((m1, m2))

        def undo():
            sl[m1][s1], sl[m2][s2] = sl[m2][s2], sl[m1][s1]
            touched.update((m1, m2))
        return undo

    def swap_target(st):
        # exchanging a target between two meetings with the same truth keeps
        # both confusion matrices
        key = rng.choice(("init", "final"))
        m1, m2 = rng.sample(by_truth[rng.randrange(3)], 2)
        v = st[key]
        v[m1], v[m2] = v[m2], v[m1]
        touched.update((m1, m2))

        def undo():
            v[m1], v[m2] = v[m2], v[m1]
            touched.update((m1, m2))
        return undo

    state, e = anneal(state, energy, [swap_pairs, swap_pairs, swap_target], rng, STEPS)
    return state, e


def reconstruct_free(truth, seed):
    rng = random.Random(seed)
    pool = [k for k in range(3) for _ in range(FREE_TOTALS[k])]
    rng.shuffle(pool)
    state = {"labels": [pool[7 * m:7 * m + 7] for m in range(N_MEETINGS)], "want": targets(FREE_CM, truth, rng)}
    by_truth = {t: [m for m in range(N_MEETINGS) if truth[m] == t] for t in range(3)}

    def energy(st):
        return sum(deficit(st["labels"][m], st["want"][m]) for m in range(N_MEETINGS))

    def swap(st):
        m1, m2 = rng.randrange(N_MEETINGS), rng.randrange(N_MEETINGS)
        s1, s2 = rng.randrange(7), rng.randrange(7)
        lab = st["labels"]
        lab[m1][s1], lab[m2][s2] = lab[m2][s2], lab[m1][s1]

        def undo():
            lab[m1][s1], lab[m2][s2] = lab[m2][s2], lab[m1][s1]
        return undo

    def swap_want(st):
        m1, m2 = rng.sample(by_truth[rng.randrange(3)], 2)
        w = st["want"]
        w[m1], w[m2] = w[m2], w[m1]

        def undo():
            w[m1], w[m2] = w[m2], w[m1]
        return undo

    return anneal(state, energy, [swap, swap, swap_want], rng, 200_000)


def record(mid, rnd, slot, label):
    return {
        "meeting_id": mid,
        "round": rnd,
        "agent_index": slot + 1,
        "belief_name": BELIEFS[ROSTER[slot]],
        "label": NAMES[label],
        "justification": "fixture",
        "prompt_hash": "",
        "timestamp": "1970-01-01T00:00:00Z",
    }


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    for seed in itertools.count(1):
        state, e = reconstruct(seed)
        if e == 0:
            break
        print(f"seed {seed}: residual {e}, retrying")
    free, fe = reconstruct_free(state["truth"], seed)
    assert fe == 0, f"belief-free residual {fe}"

    ids = [f"m{m + 1:02d}" for m in range(N_MEETINGS)]
    with open(os.path.join(here, "truths.jsonl"), "w") as f:
        for mid, t in zip(ids, state["truth"]):
            f.write(json.dumps({"meeting_id": mid, "true_label": NAMES[t]}) + "\n")
    with open(os.path.join(here, "transcript.jsonl"), "w") as f:
        for mid, pairs in zip(ids, state["slots"]):
            before = [p[0] for p in pairs]
            after = [p[1] for p in pairs]
            if len(set(before)) == 1:
                rounds = [before]
            elif len(set(after)) == 1:
                rounds = [before, after]
            else:
                rounds = [before] + [after] * LAST_ROUND
            for rnd, labels in enumerate(rounds):
                for slot, label in enumerate(labels):
                    f.write(json.dumps(record(mid, rnd, slot, label)) + "\n")
    with open(os.path.join(here, "no_belief_transcript.jsonl"), "w") as f:
        for mid, labels in zip(ids, free["labels"]):
            for slot, label in enumerate(labels):
                f.write(json.dumps(record(mid, 0, slot, label)) + "\n")
    print(f"written with seed {seed}")


if __name__ == "__main__":
    main()
