"""Reference corpus BLEU values for the two-pair corpus in test_metrics.cpp.

Clipped n-gram precision, closest reference length (shorter on ties),
brevity penalty exp(1 - r/c) when c < r, geometric mean of p_1..p_n.
"""
import math
from collections import Counter

CORPUS = [
    ("the cat sat on the mat", ["the cat is on the mat", "there is a cat on the mat"]),
    ("a dog runs fast", ["a dog is running fast", "the dog runs quickly"]),
]


def ngrams(words, n):
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def main():
    matched = [0] * 4
    total = [0] * 4
    c_len = 0
    r_len = 0
    for cand, refs in CORPUS:
        cw = cand.split()
        rws = [r.split() for r in refs]
        c_len += len(cw)
        r_len += min((abs(len(r) - len(cw)), len(r)) for r in rws)[1]
        for n in range(1, 5):
            cand_counts = ngrams(cw, n)
            best = Counter()
            for r in rws:
                for g, k in ngrams(r, n).items():
                    best[g] = max(best[g], k)
            matched[n - 1] += sum(min(k, best[g]) for g, k in cand_counts.items())
            total[n - 1] += sum(cand_counts.values())
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    for n in range(1, 5):
        if any(matched[k] == 0 for k in range(n)):
            print(f"bleu{n} 0")
            continue
        log_p = sum(math.log(matched[k] / total[k]) for k in range(n)) / n
        print(f"bleu{n} {bp * math.exp(log_p):.17g}")


if __name__ == "__main__":
    main()
