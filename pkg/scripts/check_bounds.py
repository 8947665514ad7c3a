"""Compare the PDWSPT and ERIS bounds against exact remaining delay on small instances."""
import argparse
import random
import statistics

from lanesched.generate import random_instance
from lanesched.heuristics import eris_lower_bound, pdwspt_lower_bound
from lanesched.oracle import RemainingDelayOracle
from lanesched.search import SearchConfig, a_star


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nodes", type=int, default=200, help="expanded nodes sampled per instance")
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    gaps_p, gaps_e, violations, total = [], [], 0, 0
    for _ in range(args.instances):
        M = rng.randint(2, 4)
        inst = random_instance(rng, M, rng.randint(2, M), rng.randint(4, 8), cycle_enforced=False)
        oracle = RemainingDelayOracle(inst)
        nodes = []
        a_star(inst, SearchConfig("none", "none"), on_expand=nodes.append)
        for s in nodes[:args.nodes]:
            truth = oracle(s)
            p, e = pdwspt_lower_bound(s, inst), eris_lower_bound(s, inst)
            violations += (p > truth + 1e-6) + (e > truth + 1e-6)
            total += 1
            if truth > 0:
                gaps_p.append(p / truth)
                gaps_e.append(e / truth)
    print(f"nodes {total}, violations {violations}")
    print(f"mean bound / true remaining: PDWSPT {statistics.fmean(gaps_p):.3f}, ERIS {statistics.fmean(gaps_e):.3f}")


if __name__ == "__main__":
    main()
