"""Print every spectral-flow route for the built-in families and for a seed
sweep of random smooth ones, alongside the atlas the chartwise count used."""

import argparse
from collections import Counter

from bandflow import generate, spectral_flow_routes

NAMED = [
    ("crossing", {"k": 1}),
    ("crossing", {"k": -2}),
    ("rotation", {}),
    ("truncated_shift_flow", {}),
    ("constant", {}),
    ("polarized_crossing", {}),
]


def atlas_summary(atlas):
    spans = " ".join(f"[{c.start},{c.end}]r{c.eps:g}" for c in atlas.charts)
    return f"{atlas.n_charts} charts  {spans}"


def show(label, f):
    r = spectral_flow_routes(f)
    ends = " -" if r["endpoints"] is None else f"{r['endpoints']:+d}"
    mark = "" if r["agree"] else "  ROUTES DISAGREE"
    print(f"{label:32s} chartwise {r['chartwise']:+d}  oracle {r['oracle']:+d}  "
          f"endpoints {ends}  {atlas_summary(r['atlas'])}{mark}")
    return r


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=12,
                    help="number of random families to sweep")
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--samples", type=int, default=200)
    args = ap.parse_args()

    print("built-in families")
    agree = True
    for name, params in NAMED:
        extra = "".join(f" {k}={v}" for k, v in params.items())
        r = show(f"  {name}{extra}", generate(name, **params))
        agree = agree and r["agree"]

    print(f"\nrandom smooth families, dim {args.dim}, {args.samples} samples")
    flows = Counter()
    for seed in range(args.seeds):
        f = generate("random_smooth", dim=args.dim, seed=seed,
                     samples=args.samples)
        r = show(f"  seed {seed}", f)
        agree = agree and r["agree"]
        flows[r["chartwise"]] += 1

    hist = "  ".join(f"{k:+d}: {v}" for k, v in sorted(flows.items()))
    print(f"\nflow histogram  {hist}")
    print("all routes agree" if agree else "SOME ROUTES DISAGREE")
    return 0 if agree else 1


if __name__ == "__main__":
    raise SystemExit(main())
