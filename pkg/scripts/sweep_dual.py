"""Dual-infeed rating sweep: CgSCR and BgSCR per rating ratio, as CSV.

Varies the second converter's rating relative to the first, re-tunes the
sources, and redoes both impedance-scale searches at every ratio.  The
point of the experiment is dispersion: how flat the two indices stay as
the infeed mix changes.
"""

import argparse
import sys

from gridstrength.boundary import sweep_dual_infeed
from gridstrength.casefile import load_bundled_case, load_case


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("case", nargs="?", default="",
                    help="two-converter case file (default: bundled dual case)")
    ap.add_argument("--ratios", default="0.25,0.5,1,2,4",
                    help="comma-separated rating ratios")
    ap.add_argument("--agg", default="mean", choices=("mean", "max", "first"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="", help="write CSV here instead of stdout")
    args = ap.parse_args(argv)

    case = load_case(args.case) if args.case else load_bundled_case("dual")
    ratios = [float(tok) for tok in args.ratios.split(",") if tok.strip()]
    table = sweep_dual_infeed(case, ratios, aggregation=args.agg, jobs=args.jobs)

    lines = ["ratio,CgSCR,BgSCR"]
    lines += [f"{r.ratio:.6g},{r.cgscr:.6g},{r.bgscr:.6g}" for r in table]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    cg = [r.cgscr for r in table]
    bg = [r.bgscr for r in table]
    for name, vals in (("CgSCR", cg), ("BgSCR", bg)):
        mean = sum(vals) / len(vals)
        spread = 100.0 * (max(vals) - min(vals)) / mean
        print(f"# {name}: mean {mean:.4f}, spread {spread:.2f}%", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
