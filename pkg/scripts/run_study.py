"""Run one study on its desk-scale grid, write CSV and, optionally, an SVG plot.

    python scripts/run_study.py convergence --plot
    python scripts/run_study.py ratio_sweep --replications 10 --plot
    python scripts/run_study.py comparison --out-dir results
"""

import argparse
import dataclasses
from pathlib import Path

from ccsmcp import experiments


def plot_convergence(out_dir: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, profile in zip(axes, ("homogeneous", "heterogeneous")):
        rows, first = experiments.run_convergence(profile=profile)
        ts = [r.t for r in rows]
        ax.plot(ts, [r.bound for r in rows], marker="o", label="truncated bound")
        ax.axhline(rows[0].exact, color="k", lw=0.8, label="exact")
        ax.set_ylim(-0.5, 1.5)
        ax.set_title(f"{profile} (within 1e-4 at t={first})")
        ax.set_xlabel("t")
        ax.legend()
    path = out_dir / "convergence.svg"
    fig.tight_layout()
    fig.savefig(path)
    return path


def plot_ratios(rows, out_dir: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted({r.method for r in rows}):
        sel = [r for r in rows if r.method == method]
        ax.plot([r.N for r in sel], [r.feasibility_ratio for r in sel], marker="o", label=f"{method} feasible")
        ax.plot([r.N for r in sel], [r.optimality_ratio for r in sel], marker="s", ls="--", label=f"{method} optimal")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("ratio")
    ax.legend()
    path = out_dir / "ratio_sweep.svg"
    fig.tight_layout()
    fig.savefig(path)
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("study", choices=experiments.STUDIES)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--replications", type=int)
    ap.add_argument("--time-limit", type=float)
    ap.add_argument("--plot", action="store_true", help="also write an SVG (needs matplotlib)")
    args = ap.parse_args()

    spec = experiments.default_spec(args.study)
    spec = dataclasses.replace(spec, seed=args.seed)
    if args.replications:
        spec.replications = args.replications
    if args.time_limit is not None:
        spec.time_limit = args.time_limit
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = experiments.run(spec)
    csv_path = out_dir / f"{args.study}.csv"
    experiments.write_csv(rows, csv_path)
    print(experiments.format_table(rows), end="")
    print(f"wrote {csv_path}")
    if args.plot and args.study == "convergence":
        print(f"wrote {plot_convergence(out_dir)}")
    elif args.plot and args.study == "ratio_sweep":
        print(f"wrote {plot_ratios(rows, out_dir)}")


if __name__ == "__main__":
    main()
