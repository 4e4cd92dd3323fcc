#!/usr/bin/env python3
"""Render training-curve and sweep figures from asgan CSV outputs.

Usage:
  python3 scripts/plot_metrics.py run <run_dir> [out.png]
      Training curves (distribution distance, coverage, gradient L1 norm,
      discriminator confidence on clean vs perturbed reals) for every
      seed_*/metrics.csv under the run directory.

  python3 scripts/plot_metrics.py sweep <sweep_dir> [out.png]
      Best and last-k distribution distance per axis value from sweep.csv.

Only needs matplotlib; runs anywhere, independent of the Rust toolchain.
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return rows


def fnum(v):
    return float(v) if v not in ("", None) else float("nan")


def plot_run(run_dir: Path, out: Path):
    seed_dirs = sorted(run_dir.glob("seed_*/metrics.csv"))
    if not seed_dirs:
        sys.exit(f"no seed_*/metrics.csv under {run_dir}")
    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    for mpath in seed_dirs:
        rows = read_csv(mpath)
        it = [fnum(r["iter"]) for r in rows]
        label = mpath.parent.name
        axes[0, 0].plot(it, [fnum(r["mmd2"]) for r in rows], label=label)
        axes[0, 1].plot(it, [fnum(r["mode_coverage"]) for r in rows], label=label)
        axes[1, 0].plot(it, [fnum(r["grad_l1_mean"]) for r in rows], label=label)
        axes[1, 1].plot(it, [fnum(r["mean_d_real"]) for r in rows], label=f"{label} D(x)")
        axes[1, 1].plot(
            it,
            [fnum(r["mean_d_adv"]) for r in rows],
            linestyle="--",
            label=f"{label} D(x̂)",
        )
    axes[0, 0].set_title("MMD² (real vs generated)")
    axes[0, 0].set_yscale("log")
    axes[0, 1].set_title("mode coverage")
    axes[1, 0].set_title("‖∇ₓ log D‖₁ on real data")
    axes[1, 0].set_yscale("log")
    axes[1, 1].set_title("discriminator confidence, clean vs perturbed")
    for ax in axes.flat:
        ax.set_xlabel("iteration")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


def plot_sweep(sweep_dir: Path, out: Path):
    rows = read_csv(sweep_dir / "sweep.csv")
    if not rows:
        sys.exit(f"empty sweep.csv under {sweep_dir}")
    values = [r["value"] for r in rows]
    x = range(len(values))
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    axes[0].bar(x, [fnum(r["median_best_mmd2"]) for r in rows])
    axes[0].set_title("best MMD² (median over seeds)")
    axes[1].bar(x, [fnum(r["median_last_k_mmd2"]) for r in rows])
    axes[1].set_title("mean-of-last-k MMD² (median over seeds)")
    for ax in axes:
        ax.set_xticks(list(x))
        ax.set_xticklabels(values, rotation=30)
        ax.set_xlabel(rows[0]["axis"])
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


def main():
    if len(sys.argv) < 3 or sys.argv[1] not in ("run", "sweep"):
        sys.exit(__doc__)
    target = Path(sys.argv[2])
    out = Path(sys.argv[3]) if len(sys.argv) > 3 else target / f"{sys.argv[1]}_plot.png"
    if sys.argv[1] == "run":
        plot_run(target, out)
    else:
        plot_sweep(target, out)


if __name__ == "__main__":
    main()
