#!/usr/bin/env python3
# Copyright (c) 2026 The fsbsed Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Plots the CSVs written by `fsbsed report` (convenience only)."""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_fig2(csv, out):
    df = pd.read_csv(csv)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n_sets, group in df.groupby("n_sets"):
        stats = group.groupby("n_neg")["f1"].agg(["mean", "std"]).reset_index()
        ax.errorbar(stats["n_neg"], stats["mean"], yerr=stats["std"].fillna(0),
                    marker="o", capsize=3, label=f"{n_sets} negative set(s)")
    ax.set_xlabel("negative segments per set")
    ax.set_ylabel("F1 (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_fig3(csv, out):
    df = pd.read_csv(csv)
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(df)), 4))
    x = range(len(df))
    width = 0.27
    for i, col in enumerate(["precision", "recall", "f1"]):
        ax.bar([v + (i - 1) * width for v in x], df[col], width, label=col)
    ax.set_xticks(list(x))
    ax.set_xticklabels(df["species"], rotation=45, ha="right")
    ax.set_ylabel("%")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dir", type=pathlib.Path, help="directory holding fig2.csv / fig3.csv")
    args = parser.parse_args()
    found = False
    for name, plot in (("fig2", plot_fig2), ("fig3", plot_fig3)):
        csv = args.dir / f"{name}.csv"
        if csv.exists():
            plot(csv, args.dir / f"{name}.png")
            print(f"wrote {args.dir / (name + '.png')}")
            found = True
    if not found:
        raise SystemExit(f"{args.dir}: no fig2.csv or fig3.csv")


if __name__ == "__main__":
    main()
