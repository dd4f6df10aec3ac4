#include "experiments/plots.hpp"

namespace jpose::cli {

namespace {

constexpr const char* kPrelude = R"py(#!/usr/bin/env python3
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f))


def number(text):
    return float("nan") if text == "NA" else float(text)

)py";

}  // namespace

std::string compose_sweep_plot_script() {
  return std::string(kPrelude) + R"py(
data = rows("compose_sweep.csv")
sweeps = []
for r in data:
    if r["sweep_var"] not in sweeps:
        sweeps.append(r["sweep_var"])
labels = {"steps": "number of poses N", "sigma_r": "rotation noise scale", "sigma_t": "translation noise scale"}
fig, axes = plt.subplots(1, len(sweeps), figsize=(5 * len(sweeps), 4), squeeze=False)
for ax, sweep in zip(axes[0], sweeps):
    methods = []
    for r in data:
        if r["sweep_var"] == sweep and r["method"] not in methods:
            methods.append(r["method"])
    for method in methods:
        pts = [(number(r["value"]), 100 * number(r["containment"]))
               for r in data if r["sweep_var"] == sweep and r["method"] == method]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel(labels.get(sweep, sweep))
    ax.set_ylabel("samples inside ellipsoid [%]")
    ax.grid(True)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "compose_sweep.png"), dpi=150)
)py";
}

std::string relpose_alpha_plot_script() {
  return std::string(kPrelude) + R"py(
data = rows("relpose_alpha_sweep.csv")
fig, ax = plt.subplots(figsize=(5, 4))
for method in ["lie-correlated", "lie-independent"]:
    pts = [(number(r["alpha"]), number(r["cov_error"])) for r in data if r["method"] == method]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
ax.set_xlabel("alpha")
ax.set_ylabel("covariance error")
ax.grid(True)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "relpose_alpha_sweep.png"), dpi=150)
)py";
}

std::string slam_relpose_plot_script() {
  return std::string(kPrelude) + R"py(
data = [r for r in rows("slam_relpose.csv") if r["status"] == "ok"]
methods = []
for r in data:
    if r["method"] not in methods:
        methods.append(r["method"])
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, metric in zip(axes, ["cov_error", "normalized_cov_error"]):
    ax.boxplot([[number(r[metric]) for r in data if r["method"] == m] for m in methods])
    ax.set_xticks(range(1, len(methods) + 1), methods)
    ax.set_yscale("log")
    ax.set_ylabel(metric)
    ax.grid(True)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "slam_relpose.png"), dpi=150)

for r in rows("slam_relpose_summary.csv"):
    if r["offset"] == "all":
        print("{:16s} {:22s} {} +- {} (std dev {}, n = {})".format(
            r["method"], r["metric"], r["mean"], r["std_error"], r["std_dev"], r["count"]))
)py";
}

std::string convert_demo_plot_script() {
  return std::string(kPrelude) + R"py(
data = rows("convert_demo_loci.csv")
colors = {"true": "tab:pink", "ssc": "tab:red", "converted": "tab:green"}
fig, ax = plt.subplots(figsize=(6, 6))
for name, color in colors.items():
    rings = {}
    for r in data:
        if r["representation"] == name:
            rings.setdefault(int(r["ring"]), []).append((number(r["x"]), number(r["y"])))
    for i, pts in sorted(rings.items()):
        pts = pts + pts[:1]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], color=color, linewidth=0.8,
                label=name if i == 0 else None)
ax.set_aspect("equal")
ax.set_xlabel("x")
ax.set_ylabel("y")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "convert_demo.png"), dpi=150)

for r in rows("convert_demo_containment.csv"):
    print("{:10s} {} of {} inside ({})".format(r["representation"], r["contained"], r["total"], r["fraction"]))
)py";
}

}  // namespace jpose::cli
