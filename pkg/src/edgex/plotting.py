"""Figures rendered next to the CSV output of ``edgex report``."""
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_META = {"Software": None}


def growth_figure(curve: dict, path):
    """Observed and expected vertex/edge counts against t on log-log axes."""
    t = np.asarray(curve["grid"])
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for key, label, color in (("v", "vertices", "tab:blue"), ("e", "edges", "tab:orange")):
        exp = np.asarray(curve[f"{key}_expected"])
        obs = np.asarray(curve[f"{key}_observed_mean"])
        se = np.asarray(curve[f"{key}_observed_se"])
        ax.plot(t, exp, color=color, label=f"{label}, expected")
        ax.errorbar(t, obs, yerr=2 * se, fmt="o", ms=4, color=color, label=f"{label}, observed")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("count")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def tail_figure(tails, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for tl in tails:
        k = np.asarray(tl["k"])
        p = np.asarray(tl["pi_ge_k"])
        keep = p > 0
        ax.loglog(k[keep], p[keep], drawstyle="steps-post", label=f"t = {tl['t']:.3g}")
    if tails:
        kmax = max(max(tl["k"]) for tl in tails)
        ks = np.arange(1, kmax + 1)
        ax.loglog(ks, 1.0 / ks, "k--", lw=0.8, label="1/k")
    ax.set_xlabel("k")
    ax.set_ylabel("fraction of vertices with degree >= k")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def render_report(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = [growth_figure(report.curves["growth"], os.path.join(out_dir, "growth.png"))]
    if report.tails:
        paths.append(tail_figure(report.tails, os.path.join(out_dir, "degree_tail.png")))
    return paths
