"""Optional figure rendering for the sweep commands.

Each renderer takes the rows a figure command produced and writes one PNG
next to the CSV.  Rendering is opt-in (``--plot``); the CSV stays the
primary, bit-reproducible artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fig3(rows: list[dict], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    alphas = [r["alpha"] for r in rows]
    ax.plot(alphas, [r["eps2_analytic"] for r in rows], "-", color="tab:blue",
            label="receiver error (analytic)")
    ax.plot(alphas, [r["delta2_analytic"] for r in rows], "-", color="tab:red",
            label="listener error (analytic)")
    ax.plot(alphas, [r["eps2_mc"] for r in rows], "o", mfc="none", color="tab:blue",
            label="receiver error (simulated)")
    ax.plot(alphas, [r["delta2_mc"] for r in rows], "o", color="tab:red",
            label="listener error (simulated)")
    ax.set_xlabel("local noise rate alpha (= beta)")
    ax.set_ylabel("virtual channel error, N = 2")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_fig4(rows: list[dict], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    taus = [r["tau"] for r in rows]
    errs = [max(r["measured_std"], r["sigma"]) for r in rows]
    ax.errorbar(taus, [r["measured_ptotal"] for r in rows], yerr=errs,
                fmt="o", capsize=3, color="tab:blue", label="measured acceptance")
    ax.axhline(rows[0]["expected_ptotal"], color="tab:gray", lw=1,
               label="untampered expectation")
    ax.set_xlabel("tamper rate tau")
    ax.set_ylabel("first-exchange acceptance fraction")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_fig5(rows: list[dict], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    clean = [r for r in rows if not r["alarm"]]
    alarmed = [r for r in rows if r["alarm"]]
    ax.plot([r["tau"] for r in clean], [r["key_rate"] for r in clean],
            "o-", color="tab:green", label="key rate")
    if alarmed:
        ax.plot([r["tau"] for r in alarmed], [r["key_rate"] for r in alarmed],
                "x", color="tab:red", label="alarm raised (no key emitted)")
    ax.set_xlabel("tamper rate tau")
    ax.set_ylabel("final key rate")
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
