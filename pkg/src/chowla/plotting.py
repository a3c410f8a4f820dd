"""Optional matplotlib rendering for the report subcommands.

Figures are an opt-in extra next to the delimited output (--figure PATH);
nothing here runs unless asked for.  The Agg backend keeps this headless.
"""

from __future__ import annotations

import math

__all__ = ["render_count", "render_model_tail", "render_moments", "render_tail"]

_SAVEFIG_KW = {"dpi": 130, "metadata": {"Software": "chowla"}}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_tail(report, path: str) -> None:
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.6), sharey=True)
    taus = report.tau_grid
    for ax, emp, mod, sad, title in (
        (axes[0], report.empirical_upper, report.model_phi, report.saddle_phi, "upper tail  P(L > e^g t)"),
        (axes[1], report.empirical_lower, report.model_psi, report.saddle_psi, "lower tail  P(L < z(2)/(e^g t))"),
    ):
        ax.semilogy(taus, emp, "o-", label="family")
        ax.semilogy(taus, mod, "s--", label="model")
        ax.semilogy(taus, sad, ":", color="gray", label="saddle (raw)")
        ax.set_xlabel("tau")
        ax.set_title(title, fontsize=10)
        ax.legend(fontsize=8)
    axes[0].set_ylabel("probability")
    fig.suptitle(f"tails over the family up to x = {report.x:g} ({report.n_discriminants} fields)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def render_count(report, path: str) -> None:
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.6))
    hs = sorted(report.histogram)
    axes[0].bar(hs, [report.histogram[h] for h in hs], width=1.0)
    axes[0].set_xlabel("h")
    axes[0].set_ylabel("count")
    axes[0].set_title(f"F(h), {report.normalization} normalization", fontsize=10)
    cum = []
    running = 0
    for h in range(1, report.H + 1):
        running += report.histogram.get(h, 0)
        cum.append(running)
    axes[1].plot(range(1, report.H + 1), cum, label="sum of F(h)")
    g = 0.915965594177219
    axes[1].plot(
        range(2, report.H + 1),
        [h * math.log(h) / (2 * g) for h in range(2, report.H + 1)],
        "--",
        label="H log H / 2G",
    )
    axes[1].set_xlabel("H")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def render_moments(rows: list[dict], path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    labels = [r["z_label"] for r in rows]
    rel = [r["rel_diff"] for r in rows]
    ax.bar(range(len(rows)), rel)
    ax.set_xticks(range(len(rows)), labels)
    ax.set_ylabel("|M_x(z) - E L^z| / |E L^z|")
    ax.axhline(0.02, color="red", ls="--", lw=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def render_model_tail(rows: list[dict], path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    taus = [r["tau"] for r in rows]
    ax.semilogy(taus, [r["empirical_phi"] for r in rows], "o-", label="Monte Carlo")
    ax.semilogy(taus, [r["model_phi"] for r in rows], "s--", label="saddle")
    ax.set_xlabel("tau")
    ax.set_ylabel("P(L > e^gamma tau)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
