"""Figure rendering for experiment outputs.

The CSV/JSON files are the data contract; these helpers render a PNG next
to them when a run is invoked with --plot. Everything draws through the Agg
backend so headless runs work.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def plot_upc_trace(trace, scenario, path) -> None:
    """Per-user transmit power versus iteration, log scale."""
    iterations = [step.iteration for step in trace.steps]
    powers = np.vstack([step.powers for step in trace.steps])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k in range(scenario.num_users):
        ax.semilogy(iterations, powers[:, k], marker="o", ms=3,
                    label=f"user {k + 1}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("transmit power [W]")
    ax.set_title(f"power iteration, {scenario.receiver.value} receiver "
                 f"(K={scenario.num_users}, N={scenario.processing_gain})")
    ax.grid(True, alpha=0.3)
    if scenario.num_users <= 10:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_baseline_compare(symbols, sir_fixed, sir_tracked, gamma_star, path) -> None:
    """SIR and BER per symbol: fixed-power run versus per-symbol re-tracking."""
    from .finite import ber_from_sir

    fig, (ax_sir, ax_ber) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_sir.plot(symbols, 10 * np.log10(sir_fixed), lw=1, label="fixed powers")
    ax_sir.plot(symbols, 10 * np.log10(sir_tracked), lw=1, label="per-symbol update")
    ax_sir.axhline(10 * np.log10(gamma_star), color="k", ls=":", lw=1,
                   label="target")
    ax_sir.set_ylabel("output SIR [dB]")
    ax_sir.legend(fontsize=8)
    ax_sir.grid(True, alpha=0.3)

    ax_ber.semilogy(symbols, ber_from_sir(np.asarray(sir_fixed)), lw=1)
    ax_ber.semilogy(symbols, ber_from_sir(np.asarray(sir_tracked)), lw=1)
    ax_ber.axhline(ber_from_sir(gamma_star), color="k", ls=":", lw=1)
    ax_ber.set_xlabel("symbol")
    ax_ber.set_ylabel("BER")
    ax_ber.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_cdf(values, empirical, theory, gamma_star, receiver, path) -> None:
    """Empirical SIR CDF against its analytic approximation."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(values, empirical, lw=1.5, label="simulation")
    ax.plot(values, theory, lw=1.5, ls="--", label="approximation")
    ax.axvline(gamma_star, color="k", ls=":", lw=1, label="target")
    ax.set_xlabel("output SIR (linear)")
    ax.set_ylabel("CDF")
    ax.set_title(f"{receiver.value} SIR distribution at the steady state")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_table1(cells, delta_db, path) -> None:
    """Grouped bars of simulated versus approximate band probabilities."""
    ok = [c for c in cells if c.error is None]
    labels = [f"{c.receiver.value}\nN={c.processing_gain}\n" + r"$\alpha$=" +
              f"{c.alpha:g}" for c in ok]
    approx = [c.approx for c in ok]
    sim = [c.sim.estimate if c.sim is not None else np.nan for c in ok]
    x = np.arange(len(ok))
    fig, ax = plt.subplots(figsize=(max(7, 0.9 * len(ok)), 4.5))
    ax.bar(x - 0.2, sim, width=0.4, label="simulation")
    ax.bar(x + 0.2, approx, width=0.4, label="approximation")
    ax.set_xticks(x, labels, fontsize=7)
    ax.set_ylabel(f"P(SIR within {delta_db:g} dB of target)")
    ax.set_ylim(0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
