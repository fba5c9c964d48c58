"""Figures for convergence reports."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 10,
    "axes.labelsize": 11,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "xtick.top": True,
    "ytick.right": True,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "svg.hashsalt": "sdaell",
}


def plot_convergence(report, path, title=None, reference_slope=0.5):
    """Log-log error curves, one per sample, with a reference N^-slope line.

    Samples whose errors hit zero are skipped on the log axes.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        anchor = None
        for s in report.per_sample:
            n = np.array([e[0] for e in s.errors], dtype=float)
            err = np.array([e[1] for e in s.errors], dtype=float)
            if np.any(err <= 0):
                continue
            label = f"sample {s.sample}"
            if s.rate is not None:
                label += f" (rate {s.rate:.3f})"
            ax.loglog(n, err, marker="o", ms=3.5, lw=1.2, label=label)
            if anchor is None:
                anchor = (n[0], err[0])
        if anchor is not None:
            n_all = np.array(sorted({e[0] for s in report.per_sample for e in s.errors}), float)
            ref = anchor[1] * (n_all / anchor[0]) ** (-reference_slope)
            ax.loglog(n_all, ref, "k--", lw=1.0, label=f"N^-{reference_slope:g}")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("N (time steps)")
        ax.set_ylabel("sup-norm pathwise error")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, dpi=150, metadata={"Software": None})
        plt.close(fig)
    return path
