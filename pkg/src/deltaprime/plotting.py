"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.frameon": False,
}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_pair(pair, path) -> None:
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
        x = pair.grid.x
        ax0.plot(x, pair.phi[0].values, label=r"$\varphi_1$")
        ax0.plot(x, pair.phi[1].values, label=r"$\varphi_2$")
        ax0.set_xlabel("t")
        ax0.legend()
        ax1.plot(x, pair.omega.values, color="k")
        ax1.axhline(pair.kappa, ls=":", color="grey")
        ax1.set_xlabel("t")
        ax1.set_title(rf"$\omega$, $\kappa$ = {pair.kappa:.6f}")
        _save(fig, path)


def plot_potential(q, path, label: str = "") -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(q.q.grid.x, q.values)
        ax.set_xlabel("t")
        ax.set_ylabel("q")
        if label:
            ax.set_title(label)
        _save(fig, path)


def plot_convergence(reports, path) -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for rep in reports:
            eps = np.array([e.epsilon for e in rep.entries])
            line, = ax.loglog(eps, rep.gaps, "o", label=f"zeta = {rep.zeta:g}, slope {rep.slope:.3f}")
            ax.loglog(eps, np.exp(rep.intercept) * eps**rep.slope, "-", color=line.get_color(), lw=1)
        e = np.array([e.epsilon for e in reports[0].entries])
        ax.loglog(e, reports[0].gaps[0] * np.sqrt(e / e[0]), "k--", lw=0.8, label=r"$\propto\sqrt{\varepsilon}$")
        ax.set_xlabel(r"$\varepsilon$")
        ax.set_ylabel("resolvent gap")
        ax.legend()
        _save(fig, path)


def plot_diagnostics(rows, path, title: str = "") -> None:
    cols = [("jump_sum", "jump sum"), ("residual", r"$\|r_\varepsilon\|$"),
            ("y_minus_u", r"$\|Y_\varepsilon-u\|$"), ("xi", r"$|\xi_\varepsilon|$"),
            ("eta", r"$|\eta_\varepsilon|$")]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        eps = np.array([r.epsilon for r in rows])
        for key, label in cols:
            vals = np.array([getattr(r, key) for r in rows])
            if np.all(vals > 0):
                ax.loglog(eps, vals, "o-", label=label)
        ax.set_xlabel(r"$\varepsilon$")
        if title:
            ax.set_title(title)
        if ax.lines:
            ax.legend()
        _save(fig, path)


def plot_scattering(rows, path) -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        k = np.array([r["k"] for r in rows])
        R = np.array([r["re_r"] ** 2 + r["im_r"] ** 2 for r in rows])
        ax.plot(k, R, label=r"$|r|^2$")
        T = np.array([r["re_t"] ** 2 + r["im_t"] ** 2 for r in rows])
        ax.plot(k, T, label=r"$|t|^2$")
        ax.set_xlabel("k")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        _save(fig, path)
