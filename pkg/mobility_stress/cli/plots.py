"""SVG figures for `--emit-svg`. matplotlib is imported only when drawing."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping, Sequence, Union

from mobility_stress.evaluation import MetricSummary
from mobility_stress.exceptions import MobilityStressError
from mobility_stress.nn import TrainHistory

PLOTTED_METRICS = ("f1", "precision", "recall")
METRIC_COLORS = {"f1": "black", "precision": "tab:red", "recall": "tab:blue"}


def _pyplot() -> Any:
    try:
        import matplotlib
    except ImportError:
        raise MobilityStressError(
            "Could not import matplotlib python package. "
            "Please install it with `pip install mobility-stress[plot]`"
        )
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "mobility-stress"
    import matplotlib.pyplot as plt

    return plt


def _save(fig: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def render_subset_comparison(
    summaries: Mapping[str, Mapping[str, MetricSummary]],
    baseline: Mapping[str, MetricSummary],
    path: Union[str, Path],
) -> Path:
    """Grouped bars of mean metrics per feature subset with std whiskers.

    The mode baseline's F1 is drawn as a dashed line.
    """
    plt = _pyplot()
    subsets = list(summaries)
    width = 0.8 / len(PLOTTED_METRICS)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for k, metric in enumerate(PLOTTED_METRICS):
            xs = [i + (k - 1) * width for i in range(len(subsets))]
            ax.bar(
                xs,
                [summaries[s][metric].mean for s in subsets],
                width,
                yerr=[summaries[s][metric].std for s in subsets],
                capsize=3,
                color=METRIC_COLORS[metric],
                label=metric,
            )
        ax.axhline(
            baseline["f1"].mean, color="grey", linestyle="--", label="mode baseline F1"
        )
        ax.set_xticks(range(len(subsets)))
        ax.set_xticklabels(
            [s.upper() if s == "gps" else s.capitalize() for s in subsets]
        )
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel("score")
        ax.legend(loc="upper left", fontsize="small")
        fig.tight_layout()
        return _save(fig, path)
    finally:
        plt.close(fig)


def render_training_curve(
    history: TrainHistory, path: Union[str, Path], title: str = ""
) -> Path:
    """Train and validation loss per epoch with the restored epoch marked."""
    plt = _pyplot()
    epochs: Sequence[int] = range(1, len(history.train_loss) + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        ax.plot(epochs, history.train_loss, label="train")
        ax.plot(epochs, history.val_loss, label="validation")
        if history.best_epoch:
            ax.axvline(
                history.best_epoch, color="grey", linestyle=":", label="best epoch"
            )
        ax.set_xlabel("epoch")
        ax.set_ylabel("cross-entropy")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)
    finally:
        plt.close(fig)
