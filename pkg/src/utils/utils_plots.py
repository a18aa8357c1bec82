"""Module to visualise with matplotlib."""

# python modules
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns
from typing import Optional


def plot_mean_curves_with_band(
    df: pd.DataFrame,
    x_column: str,
    mean_column: str,
    band_column: str,
    group_column: str,
    title: str,
    ylabel: str,
    output_file_name: Optional[str] = None,
) -> plt.Figure:
    """Plot one mean curve per group with a +-band shaded around it.

    df holds one row per (group, x) with the mean and the half-width of the band.
    """
    sns.set_style("whitegrid")
    fig, ax = plt.subplots(figsize=(10, 6))
    groups = sorted(df[group_column].unique())
    palette = sns.color_palette("tab10", n_colors=max(len(groups), 1))

    for color, group in zip(palette, groups):
        s = df[df[group_column] == group].sort_values(x_column)
        x = s[x_column].to_numpy()
        mean = s[mean_column].to_numpy()
        band = s[band_column].to_numpy()
        ax.plot(x, mean, color=color, label=str(group))
        ax.fill_between(x, mean - band, mean + band, color=color, alpha=0.2, linewidth=0)

    ax.set_title(title, fontsize=16)
    ax.set_xlabel(x_column, fontsize=14)
    ax.set_ylabel(ylabel, fontsize=14)
    ax.tick_params(axis="both", which="major", labelsize=12)
    ax.legend(loc="upper left", fontsize=12)
    plt.tight_layout()

    if output_file_name:
        fig.savefig(output_file_name, bbox_inches="tight")

    plt.close(fig)

    return fig


def create_bar_chart(
    df: pd.DataFrame,
    category_column: str,
    value_column: str,
    error_column: str,
    title: str,
    output_file_name: Optional[str] = None,
) -> plt.Figure:
    """
    Create a bar chart comparing categories with their values and error bars.

    Args:
    df (pd.DataFrame): One row per category.
    category_column (str): The name of the column containing categories.
    value_column (str): The name of the column containing values to plot.
    error_column (str): The name of the column with the error bar half-widths.
    title (str): The title of the plot.
    output_file_name (Optional[str]): If provided, save the plot to this file.

    Returns:
    plt.Figure: The matplotlib Figure object.
    """
    sns.set_style("whitegrid")
    fig, ax = plt.subplots(figsize=(8, 6))

    ax.bar(
        df[category_column].astype(str),
        df[value_column],
        yerr=df[error_column],
        color=sns.color_palette("tab10", n_colors=max(len(df), 1)),
        capsize=4,
    )

    ax.set_title(title, fontsize=16)
    ax.set_xlabel(category_column, fontsize=14)
    ax.set_ylabel(value_column, fontsize=14)
    ax.tick_params(axis="both", which="major", labelsize=12)

    # Rotate x-axis labels if they are long
    plt.xticks(rotation=45, ha="right")

    for i in ax.containers:
        if hasattr(i, "datavalues"):
            ax.bar_label(i, fmt="%.2f", padding=3, fontsize=10)

    plt.tight_layout()

    if output_file_name:
        fig.savefig(output_file_name, bbox_inches="tight")

    plt.close(fig)

    return fig
