"""Fixed plot style for every figure script."""
import matplotlib.pyplot as plt

FIELD_CMAP = "RdBu_r"
MAG_CMAP = "viridis"
ERROR_CMAP = "inferno"
ERROR_VMAX = 100.0
QUIVER_STEP = 8
DPI = 150

METHOD_COLORS = {
    "measured": "0.45",
    "pw-cf": "#1f77b4",
    "pw-irls": "#17becf",
    "mw-cf": "#d62728",
    "mw-irls": "#ff7f0e",
    "reference": "0.1",
    "anchor": "0.6",
}
METHOD_STYLES = {
    "measured": ":",
    "pw-cf": "-",
    "pw-irls": "--",
    "mw-cf": "-",
    "mw-irls": "--",
}
METRIC_LABELS = {"pe": "pressure error (%)",
                 "ime": "intensity magnitude error (%)",
                 "ide": "intensity direction error (%)"}


def apply():
    plt.rcParams.update({
        "figure.dpi": DPI,
        "savefig.dpi": DPI,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "sft-figures",
    })
