"""Utility functions for reports, presets and plots."""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml

from .errors import ConfigurationError

REPO_ROOT = Path(__file__).parent.parent


def resolve_path(path, base: Optional[Path] = None) -> Path:
    """Relative paths are taken from the repository root."""
    path = Path(path)
    if path.is_absolute():
        return path
    return (base or REPO_ROOT) / path


def parse_literal(text: Optional[str]) -> Any:
    """Parse a command-line literal such as ``0.3`` or ``[[12, 0.5]]``."""
    if text is None:
        return None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Could not parse literal '{text}': {e}")


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    """Write UTF-8 JSON, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False, default=_default)
    return path


def list_presets(runs_dir: Path) -> List[Dict[str, Any]]:
    """Preset run configurations under ``runs/<name>/run.yaml``."""
    runs_dir = Path(runs_dir)
    if not runs_dir.exists():
        return []
    presets = []
    for run_dir in sorted(d for d in runs_dir.iterdir() if d.is_dir()):
        run_file = run_dir / "run.yaml"
        if not run_file.exists():
            continue
        try:
            with open(run_file, 'r') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            data = {"error": str(e)}
        presets.append({"name": run_dir.name, "path": run_file, **data})
    return presets


def save_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def plot_solution_svg(solution, path: Path, nilpotent: bool = True) -> Path:
    """Body of alpha and beta against sigma; nonzero soul coefficients on a second axis."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sigma = solution.sigma
    rows = 2 if nilpotent else 1
    fig, axes = plt.subplots(rows, 1, figsize=(7, 3.2 * rows), sharex=True, squeeze=False)
    ax = axes[0, 0]
    ax.plot(sigma, solution.value("alpha")[:, 0], label="body(alpha)")
    ax.plot(sigma, solution.value("beta")[:, 0], label="body(beta)")
    ax.set_ylabel("body")
    ax.set_title(f"{solution.subalgebra}, eps = {solution.epsilon:+d}")
    ax.legend(loc="best")
    if nilpotent:
        ax = axes[1, 0]
        for name in ("alpha", "eta", "lambda", "beta"):
            values = solution.value(name)
            for mask in range(1, values.shape[1]):
                if np.any(values[:, mask]):
                    ax.plot(sigma, values[:, mask], lw=0.8, label=f"{name}[m{mask}]")
        ax.set_ylabel("soul coefficients")
        if ax.lines:
            ax.legend(loc="best", fontsize="small", ncol=2)
    axes[-1, 0].set_xlabel("sigma")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
