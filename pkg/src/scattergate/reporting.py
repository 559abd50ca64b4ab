"""Deterministic result files: metadata headers, CSV/JSON bodies, figures.

Every emitted file starts from the same contract: the full resolved
configuration is echoed into the output (CSV comment header or JSON metadata
object), input files are identified by content hash, floats are rendered with
repr so they round-trip, and nothing time- or host-dependent is written.
Identical configuration therefore produces byte-identical files.  Writes go
through a temporary file in the target directory followed by an atomic
replace.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigError

__all__ = [
    "sha256_file",
    "format_value",
    "csv_text",
    "json_text",
    "write_text_atomic",
    "ordered_thread_map",
    "save_line_figure",
    "save_bar_figure",
]


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def format_value(value):
    """Deterministic plain-text rendering; floats keep full precision."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, complex):
        return repr(value)
    return str(value)


def csv_text(metadata, columns, rows):
    """CSV with '# key: value' metadata lines, a header row, then data rows."""
    lines = [f"# {key}: {format_value(val)}" for key, val in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ConfigError(
                f"row with {len(row)} cells does not match {len(columns)} columns")
        lines.append(",".join(format_value(cell) for cell in row))
    return "\n".join(lines) + "\n"


def json_text(metadata, result):
    doc = {"metadata": dict(metadata), "result": result}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text_atomic(path, text):
    """Write text via a same-directory temp file and an atomic replace."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ordered_thread_map(fn, items, threads=1):
    """map() preserving order; results independent of the thread count."""
    items = list(items)
    threads = int(threads)
    if threads < 1:
        raise ConfigError(f"thread count must be positive, got {threads}")
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    # no Software/date chunks: figure bytes depend only on the data
    fig.savefig(path, format="png", dpi=110, metadata={"Software": None})


def save_line_figure(path, x, series, xlabel, ylabel, title, logy=False):
    """One PNG with a line per (label -> y array) entry in `series`."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in series.items():
        ax.plot(x, y, marker="o", markersize=3, linewidth=1.2, label=str(label))
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def save_bar_figure(path, labels, values, ylabel, title, reference=None):
    """Bar chart; `reference` draws a horizontal target line."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.bar(range(len(labels)), values, color="#4477aa")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([str(l) for l in labels])
    if reference is not None:
        ax.axhline(reference, color="#cc3311", linestyle="--", linewidth=1.0)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
