"""Static SVG charts for the reports. matplotlib is imported only when asked for."""
from __future__ import annotations


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("SVG output needs matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "histent"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()


def rate_chart(table, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4))
    rows = table.all_rows()
    bottom = [0.0] * len(rows)
    for col in ("EM", "RM", "MM", "UD"):
        vals = [float(r.rate(col)) * 100 for r in rows]
        ax.bar([r.label for r in rows], vals, bottom=bottom, label=col)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_ylabel("% of gold entities")
    ax.tick_params(axis="x", rotation=60)
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def length_chart(results, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (model, res) in enumerate(results.items()):
        cats = list(res.summaries)
        ax.errorbar([c.name for c in cats], [res.summaries[c].mean for c in cats],
                    yerr=[res.summaries[c].sd for c in cats], fmt="o", capsize=3,
                    label=model or None)
    ax.set_ylabel("entity length (tokens)")
    if any(results):
        ax.legend()
    _save(fig, path)
    plt.close(fig)


def notes_chart(results, path):
    """Word count against error count (left) and error rate (right), one series per model."""
    plt = _pyplot()
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for model, res in results.items():
        words = [n.word_count for n in res.notes]
        left.scatter(words, [n.error_count for n in res.notes], s=12, label=model or None)
        rated = [n for n in res.notes if n.gold_count]
        right.scatter([n.word_count for n in rated], [n.error_rate * 100 for n in rated], s=12,
                      label=model or None)
    for ax, what in ((left, "error count"), (right, "error rate (%)")):
        ax.set_xlabel("note length (tokens)")
        ax.set_ylabel(what)
    if any(results):
        right.legend()
    _save(fig, path)
    plt.close(fig)


def sections_chart(results, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    labels, inside, outside = [], [], []
    for model, groups in results.items():
        for g, r in groups.items():
            t = r.table
            labels.append(f"{model} {g}".strip())
            inside.append(t.c / (t.a + t.c) * 100 if t.a + t.c else 0.0)
            outside.append(t.d / (t.b + t.d) * 100 if t.b + t.d else 0.0)
    xs = range(len(labels))
    ax.bar([x - 0.2 for x in xs], inside, 0.4, label="in dedicated section")
    ax.bar([x + 0.2 for x in xs], outside, 0.4, label="elsewhere")
    ax.set_xticks(list(xs), labels, rotation=60, ha="right")
    ax.set_ylabel("MMUD share (%)")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
