"""Attention-quality diagnostics: generation confidence, recency focus, average focus and entropy."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog
from scipy import stats
from scipy.special import entr

from ..core.training import AttentionRow, CriticalSet, MetricsReport
from ..exceptions import MetricsException
from ..utils.artifact_loader import load_artifact_payload

logger = structlog.get_logger()

DEFAULT_RECENCY_K = 20


def gcs(token_logprobs: Sequence[float] | np.ndarray) -> float:
    """Mean log-probability of the generated tokens."""
    values = np.asarray(token_logprobs, dtype=np.float64)
    if values.size == 0:
        raise MetricsException("GCS needs at least one token log-probability")
    if not np.all(np.isfinite(values)) or np.any(values > 0):
        raise MetricsException("Token log-probabilities must be finite and <= 0")
    return float(values.mean())


def rfs(row: AttentionRow, k: int = DEFAULT_RECENCY_K) -> float:
    """Share of attention mass on the last ``k`` tokens."""
    n = len(row)
    if not 1 <= k <= n:
        raise MetricsException("Recency window must satisfy 1 <= k <= n", {"k": k, "n": n})
    return math.fsum(row.values[n - k :]) / math.fsum(row.values)


def afs(row: AttentionRow, critical: CriticalSet) -> float:
    """Mean attention weight on the critical token indices."""
    if len(critical) == 0:
        raise MetricsException("AFS needs a non-empty critical set")
    if critical.indices[0] < 0 or critical.indices[-1] >= len(row):
        raise MetricsException(
            "Critical indices must lie in [0, n)", {"n": len(row), "indices": list(critical.indices)}
        )
    return float(row.values[list(critical.indices)].mean())


def attention_entropy(row: AttentionRow) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    return float(entr(row.values).sum())


def batch_entropy(rows: Iterable[AttentionRow]) -> float:
    """Sum of per-row entropies over a stack of rows (heads or layers)."""
    return float(sum(attention_entropy(row) for row in rows))


def welch_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided Welch t-test on per-example metric values."""
    if len(a) < 2 or len(b) < 2:
        raise MetricsException("Welch test needs at least two values per group", {"a": len(a), "b": len(b)})
    result = stats.ttest_ind(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), equal_var=False)
    return float(result.statistic), float(result.pvalue)


def rows_from_payload(payload: Any) -> tuple[list[AttentionRow], CriticalSet, int, list[float] | None]:
    if not isinstance(payload, dict) or "rows" not in payload:
        raise MetricsException("Attention file must be an object with 'rows'")
    raw_rows = payload["rows"]
    if not isinstance(raw_rows, list) or not raw_rows:
        raise MetricsException("'rows' must be a non-empty list of attention vectors")
    rows = [AttentionRow.from_values(values) for values in raw_rows]
    critical = CriticalSet.of(payload.get("critical", []))
    k = int(payload.get("k", DEFAULT_RECENCY_K))
    logprobs = payload.get("logprobs")
    return rows, critical, k, None if logprobs is None else [float(value) for value in logprobs]


class AttentionMetricsService:
    """Summarizes attention rows into a metrics report."""

    def __init__(self, k: int = DEFAULT_RECENCY_K):
        self.k = k

    def summarize(
        self,
        rows: Sequence[AttentionRow],
        critical: CriticalSet | None = None,
        k: int | None = None,
        logprobs: Sequence[float] | None = None,
    ) -> MetricsReport:
        """Per-row RFS, AFS and entropy, averaged over rows; GCS when log-probabilities are given."""
        if not rows:
            raise MetricsException("At least one attention row is required")
        window = self.k if k is None else k
        per_row: list[dict[str, float]] = []
        for row in rows:
            entry = {"rfs": rfs(row, window), "entropy": attention_entropy(row)}
            if critical is not None and len(critical):
                entry["afs"] = afs(row, critical)
            per_row.append(entry)
        has_afs = critical is not None and len(critical) > 0
        report = MetricsReport(
            gcs=gcs(logprobs) if logprobs is not None else None,
            rfs=float(np.mean([entry["rfs"] for entry in per_row])),
            afs=float(np.mean([entry["afs"] for entry in per_row])) if has_afs else None,
            entropy=float(np.mean([entry["entropy"] for entry in per_row])),
            batch_entropy=batch_entropy(rows),
            rows=len(rows),
            k=window,
            per_row=per_row,
        )
        logger.info("Computed attention metrics", rows=report.rows, k=window, entropy=report.entropy)
        return report

    def summarize_file(self, path: str | Path) -> MetricsReport:
        rows, critical, k, logprobs = rows_from_payload(load_artifact_payload(path, artifact_name="attention"))
        return self.summarize(rows, critical, k, logprobs)

    @staticmethod
    def export_rows_csv(rows: Sequence[AttentionRow], path: str | Path) -> int:
        """Write rows in long form (``row,index,weight``)."""
        frame = pd.DataFrame(
            [
                {"row": row_index, "index": token_index, "weight": float(weight)}
                for row_index, row in enumerate(rows)
                for token_index, weight in enumerate(row.values)
            ],
            columns=["row", "index", "weight"],
        )
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False, float_format="%.17g", lineterminator="\n")
        return target.stat().st_size
