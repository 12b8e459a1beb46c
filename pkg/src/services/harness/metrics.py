"""
二分类评估指标
正类为参考类；混淆计数一次遍历得到
"""
import json
from typing import Iterable, List, Sequence, Tuple

from src.models.base import MetricsReport, Sentiment
from src.utils.exceptions import InputValidationError


def _as_int(value) -> int:
    return value.as_int if isinstance(value, Sentiment) else int(value)


def confusion_counts(gold: Sequence, predicted: Sequence) -> Tuple[int, int, int, int]:
    """返回 (tp, fp, fn, tn)"""
    if len(gold) != len(predicted):
        raise InputValidationError(f"标签数 {len(gold)} 与预测数 {len(predicted)} 不一致")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, predicted):
        g, p = _as_int(g), _as_int(p)
        if p == 1:
            if g == 1:
                tp += 1
            else:
                fp += 1
        elif g == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def precision_recall_f1(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    """F1 直接由计数求 2tp/(2tp+fp+fn)，与 2PR/(P+R) 相等，且 P=R 时 F1 与 P 逐位相同"""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return precision, recall, f1


def compute_metrics(
    gold: Sequence,
    predicted: Sequence,
    dataset: str = "",
    model: str = "",
    macro: bool = False,
) -> MetricsReport:
    if len(gold) == 0:
        raise InputValidationError("评估集为空")
    tp, fp, fn, tn = confusion_counts(gold, predicted)
    precision, recall, f1 = precision_recall_f1(tp, fp, fn)
    report = MetricsReport(dataset=dataset, model=model, tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f1=f1)
    if macro:
        # 负类视角下 tn 即 tp
        neg_p, neg_r, neg_f1 = precision_recall_f1(tn, fn, fp)
        report.macro_precision = (precision + neg_p) / 2
        report.macro_recall = (recall + neg_r) / 2
        report.macro_f1 = (f1 + neg_f1) / 2
    return report


def format_metrics_table(reports: Iterable[MetricsReport], macro: bool = False) -> str:
    header = ["Model", "Precision(%)", "Recall(%)", "F1(%)"]
    if macro:
        header += ["Macro-P(%)", "Macro-R(%)", "Macro-F1(%)"]
    rows: List[List[str]] = [header]
    for report in reports:
        row = list(report.as_row())
        if macro and report.macro_f1 is not None:
            row += [f"{100 * report.macro_precision:.2f}", f"{100 * report.macro_recall:.2f}", f"{100 * report.macro_f1:.2f}"]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(header))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def metrics_to_json(report: MetricsReport) -> str:
    return json.dumps(report.model_dump(exclude_none=True), ensure_ascii=False, indent=2)
