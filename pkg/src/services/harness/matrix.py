"""
模型对比矩阵
每个 (数据集, 模型) 单元独立训练并评估，单元种子为 seed + 单元序号；
单元失败只记录在该单元，其余单元照常运行
"""
import asyncio
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel

from src.config.settings import settings
from src.models.base import MetricsReport, ReviewRecord
from src.models.config import FeatureView, HeadKind, HeadSpec, RunConfig
from src.services.baselines import EmbeddingTable
from src.services.tokenizer import Vocabulary
from src.utils.exceptions import ContractError
from src.utils.logger import get_logger
from .checkpoint import Checkpoint
from .trainer import evaluate, finetune, load_model, train_static_model, train_svm_model

logger = get_logger(__name__)

EXTERNAL_NOTE = "external: out of scope"


class ModelFamily(str, Enum):
    SVM = "svm"
    XGBOOST = "xgboost"
    STATIC = "static"
    BERT = "bert"

    @property
    def group(self) -> str:
        if self in (ModelFamily.SVM, ModelFamily.XGBOOST):
            return "classical"
        return "embedding" if self is ModelFamily.STATIC else "bert"


class MatrixRow(BaseModel):
    """结果表中的一行模型"""
    name: str
    family: ModelFamily
    head: Optional[HeadSpec] = None
    embedding: Optional[str] = None

    @property
    def group(self) -> str:
        return self.family.group


HEAD_TITLES = {HeadKind.LSTM: "LSTM", HeadKind.TEXTCNN: "TextCNN", HeadKind.RCNN: "RCNN"}


def default_rows(
    embedding_names: Sequence[str] = (),
    token_view: FeatureView = FeatureView.CONCAT_LAST_4,
    base_head: Optional[HeadSpec] = None,
    include_external: bool = True,
) -> List[MatrixRow]:
    """经典方法、词向量方法、BERT 方法三组，组内顺序与结果表一致"""
    base_head = base_head or HeadSpec()
    rows = [MatrixRow(name="SVM", family=ModelFamily.SVM)]
    if include_external:
        rows.append(MatrixRow(name="XGBoost", family=ModelFamily.XGBOOST))
    for table in embedding_names:
        for kind in (HeadKind.TEXTCNN, HeadKind.LSTM, HeadKind.RCNN):
            rows.append(MatrixRow(
                name=f"{table} + {HEAD_TITLES[kind]}",
                family=ModelFamily.STATIC,
                head=base_head.model_copy(update={"kind": kind, "view": FeatureView.LAST_LAYER}),
                embedding=table,
            ))
    rows.append(MatrixRow(
        name="BERT-base",
        family=ModelFamily.BERT,
        head=base_head.model_copy(update={"kind": HeadKind.CLS_FFN, "view": FeatureView.LAST_LAYER}),
    ))
    for kind in (HeadKind.LSTM, HeadKind.TEXTCNN, HeadKind.RCNN):
        rows.append(MatrixRow(
            name=f"BERT-{HEAD_TITLES[kind]}",
            family=ModelFamily.BERT,
            head=base_head.model_copy(update={"kind": kind, "view": token_view}),
        ))
    return rows


@dataclass
class MatrixDataset:
    name: str
    train: Sequence[ReviewRecord]
    test: Sequence[ReviewRecord]
    vocab: Optional[Vocabulary] = None
    pretrained: Optional[Checkpoint] = None
    tables: Dict[str, EmbeddingTable] = field(default_factory=dict)
    seq_len: int = settings.SEQ_LEN


@dataclass
class CellResult:
    model: str
    group: str
    dataset: str
    index: int
    seed: int
    status: str
    report: Optional[MetricsReport] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        row = {"model": self.model, "group": self.group, "status": self.status, "seed": self.seed}
        if self.report is not None:
            row.update(self.report.model_dump(exclude={"dataset", "model"}, exclude_none=True))
        if self.error is not None:
            row["error"] = self.error
        return row


@dataclass
class MatrixResult:
    cells: List[CellResult] = field(default_factory=list)

    def datasets(self) -> List[str]:
        return list(dict.fromkeys(cell.dataset for cell in self.cells))

    def rows_for(self, dataset: str) -> List[CellResult]:
        return sorted((c for c in self.cells if c.dataset == dataset), key=lambda c: c.index)

    @property
    def failures(self) -> List[CellResult]:
        return [c for c in self.cells if c.status == "failed"]

    def to_text(self) -> str:
        blocks = []
        for dataset in self.datasets():
            table: List[List[str]] = [["Model", "Precision(%)", "Recall(%)", "F1(%)"]]
            groups: List[str] = [""]
            for cell in self.rows_for(dataset):
                if cell.status == "ok":
                    table.append(list(cell.report.as_row()))
                elif cell.status == "external":
                    table.append([cell.model, EXTERNAL_NOTE])
                else:
                    table.append([cell.model, f"failed: {cell.error}"])
                groups.append(cell.group)

            full_rows = [r for r in table if len(r) == 4]
            widths = [max(len(r[i]) for r in full_rows) for i in range(4)]
            widths[0] = max(len(r[0]) for r in table)
            rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
            lines = [f"Dataset: {dataset}", rule]
            for i, row in enumerate(table):
                if i > 1 and groups[i] != groups[i - 1]:
                    lines.append(rule)
                if len(row) == 4:
                    cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
                    lines.append("  ".join(cells).rstrip())
                else:
                    lines.append(f"{row[0].ljust(widths[0])}  {row[1]}")
                if i == 0:
                    lines.append(rule)
            lines.append(rule)
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks)

    def to_dict(self) -> dict:
        return {"datasets": [{"name": d, "rows": [c.to_dict() for c in self.rows_for(d)]} for d in self.datasets()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def run_cell(row: MatrixRow, dataset: MatrixDataset, run: RunConfig, seed: int, macro: bool = False) -> MetricsReport:
    """同步训练并评估一个单元"""
    if row.family is ModelFamily.SVM:
        model = train_svm_model(dataset.train, seed=seed, name=row.name)
    elif row.family is ModelFamily.STATIC:
        table = dataset.tables.get(row.embedding)
        if table is None:
            raise ContractError(f"数据集 {dataset.name} 没有名为 {row.embedding} 的词向量表")
        model = train_static_model(dataset.train, table, row.head, run.train, dataset.seq_len, seed, name=row.name)
    elif row.family is ModelFamily.BERT:
        if dataset.pretrained is None or dataset.vocab is None:
            raise ContractError(f"数据集 {dataset.name} 缺少预训练检查点或词表，无法运行 {row.name}")
        cell_run = run.model_copy(update={"head": row.head, "seed": seed})
        checkpoint = finetune(dataset.pretrained, cell_run, dataset.train, dataset.vocab)
        model = load_model(checkpoint, dataset.vocab, name=row.name)
    else:
        raise ContractError(f"{row.name} 不在本项目范围内")
    return evaluate(model, dataset.test, dataset=dataset.name, macro=macro)


async def run_matrix(
    rows: Sequence[MatrixRow],
    datasets: Sequence[MatrixDataset],
    run: RunConfig,
    workers: int = settings.MATRIX_WORKERS,
    macro: bool = False,
) -> MatrixResult:
    """单元在线程中并发执行，并发数由 workers 限制；结果按单元序号排列"""
    semaphore = asyncio.Semaphore(max(1, workers))
    plan = [(dataset, row) for dataset in datasets for row in rows]

    async def run_one(index: int, dataset: MatrixDataset, row: MatrixRow) -> CellResult:
        seed = run.seed + index
        cell = CellResult(model=row.name, group=row.group, dataset=dataset.name, index=index, seed=seed, status="ok")
        if row.family is ModelFamily.XGBOOST:
            logger.warning(f"{row.name}: 梯度提升树基线不在本项目范围内，标记为 external")
            cell.status = "external"
            return cell
        async with semaphore:
            started = time.perf_counter()
            try:
                cell.report = await asyncio.to_thread(run_cell, row, dataset, run, seed, macro)
                logger.info(f"单元 {index} [{dataset.name} / {row.name}] 完成, 耗时 {time.perf_counter() - started:.1f}s")
            except Exception as e:
                logger.error(f"单元 {index} [{dataset.name} / {row.name}] 失败: {e}")
                cell.status = "failed"
                cell.error = str(e)
        return cell

    logger.info(f"对比矩阵: {len(datasets)} 个数据集 × {len(rows)} 个模型, 并发 {max(1, workers)}")
    cells = await asyncio.gather(*(run_one(i, d, r) for i, (d, r) in enumerate(plan)))
    return MatrixResult(cells=sorted(cells, key=lambda c: c.index))
