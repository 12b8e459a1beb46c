"""
命令行工具
"""
import asyncio
import functools
import json
import sys
from pathlib import Path
from typing import Optional, Tuple

import click
from pydantic import ValidationError

from src.config.run_config import load_run_config
from src.config.settings import settings
from src.models.base import LABEL_RULE_PRESETS, LabelRule
from src.models.config import FeatureView, HeadKind, PretrainConfig, RunConfig
from src.services.baselines import load_embedding_file
from src.services.data import (
    SchemaMapping, apply_label_rule, compute_stats, describe_dataset, format_description,
    format_stats_table, generate_synthetic_dataset, ingest, read_jsonl, read_lines, record_to_dict,
    split_records, stats_to_json, write_jsonl
)
from src.services.encoder import pretrain
from src.services.harness.checkpoint import load_checkpoint, save_checkpoint
from src.services.harness.diagnostics import run_all_grad_checks
from src.services.harness.matrix import MatrixDataset, default_rows, run_matrix
from src.services.harness.metrics import format_metrics_table, metrics_to_json
from src.services.harness.trainer import evaluate as evaluate_model
from src.services.harness.trainer import finetune as finetune_model
from src.services.harness.trainer import load_model, predict as predict_texts
from src.services.tensor import set_precision
from src.services.tokenizer import Vocabulary, train_vocab
from src.utils.exceptions import ViSentiError
from src.utils.logger import get_logger, setup_logger

logger = get_logger(__name__)

GRADCHECK_THRESHOLDS = {"f64": 1e-5, "f32": 1e-3}


def handle_errors(func):
    """业务异常记录后以退出码1结束"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ViSentiError, ValidationError) as e:
            logger.error(f"{func.__name__} 失败: {e}")
            sys.exit(1)
    return wrapper


def _run_config(ctx: click.Context) -> RunConfig:
    return ctx.obj["run"]


def _seed(ctx: click.Context) -> int:
    return ctx.obj["run"].seed


def _schema(text_col: str, score_col: Optional[str], label_col: Optional[str]) -> SchemaMapping:
    """只给了标签列时不再要求评分列"""
    if score_col is None and label_col is None:
        score_col = 'avg_score'
    return SchemaMapping(text_col=text_col, score_col=score_col, label_col=label_col)


def _require(value: Optional[str], fallback: Optional[str], option: str) -> str:
    path = value or fallback
    if path is None:
        raise click.UsageError(f"缺少 {option}（命令行或 --config 中均未给出）")
    return path


@click.group()
@click.version_option(version=settings.VERSION, prog_name=settings.PROJECT_NAME)
@click.option('--seed', type=int, default=None, help='随机种子（覆盖配置文件）')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), help='key=value 运行配置文件')
@click.option('--precision', type=click.Choice(['f32', 'f64']), default=settings.DEFAULT_PRECISION, help='浮点精度')
@click.option('--log-level', default=settings.LOG_LEVEL, help='控制台日志级别')
@click.option('--log-dir', type=click.Path(file_okay=False), default=None, help='日志文件目录（不给则只输出到控制台）')
@click.pass_context
def cli(ctx, seed: Optional[int], config_path: Optional[str], precision: str, log_level: str, log_dir: Optional[str]):
    """viSentiBert - 越南语评论情感分析：BERT 微调与基线对比"""
    setup_logger(level=log_level, log_dir=log_dir)
    set_precision(precision)
    ctx.ensure_object(dict)
    try:
        run = load_run_config(config_path) if config_path else RunConfig()
    except ViSentiError as e:
        logger.error(f"运行配置加载失败: {e}")
        sys.exit(1)
    if seed is not None:
        run = run.model_copy(update={"seed": seed})
    ctx.obj["run"] = run
    ctx.obj["precision"] = precision


@cli.command('vocab-train')
@click.option('--corpus', required=True, type=click.Path(exists=True, dir_okay=False), help='语料文件，每行一条')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='词表输出路径')
@click.option('--size', default=settings.VOCAB_SIZE, show_default=True, help='目标词表大小')
@click.option('--min-frequency', default=settings.VOCAB_MIN_FREQUENCY, show_default=True, help='最低合并频次')
@handle_errors
def vocab_train(corpus: str, out: str, size: int, min_frequency: int):
    """训练子词词表"""
    vocab = train_vocab(read_lines(corpus), target_size=size, min_frequency=min_frequency)
    vocab.save(out)
    click.echo(f"{len(vocab)} tokens, sha256={vocab.fingerprint()}")


@cli.command()
@click.option('--corpus', required=True, type=click.Path(exists=True, dir_okay=False), help='预训练语料，每行一条')
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False), help='词表文件')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='检查点输出路径')
@click.option('--epochs', type=int, default=settings.PRETRAIN_EPOCHS, show_default=True)
@click.option('--batch', type=int, default=settings.PRETRAIN_BATCH, show_default=True)
@click.option('--lr', type=float, default=settings.PRETRAIN_LR, show_default=True)
@click.option('--max-steps', type=int, default=None, help='最多训练步数')
@click.pass_context
@handle_errors
def pretrain_command(ctx, corpus: str, vocab_path: Optional[str], out: str, epochs: int, batch: int, lr: float, max_steps: Optional[int]):
    """掩码语言模型预训练"""
    run = _run_config(ctx)
    vocab = Vocabulary.load(_require(vocab_path, run.vocab_path, '--vocab'))
    config = run.encoder_config(len(vocab))
    hyper = PretrainConfig(learning_rate=lr, batch_size=batch, epochs=epochs, max_steps=max_steps)
    checkpoint = pretrain(read_lines(corpus), vocab, config, hyper, seed=run.seed)
    save_checkpoint(checkpoint, out)


pretrain_command.name = 'pretrain'


@cli.command()
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False), help='原始评论文件')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'jsonl']), default='csv', show_default=True)
@click.option('--text-col', default='text', show_default=True, help='文本列名')
@click.option('--score-col', default=None, help='评分列名（默认 avg_score）')
@click.option('--label-col', default=None, help='已有标签列名；没有评分的记录沿用该列标签')
@click.option('--rule', type=click.Choice(sorted(LABEL_RULE_PRESETS) + ['custom']), default='ntc-sv', show_default=True)
@click.option('--pos', 'pos_threshold', type=float, help='custom 规则的正类阈值')
@click.option('--neg', 'neg_threshold', type=float, help='custom 规则的负类阈值')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='标注结果 json-lines')
@handle_errors
def label(input_path, fmt, text_col, score_col, label_col, rule, pos_threshold, neg_threshold, out):
    """按平均评分打情感标签"""
    if rule == 'custom':
        if pos_threshold is None or neg_threshold is None:
            raise click.UsageError("custom 规则需要同时给出 --pos 和 --neg")
        label_rule = LabelRule(pos_threshold=pos_threshold, neg_threshold=neg_threshold)
    else:
        label_rule = LABEL_RULE_PRESETS[rule]
    result = ingest(input_path, fmt, _schema(text_col, score_col, label_col))
    labeled, dropped = apply_label_rule(result.records, label_rule, keep_existing=label_col is not None)
    write_jsonl([r.model_copy(update={"avg_score": None}) for r in labeled], out)
    click.echo(f"labeled={len(labeled)} dropped={dropped} empty_text={result.dropped_empty}")


@cli.command()
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--format', 'fmt', type=click.Choice(['csv', 'jsonl']), default='jsonl', show_default=True)
@click.option('--text-col', default='text', show_default=True)
@click.option('--score-col', default=None, help='评分列名（默认 avg_score）')
@click.option('--label-col', default=None, help='标签列名')
@click.option('--name', default='', help='数据集名称')
@click.option('--json-out', type=click.Path(dir_okay=False), help='统计结果 json 输出路径')
@handle_errors
def stats(input_path, fmt, text_col, score_col, label_col, name, json_out):
    """每条评论的词数统计"""
    if fmt == 'jsonl':
        records = read_jsonl(input_path)
    else:
        records = ingest(input_path, fmt, _schema(text_col, score_col, label_col)).records
    corpus_stats = compute_stats(records)
    click.echo(format_stats_table(corpus_stats, name))
    if json_out:
        Path(json_out).write_text(stats_to_json(corpus_stats, name), encoding="utf-8")


@cli.command()
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False), help='已标注的 json-lines')
@click.option('--test-fraction', type=float, default=0.2, show_default=True)
@click.option('--stratified', is_flag=True, help='按类别分层')
@click.option('--train-out', required=True, type=click.Path(dir_okay=False))
@click.option('--test-out', required=True, type=click.Path(dir_okay=False))
@click.option('--name', default='dataset', show_default=True)
@click.pass_context
@handle_errors
def split(ctx, input_path, test_fraction, stratified, train_out, test_out, name):
    """划分训练集与测试集"""
    records = read_jsonl(input_path)
    train, test = split_records(records, test_fraction, seed=_seed(ctx), stratified=stratified)
    write_jsonl(train, train_out)
    write_jsonl(test, test_out)
    click.echo(format_description(describe_dataset(name, train, test)))


@cli.command()
@click.option('--pretrained', type=click.Path(exists=True, dir_okay=False), help='预训练检查点')
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--train', 'train_path', type=click.Path(exists=True, dir_okay=False), help='训练集 json-lines')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='分类器检查点输出路径')
@click.option('--head', type=click.Choice([k.value for k in HeadKind]), help='分类头类型')
@click.option('--view', type=click.Choice([v.value for v in FeatureView]), help='隐藏层特征视图')
@click.option('--frozen/--no-frozen', default=None, help='冻结编码器，只训练分类头')
@click.option('--epochs', type=int)
@click.option('--lr', type=float)
@click.option('--batch', type=int)
@click.option('--early-stop', is_flag=True, default=None, help='训练集全部分对时提前停止')
@click.pass_context
@handle_errors
def finetune(ctx, pretrained, vocab_path, train_path, out, head, view, frozen, epochs, lr, batch, early_stop):
    """在预训练编码器上微调分类头"""
    run = _run_config(ctx)
    head_updates = {k: v for k, v in (("kind", head), ("view", view)) if v is not None}
    train_updates = {
        k: v for k, v in (("epochs", epochs), ("learning_rate", lr), ("batch_size", batch), ("early_stop", early_stop))
        if v is not None
    }
    run = run.model_copy(update={
        "head": run.head.model_validate({**run.head.model_dump(), **head_updates}),
        "train": run.train.model_validate({**run.train.model_dump(), **train_updates}),
        "frozen_encoder": run.frozen_encoder if frozen is None else frozen,
    })
    checkpoint = load_checkpoint(_require(pretrained, run.pretrained_path, '--pretrained'))
    vocab = Vocabulary.load(_require(vocab_path, run.vocab_path, '--vocab'))
    records = read_jsonl(_require(train_path, run.train_path, '--train'))
    save_checkpoint(finetune_model(checkpoint, run, records, vocab), out)


@cli.command()
@click.option('--model', 'model_path', required=True, type=click.Path(exists=True, dir_okay=False), help='分类器检查点')
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--test', 'test_path', type=click.Path(exists=True, dir_okay=False), help='测试集 json-lines')
@click.option('--name', default='', help='数据集名称')
@click.option('--macro', is_flag=True, help='同时输出宏平均')
@click.option('--json-out', type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def evaluate(ctx, model_path, vocab_path, test_path, name, macro, json_out):
    """评估分类器（正类为参考类）"""
    run = _run_config(ctx)
    vocab = Vocabulary.load(_require(vocab_path, run.vocab_path, '--vocab'))
    model = load_model(load_checkpoint(model_path), vocab)
    report = evaluate_model(model, read_jsonl(_require(test_path, run.test_path, '--test')), dataset=name, macro=macro)
    click.echo(format_metrics_table([report], macro=macro))
    if json_out:
        Path(json_out).write_text(metrics_to_json(report), encoding="utf-8")


@cli.command()
@click.option('--model', 'model_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--input', 'input_path', required=True, type=click.Path(exists=True, dir_okay=False), help='每行一条文本')
@click.option('--out', type=click.Path(dir_okay=False), help='预测结果 json-lines（默认输出到标准输出）')
@click.pass_context
@handle_errors
def predict(ctx, model_path, vocab_path, input_path, out):
    """批量预测"""
    run = _run_config(ctx)
    vocab = Vocabulary.load(_require(vocab_path, run.vocab_path, '--vocab'))
    model = load_model(load_checkpoint(model_path), vocab)
    lines = [
        json.dumps({"text": p.text, "label": p.label.value, "probability": p.probability}, ensure_ascii=False)
        for p in predict_texts(model, read_lines(input_path))
    ]
    if out:
        Path(out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    else:
        for line in lines:
            click.echo(line)


@cli.command()
@click.option('--train', 'train_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--test', 'test_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--pretrained', type=click.Path(exists=True, dir_okay=False), help='预训练检查点（BERT 行需要）')
@click.option('--embeddings', multiple=True, type=click.Path(exists=True, dir_okay=False), help='静态词向量文件，可重复给出')
@click.option('--name', default='dataset', show_default=True, help='数据集名称')
@click.option('--token-view', type=click.Choice([v.value for v in FeatureView]), default=FeatureView.CONCAT_LAST_4.value, show_default=True)
@click.option('--workers', type=int, default=settings.MATRIX_WORKERS, show_default=True)
@click.option('--macro', is_flag=True)
@click.option('--no-external', is_flag=True, help='不输出 XGBoost 行')
@click.option('--json-out', type=click.Path(dir_okay=False))
@click.option('--text-out', type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def matrix(ctx, train_path, test_path, vocab_path, pretrained, embeddings: Tuple[str, ...], name, token_view, workers, macro, no_external, json_out, text_out):
    """训练并评估全部对比模型"""
    run = _run_config(ctx)
    pretrained = pretrained or run.pretrained_path
    vocab_path = vocab_path or run.vocab_path
    checkpoint = load_checkpoint(pretrained) if pretrained else None
    tables = {}
    for path in embeddings:
        table = load_embedding_file(path)
        tables[table.name] = table
    dataset = MatrixDataset(
        name=name,
        train=read_jsonl(_require(train_path, run.train_path, '--train')),
        test=read_jsonl(_require(test_path, run.test_path, '--test')),
        vocab=Vocabulary.load(vocab_path) if vocab_path else None,
        pretrained=checkpoint,
        tables=tables,
        seq_len=checkpoint.encoder_config.seq_len if checkpoint else settings.SEQ_LEN,
    )
    rows = default_rows(list(tables), token_view=FeatureView(token_view), base_head=run.head, include_external=not no_external)
    result = asyncio.run(run_matrix(rows, [dataset], run, workers=workers, macro=macro))
    text = result.to_text()
    click.echo(text)
    if text_out:
        Path(text_out).write_text(text + "\n", encoding="utf-8")
    if json_out:
        Path(json_out).write_text(result.to_json(), encoding="utf-8")
    if result.failures:
        logger.warning(f"{len(result.failures)} 个单元失败")


@cli.command()
@click.option('--layers', type=int, default=2, show_default=True, help='编码块数（concat4 需要 ≥4）')
@click.option('--samples', type=int, default=3, show_default=True, help='每个参数抽查的坐标数')
@click.pass_context
@handle_errors
def gradcheck(ctx, layers: int, samples: int):
    """整模型有限差分梯度检查，精度与阈值跟随全局 --precision"""
    dtype = ctx.obj["precision"]
    threshold = GRADCHECK_THRESHOLDS[dtype]
    results = run_all_grad_checks(layers=layers, seed=_seed(ctx), samples_per_param=samples, dtype=dtype)
    click.echo(f"precision={dtype} threshold={threshold:.0e}")
    failed = False
    for key, report in results.items():
        if report is None:
            click.echo(f"{key:<22} skipped (L={layers})")
            continue
        ok = report.max_relative_error < threshold
        failed = failed or not ok
        click.echo(f"{key:<22} max_rel_err={report.max_relative_error:.3e} worst={report.worst_parameter} {'ok' if ok else 'FAIL'}")
    if failed:
        logger.error(f"存在超过阈值 {threshold} 的梯度误差")
        sys.exit(1)


@cli.command('synth-data')
@click.option('--out-dir', required=True, type=click.Path(file_okay=False))
@click.option('--train-size', type=int, default=2000, show_default=True)
@click.option('--test-size', type=int, default=500, show_default=True)
@click.option('--neutral-fraction', type=float, default=0.1, show_default=True, help='原始 CSV 中中性评分的比例')
@click.option('--embedding-dim', type=int, default=settings.EMBEDDING_DIM, show_default=True)
@click.pass_context
@handle_errors
def synth_data(ctx, out_dir, train_size, test_size, neutral_fraction, embedding_dim):
    """生成合成评论语料"""
    paths = generate_synthetic_dataset(
        out_dir, n_train=train_size, n_test=test_size, seed=_seed(ctx),
        neutral_fraction=neutral_fraction, embedding_dim=embedding_dim,
    )
    for label_name, path in vars(paths).items():
        click.echo(f"{label_name}: {path}")


if __name__ == '__main__':
    cli()
