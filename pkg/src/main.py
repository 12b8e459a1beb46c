"""
viSentiBert 演示入口
合成语料 -> 词表 -> 预训练 -> 微调 -> 评估 -> 对比矩阵
"""
import asyncio
from pathlib import Path

from loguru import logger

from src.config.settings import settings
from src.models.config import EncoderConfig, FeatureView, HeadKind, HeadSpec, PretrainConfig, RunConfig, TrainConfig
from src.services.baselines import load_embedding_file
from src.services.data import generate_synthetic_dataset, read_jsonl, read_lines
from src.services.encoder import pretrain
from src.services.harness.matrix import MatrixDataset, default_rows, run_matrix
from src.services.harness.metrics import format_metrics_table
from src.services.harness.trainer import evaluate, finetune, load_model
from src.services.tokenizer import train_vocab
from src.utils.logger import setup_logger

DEMO_DIR = Path("./data/demo")


async def main():
    """主函数"""
    logger.info("启动 viSentiBert 演示流程")
    seed = settings.DEFAULT_SEED

    paths = generate_synthetic_dataset(DEMO_DIR, n_train=200, n_test=60, seed=seed)
    train, test = read_jsonl(paths.train), read_jsonl(paths.test)

    vocab = train_vocab(read_lines(paths.corpus), target_size=300)
    encoder = EncoderConfig(L=2, A=2, h=32, f=64, seq_len=32, vocab_size=len(vocab))
    pretrained = pretrain(read_lines(paths.corpus), vocab, encoder, PretrainConfig(epochs=1, batch_size=16), seed=seed)

    run = RunConfig(
        head=HeadSpec(kind=HeadKind.CLS_FFN, ffn_hidden=16, lstm_size=8, textcnn_filters=4, rcnn_size=8, rcnn_filters=8),
        train=TrainConfig(epochs=2, batch_size=16),
        seed=seed,
    )
    try:
        classifier = finetune(pretrained, run, train, vocab)
        report = evaluate(load_model(classifier, vocab, name="BERT-base"), test, dataset="synthetic")
        logger.info(f"微调结果:\n{format_metrics_table([report])}")

        table = load_embedding_file(paths.embeddings)
        dataset = MatrixDataset(
            name="synthetic", train=train, test=test, vocab=vocab, pretrained=pretrained,
            tables={table.name: table}, seq_len=encoder.seq_len,
        )
        rows = default_rows([table.name], token_view=FeatureView.LAST_LAYER, base_head=run.head)
        result = await run_matrix(rows, [dataset], run, workers=settings.MATRIX_WORKERS)
        logger.info(f"对比矩阵:\n{result.to_text()}")
    except Exception as e:
        logger.error(f"程序运行出错: {e}")


if __name__ == "__main__":
    # 配置日志
    setup_logger(level=settings.LOG_LEVEL, log_dir=settings.LOG_DIR)

    # 运行主程序
    asyncio.run(main())
