"""
项目配置文件
所有默认值都可以通过环境变量或 .env 覆盖
"""
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """项目配置类"""

    # 项目基础配置
    PROJECT_NAME: str = "viSentiBert"
    VERSION: str = "0.1.0"
    DEBUG: bool = False

    # 日志配置
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "./logs"

    # 运行默认值
    DEFAULT_SEED: int = 42
    DEFAULT_PRECISION: Literal["f32", "f64"] = "f32"

    # 编码器默认规模（桌面级）
    ENCODER_L: int = 4
    ENCODER_A: int = 4
    ENCODER_H: int = 64
    ENCODER_F: int = 256
    SEQ_LEN: int = 128
    DROPOUT_RATE: float = 0.1
    INIT_STD: float = 0.02

    # 分词器配置
    VOCAB_SIZE: int = 2000
    VOCAB_MIN_FREQUENCY: int = 2

    # 掩码语言模型预训练
    PRETRAIN_LR: float = 1e-3
    PRETRAIN_EPOCHS: int = 3
    PRETRAIN_BATCH: int = 16
    MLM_PROBABILITY: float = 0.15

    # 微调配置
    TRAIN_LR: float = 5e-4
    TRAIN_EPOCHS: int = 3
    TRAIN_BATCH: int = 16

    # 分类头默认尺寸
    HEAD_FFN_HIDDEN: int = 64
    HEAD_LSTM_SIZE: int = 32
    HEAD_TEXTCNN_FILTERS: int = 25
    HEAD_RCNN_SIZE: int = 32
    HEAD_RCNN_FILTERS: int = 32
    HEAD_DROPOUT: float = 0.1

    # 基线模型配置
    SVM_REG: float = 1e-4
    SVM_EPOCHS: int = 10
    NGRAM_MIN_DF: int = 2
    EMBEDDING_DIM: int = 32

    # 对比矩阵并发数
    MATRIX_WORKERS: int = 1

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")


# 全局配置实例
settings = Settings()
