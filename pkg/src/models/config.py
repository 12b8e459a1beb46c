"""
模型与运行配置
"""
from enum import Enum
from typing import Dict, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from src.config.settings import settings
from src.utils.exceptions import ConfigError


class EncoderConfig(BaseModel):
    """编码器规模：L 个编码块、A 个注意力头、隐藏维 h、前馈维 f"""
    L: int = Field(default=settings.ENCODER_L, ge=1)
    A: int = Field(default=settings.ENCODER_A, ge=1)
    h: int = Field(default=settings.ENCODER_H, ge=2)
    f: int = Field(default=settings.ENCODER_F, ge=1)
    seq_len: int = Field(default=settings.SEQ_LEN, ge=2)
    vocab_size: int = Field(default=settings.VOCAB_SIZE, ge=6)
    dropout_rate: float = Field(default=settings.DROPOUT_RATE, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_sizes(self):
        if self.h % self.A != 0:
            raise ValueError(f"隐藏维 h={self.h} 必须能被注意力头数 A={self.A} 整除")
        if self.f < self.h:
            raise ValueError(f"前馈维 f={self.f} 不能小于隐藏维 h={self.h}")
        return self

    @property
    def head_dim(self) -> int:
        return self.h // self.A

    @classmethod
    def bert_base(cls, vocab_size: int, seq_len: int = 512) -> "EncoderConfig":
        return cls(L=12, A=12, h=768, f=3072, seq_len=seq_len, vocab_size=vocab_size, dropout_rate=0.1)

    @classmethod
    def bert_large(cls, vocab_size: int, seq_len: int = 512) -> "EncoderConfig":
        return cls(L=24, A=16, h=1024, f=4096, seq_len=seq_len, vocab_size=vocab_size, dropout_rate=0.1)


class FeatureView(str, Enum):
    """分类头读取的隐藏层视图"""
    LAST_LAYER = "last"
    CONCAT_LAST_4 = "concat4"
    SECOND_TO_LAST = "second_to_last"
    EMBEDDINGS = "embeddings"
    SUM_LAST_4 = "sum4"
    SUM_ALL = "sum_all"

    @property
    def min_layers(self) -> int:
        if self in (FeatureView.CONCAT_LAST_4, FeatureView.SUM_LAST_4):
            return 4
        if self is FeatureView.SECOND_TO_LAST:
            return 2
        return 1

    def feature_dim(self, h: int) -> int:
        return 4 * h if self is FeatureView.CONCAT_LAST_4 else h


class HeadKind(str, Enum):
    """分类头类型"""
    CLS_FFN = "cls_ffn"
    LSTM = "lstm"
    TEXTCNN = "textcnn"
    RCNN = "rcnn"


class HeadSpec(BaseModel):
    """分类头及其尺寸"""
    kind: HeadKind = HeadKind.CLS_FFN
    view: FeatureView = FeatureView.LAST_LAYER
    ffn_hidden: int = Field(default=settings.HEAD_FFN_HIDDEN, ge=1)
    lstm_size: int = Field(default=settings.HEAD_LSTM_SIZE, ge=1)
    textcnn_filters: int = Field(default=settings.HEAD_TEXTCNN_FILTERS, ge=1)
    region_sizes: Tuple[int, ...] = (2, 3, 4, 5)
    rcnn_size: int = Field(default=settings.HEAD_RCNN_SIZE, ge=1)
    rcnn_filters: int = Field(default=settings.HEAD_RCNN_FILTERS, ge=1)
    rcnn_width: int = Field(default=1, ge=1)
    dropout_rate: float = Field(default=settings.HEAD_DROPOUT, ge=0.0, lt=1.0)

    @field_validator("region_sizes")
    @classmethod
    def _positive_regions(cls, value):
        if not value or any(r < 1 for r in value):
            raise ValueError(f"区域大小必须为正整数: {value}")
        return tuple(value)

    def check_against(self, config: EncoderConfig) -> None:
        """检查与编码器配置是否兼容"""
        if config.L < self.view.min_layers:
            raise ConfigError(f"特征视图 {self.view.value} 需要至少 {self.view.min_layers} 个编码块，当前 L={config.L}")
        if self.kind is HeadKind.TEXTCNN and max(self.region_sizes) > config.seq_len:
            raise ConfigError(f"最大区域大小 {max(self.region_sizes)} 超过 SEQ_LEN={config.seq_len}")
        if self.kind is HeadKind.RCNN and self.rcnn_width > config.seq_len:
            raise ConfigError(f"RCNN 卷积宽度 {self.rcnn_width} 超过 SEQ_LEN={config.seq_len}")


class PretrainConfig(BaseModel):
    """掩码语言模型预训练超参数"""
    learning_rate: float = Field(default=settings.PRETRAIN_LR, gt=0)
    batch_size: int = Field(default=settings.PRETRAIN_BATCH, ge=1)
    epochs: int = Field(default=settings.PRETRAIN_EPOCHS, ge=1)
    max_steps: Optional[int] = Field(default=None, ge=1)
    mask_probability: float = Field(default=settings.MLM_PROBABILITY, gt=0.0, lt=1.0)


class TrainConfig(BaseModel):
    """微调超参数"""
    learning_rate: float = Field(default=settings.TRAIN_LR, gt=0)
    batch_size: int = Field(default=settings.TRAIN_BATCH, ge=1)
    epochs: int = Field(default=settings.TRAIN_EPOCHS, ge=1)
    early_stop: bool = False


class RunConfig(BaseModel):
    """
    一次预训练/微调/评估运行的完整配置
    encoder 只记录显式给出的编码器字段，vocab_size 由词表决定
    """
    encoder: Dict[str, Union[int, float]] = Field(default_factory=dict)
    head: HeadSpec = Field(default_factory=HeadSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    frozen_encoder: bool = False
    seed: int = settings.DEFAULT_SEED
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    vocab_path: Optional[str] = None
    pretrained_path: Optional[str] = None

    @field_validator("encoder")
    @classmethod
    def _known_encoder_fields(cls, value):
        unknown = set(value) - set(EncoderConfig.model_fields)
        if unknown:
            raise ValueError(f"未知的编码器字段: {sorted(unknown)}")
        return value

    def encoder_config(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(**{**self.encoder, "vocab_size": vocab_size})

    def check_encoder(self, config: EncoderConfig) -> None:
        """显式给出的编码器字段必须与检查点一致"""
        for key, value in self.encoder.items():
            if getattr(config, key) != value:
                raise ConfigError(f"运行配置 encoder.{key}={value} 与检查点中的 {getattr(config, key)} 不一致")
