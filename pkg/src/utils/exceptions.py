"""
异常定义
所有业务异常都继承自 ViSentiError，命令行和对比矩阵只需捕获这一个基类
"""
from typing import Optional


class ViSentiError(Exception):
    """项目异常基类"""


class ShapeError(ViSentiError, ValueError):
    """张量形状不匹配"""


class DegenerateMaskError(ViSentiError, ValueError):
    """掩码把整行都屏蔽了"""


class DegenerateInputError(ViSentiError, ValueError):
    """输入退化（例如层归一化的最后一维小于2）"""


class InputValidationError(ViSentiError, ValueError):
    """输入数据不合法"""


class ContractError(ViSentiError, RuntimeError):
    """调用约定被破坏（前置条件不满足）"""


class NumericError(ViSentiError, ArithmeticError):
    """出现非有限数值"""


class ConfigError(ViSentiError, ValueError):
    """配置错误"""


class SchemaError(ViSentiError, ValueError):
    """数据列映射错误"""


class ParseError(ViSentiError, ValueError):
    """文件解析错误，带行号"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"第 {line_number} 行: {message}"
        super().__init__(message)


class IntegrityError(ViSentiError, ValueError):
    """检查点文件不完整或已损坏"""


class CheckpointVersionError(ViSentiError, ValueError):
    """检查点格式版本不匹配"""

    def __init__(self, found: int, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"检查点版本不匹配: 文件版本 {found}, 期望版本 {expected}")


class ShapeValidationError(ViSentiError, ValueError):
    """检查点中的张量形状与配置不一致"""

    def __init__(self, tensor_name: str, found, expected):
        self.tensor_name = tensor_name
        self.found = tuple(found) if found is not None else None
        self.expected = tuple(expected) if expected is not None else None
        super().__init__(f"张量 {tensor_name} 形状不一致: 实际 {self.found}, 期望 {self.expected}")
