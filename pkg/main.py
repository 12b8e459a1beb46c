#!/usr/bin/env python3
"""
viSentiBert 主启动文件
统一启动入口，转发到命令行工具
"""
import sys
from pathlib import Path

# 添加项目根目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import cli


def main():
    """主函数"""
    cli(prog_name="visenti")


if __name__ == '__main__':
    main()
