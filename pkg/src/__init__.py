"""
viSentiBert - 越南语评论情感分析：迷你 BERT 微调与基线模型对比
"""

__version__ = "0.1.0"
__author__ = "viSentiBert Team"
