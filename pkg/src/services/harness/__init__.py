"""
训练与评估编排：检查点、指标、微调、对比矩阵
子模块互相依赖编码器与分类头，这里不做包级导入，请直接从子模块导入
"""
