"""
非 BERT 基线：n-gram 线性 SVM，静态词向量 + 分类头
"""
from .ngram import NGramFeaturizer, extract_ngrams, featurize
from .svm import LinearSvm, fit_linear_svm, hinge_loss, hinge_subgradient, train_linear_svm
from .embeddings import EmbeddingTable, StaticSequence, load_embedding_file, random_embedding_table, static_embed_sequence

__all__ = [
    'NGramFeaturizer', 'extract_ngrams', 'featurize', 'LinearSvm', 'fit_linear_svm', 'hinge_loss',
    'hinge_subgradient', 'train_linear_svm', 'EmbeddingTable', 'StaticSequence', 'load_embedding_file',
    'random_embedding_table', 'static_embed_sequence',
]
