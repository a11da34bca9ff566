"""Procedural desk-scale datasets and task metrics."""
from .io import load_dataset, save_dataset
from .metrics import answer_accuracy, bleu, corpus_bleu, recall_at_k
from .retrieval import RetrievalDataset, gen_retrieval
from .translation import ParallelCorpus, ToyGrammar, gen_translation
from .vqa import ANSWERS, VqaDataset, gen_vqa, oracle_answer

__all__ = [
    "load_dataset", "save_dataset", "answer_accuracy", "bleu", "corpus_bleu", "recall_at_k",
    "RetrievalDataset", "gen_retrieval", "ParallelCorpus", "ToyGrammar", "gen_translation",
    "ANSWERS", "VqaDataset", "gen_vqa", "oracle_answer",
]
