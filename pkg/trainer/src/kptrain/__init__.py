"""Token-salience classifier trainer.

Consumes salience-labeled training records (JSONL), fine-tunes a small
transformer token classifier with a class-weighted cross entropy, picks
checkpoints by keyphrase recall@K computed through the extraction
pipeline's CLI, and exports per-word logits in that pipeline's wire
format.
"""

from .align import align_labels
from .export import document_word_logits, export_logits
from .loss import token_salience_loss
from .model import TokenClassifier
from .records import read_dataset, read_training_records
from .subwords import Subword, encode, subword_spans, word_spans
from .train import TrainerConfig, load_checkpoint, save_checkpoint, train, validation_recall

__version__ = "0.1.0"
