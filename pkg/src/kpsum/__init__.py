"""Keyphrase salience signals for prompt-based summarization.

Pipelines: build salience labels from document/summary pairs by
character-level fuzzy matching, select top-K deduplicated keyphrases
from any token-scoring source, inject them into summarization prompts,
and evaluate keyphrase recall@K and summary ROUGE.
"""

from .corpus import Dataset, DocumentPair, load_dataset, sample_subset, save_dataset, truncate_document
from .matching import (
    LabeledPhrase,
    MatchConfig,
    emit_training_records,
    external_oracle_keyphrases,
    fuzz,
    label_phrases,
    lcs_length,
    oracle_keyphrases,
)
from .metrics import RecallAtK, RougeScore, evaluate_run, recall_at_k, rouge1, rougeL
from .phrasing import Granularity, PhraseSpan, Token, TokenKind, segment, tokenize
from .prompting import (
    CompletionRequest,
    CompletionResponse,
    LLMEndpointConfig,
    PromptTemplate,
    bundled_template,
    bundled_template_names,
    load_template,
    render_prompt,
    run_summarization,
    two_stage_summarize,
)
from .scoring import (
    ExternalScorer,
    OracleScorer,
    RakeScorer,
    RandomScorer,
    ScoreSource,
    TextRankScorer,
    TokenScoreMap,
    load_external_scores,
    phrase_score,
    rake_score,
    textrank_score,
)
from .selection import Keyphrase, KeyphraseSet, select_keyphrases

__version__ = "0.1.0"
