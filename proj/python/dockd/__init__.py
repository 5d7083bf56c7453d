"""Document knowledge-distillation data toolkit.

Documents, annotation records and configs are plain dicts in the same JSON
shapes the ``dockd`` CLI reads and writes.
"""

import json
from pathlib import Path

from ._core import (
    ArgumentError,
    AuthError,
    BackendError,
    CandidateError,
    DocumentError,
    Error,
    ExportError,
    ParseError,
    ReplayMiss,
    TemplateError,
    anls,
    class_desc_prompt,
    class_neg_prompt,
    class_pos_prompt,
    classify_task_prompt,
    default_excluded_categories,
    document_categories,
    entity_anls,
    entity_f1,
    entity_gen_prompt,
    entity_task_prompt,
    exact_match,
    export,
    filter,
    generate,
    kv_name_prompt,
    levenshtein,
    linearize,
    mean_accuracy,
    nls,
    parse_description,
    parse_entity_list,
    parse_kv_field,
    parse_label_list,
    parse_qa_pairs,
    raw_text,
    render_template,
    replay_line,
    sha256_hex,
    template_names,
    text_with_kv_tags,
    text_without_kv,
    validate_document,
    vqa_gen_prompt,
    vqa_task_prompt,
)

__version__ = "0.1.0"


def read_jsonl(path):
    """One JSON value per non-blank line."""
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_jsonl(path, rows):
    with Path(path).open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":"), sort_keys=True))
            f.write("\n")
