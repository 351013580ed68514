"""Figurative-language reasoning distillation and RLVR toolkit."""

from .styles import (
    StyleId,
    TemplateKind,
    FigurativeStyle,
    PromptTemplate,
    list_styles,
    get_style,
    render_prompt,
    compose_prompt,
)
from .trace_parser import (
    CotTrace,
    TaggedOutput,
    FilterReport,
    RejectReason,
    parse_teacher_trace,
    parse_tagged_output,
    filter_corpus,
)
from .rewards import (
    RewardBreakdown,
    total_reward,
    score_batch,
)
from .grpo import (
    GrpoConfig,
    SftConfig,
    RolloutGroup,
    TrainReport,
    group_advantages,
    grpo_loss_and_grad,
    sample_rollouts,
    sft_warmup,
    train_grpo,
)
from .gateway import (
    GenerationRequest,
    GenerationOutput,
    GatewayClient,
    GatewaySettings,
    MockModel,
    generate,
)
from .dataset_io import (
    Sample,
    DistilledRecord,
    ingest,
    split,
    fixed_budget_sample,
    read_corpus,
    write_corpus,
)
from .evaluation import (
    Metrics,
    TransferGainMatrix,
    DisagreementReport,
    evaluate,
    transfer_gain_matrix,
    disagreement_report,
    emit_report,
)
from .config import Config, RunConfig
from .manifest import RunManifest
from .pipeline import Pipeline, run, validate

__all__ = [
    # Styles and prompts
    "StyleId",
    "TemplateKind",
    "FigurativeStyle",
    "PromptTemplate",
    "list_styles",
    "get_style",
    "render_prompt",
    "compose_prompt",
    # Trace parsing
    "CotTrace",
    "TaggedOutput",
    "FilterReport",
    "RejectReason",
    "parse_teacher_trace",
    "parse_tagged_output",
    "filter_corpus",
    # Rewards
    "RewardBreakdown",
    "total_reward",
    "score_batch",
    # GRPO
    "GrpoConfig",
    "SftConfig",
    "RolloutGroup",
    "TrainReport",
    "group_advantages",
    "grpo_loss_and_grad",
    "sample_rollouts",
    "sft_warmup",
    "train_grpo",
    # Model gateway
    "GenerationRequest",
    "GenerationOutput",
    "GatewayClient",
    "GatewaySettings",
    "MockModel",
    "generate",
    # Datasets
    "Sample",
    "DistilledRecord",
    "ingest",
    "split",
    "fixed_budget_sample",
    "read_corpus",
    "write_corpus",
    # Evaluation
    "Metrics",
    "TransferGainMatrix",
    "DisagreementReport",
    "evaluate",
    "transfer_gain_matrix",
    "disagreement_report",
    "emit_report",
    # Runs
    "Config",
    "RunConfig",
    "RunManifest",
    "Pipeline",
    "run",
    "validate",
]
