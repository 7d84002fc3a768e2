"""Compositional zero-shot action recognition lab.

Synthetic compositional video data, composition-aware augmentation,
temporal-order regularization, and the diagnostic metric suite, backed by
the C++ core.
"""

from ._rcore import (  # noqa: F401
    AnnotationRecord,
    Benchmark,
    Clip,
    CompositionSpace,
    CoOccurrenceStats,
    EvalReport,
    SynthConfig,
    auc_seen_unseen,
    build_cooccurrence,
    compositional_gap,
    estimate_motion_region,
    fcp_ratio,
    fig2a_synth_config,
    fig2b_synth_config,
    fsp_ratio,
    generate_clip,
    grad_check_losses,
    harmonic_mean,
    make_benchmark,
    make_clip,
    opposite_verb,
    preset_names,
    run_preset,
    sample_lambda,
    skewed_synth_config,
    synth_object_name,
    synth_verb_name,
    train_and_evaluate,
    vocamix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
