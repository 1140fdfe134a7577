"""Neonatal face and landmark detection benchmarking toolkit."""

from ._neoface import (
    BBox,
    Backend,
    BackendError,
    ConfigError,
    Dataset,
    Error,
    FileBackend,
    GeometryError,
    MockBackend,
    NoInformationError,
    Orientation,
    ParseError,
    Point,
    SampleRejected,
    SubprocessBackend,
    ValidationError,
    all_orientations,
    ap_at,
    apply_augmentation,
    augment_config,
    augment_sample,
    build_report,
    compose,
    draw_params,
    empty_rate,
    export_augmented,
    inverse,
    iou,
    landmark_names,
    map_range,
    norm_error,
    read_image,
    render_table,
    rotate_bbox,
    rotate_image,
    rotate_point,
    rotated_dims,
    run_direct,
    run_evaluation,
    run_fusion_guided,
    run_fusion_max,
    run_orient4,
    select_best,
    unrotate_bbox,
    unrotate_point,
    wilcoxon_signed_rank,
    write_image,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
