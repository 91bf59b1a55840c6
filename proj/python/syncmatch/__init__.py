"""Multiview RGB-D registration: matching, WP-RANSAC and pose synchronization."""

from ._syncmatch import (
    AlignmentResult,
    Correspondence,
    CorrespondenceSet,
    FeaturePointcloud,
    PoseGraph,
    RansacConfig,
    RigidTransform,
    SceneRegistration,
    SyncMatchError,
    SyntheticScene,
    __version__,
    error_auc,
    fix_gauge,
    generate_scene,
    match_gart,
    match_ratio_test,
    mean_pose_error,
    observe,
    pose_errors,
    register,
    synchronize_eig,
    synchronize_naive,
    synchronize_power,
    weighted_procrustes,
    wp_ransac,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
