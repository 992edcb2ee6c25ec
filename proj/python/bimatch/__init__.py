"""Bilingual dictionary induction by Viterbi EM over bipartite matchings.

Matrices are column-major word tables: ``vectors[:, i]`` is the embedding
of word ``i`` and indices follow file (frequency) order.
"""

from ._core import (
    CandidateGraph,
    EmConfig,
    EmCollapse,
    EmResult,
    EmbeddingSet,
    Error,
    IterationRecord,
    Matching,
    ModelParams,
    brute_force_matching,
    build_candidates,
    e_step_one_to_many,
    edge_weight,
    hubness,
    hungarian_dense,
    load_embeddings,
    load_model,
    make_planted_rotation,
    nearest_targets,
    normalize,
    procrustes,
    random_orthogonal,
    run_em,
    save_model,
    solve_sparse_lap,
    spearman,
    translate_top1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
