#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

enum class LocalPreconditioner {
    none,
    jacobi,        ///< diagonal of the local system
    block_jacobi,  ///< diagonal in the rank indices, full in the mode index
};

struct SolveOptions {
    double eps = 1e-6;         ///< target ||Ax - b|| / ||b||
    int max_sweeps = 40;       ///< one sweep visits every core once, direction alternates
    Index max_rank = 0;        ///< 0 = unbounded
    Index kickrank = 3;        ///< rank of the residual approximation used for enrichment
    LocalPreconditioner preconditioner = LocalPreconditioner::block_jacobi;
    Index dense_threshold = 800;  ///< local systems up to this size are solved by LU
    int gmres_restart = 40;
    int gmres_max_iters = 600;
    std::uint64_t seed = 12345;
    bool verbose = false;

    void validate() const;
};

struct SolveReport {
    double residual = 0.0;  ///< ||Ax - b|| / ||b|| recomputed in TT arithmetic
    int sweeps = 0;
    std::vector<double> local_residuals;  ///< max local residual per sweep
    std::vector<Index> rank_history;      ///< max rank of x after each sweep
    double seconds = 0.0;
    bool converged = false;
    bool singular = false;
    std::string message;

    /// Lines "sweep local_residual max_rank", then a summary line.
    std::string to_log() const;
};

struct SolveResult {
    TTTensor x;
    SolveReport report;
};

SolveResult amen_solve(const TTMatrix& a, const TTTensor& b, const SolveOptions& opts = {},
                       const std::optional<TTTensor>& x0 = std::nullopt);

/// Fixed-rank alternating sweeps on the normal equations A^T A x = A^T b.
/// Each core update minimizes ||Ax - b|| over that core, so the residual
/// never increases.
TTTensor als_sweep(const TTMatrix& a, const TTTensor& b, const TTTensor& x, int sweeps = 1);

/// 1/o entrywise via amen_solve(diag(o), ones). Throws std::runtime_error
/// when the solve does not reach `eps`.
TTTensor tt_reciprocal(const TTTensor& o, double eps, SolveReport* report = nullptr);

/// ||Ax - b||_F without materializing the rank of Ax - b; stable for small residuals.
double residual_norm(const TTMatrix& a, const TTTensor& x, const TTTensor& b);

}  // namespace ttiga
