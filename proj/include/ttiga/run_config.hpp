#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// Malformed configuration; what() is "<source>:<line>: <message>".
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

enum class ReferenceKind { automatic, exact, dense, none };

/// Settings of one `tt-iga run`. See README for the file format.
struct RunConfig {
    std::string case_name;
    Index params = 0;  ///< number of shape parameters (tc2 only; 0 = case default)
    std::array<Index, 3> n{16, 16, 16};
    std::array<int, 3> p{2, 2, 2};
    std::vector<Index> ell{4};  ///< one entry (all parameters) or one per parameter
    double solver_eps = 1e-8;
    double op_eps = 0.0;  ///< 0 = 0.1 * solver_eps
    double cross_tol = 1e-10;
    int max_sweeps = 40;
    Index max_rank = 0;
    bool qtt_reciprocal = false;
    bool qtt_solve = false;
    std::string output = "tt-iga-out";
    std::uint64_t seed = 99;
    ReferenceKind reference = ReferenceKind::automatic;
    std::array<Index, 3> sample_lattice{5, 5, 5};
    std::vector<double> sample_theta;  ///< empty = nominal parameters
    bool save_solution = true;
    bool save_operator = false;

    /// ell expanded to one entry per parameter.
    std::vector<Index> ell_for(Index num_params) const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated
/// keys and out-of-range values throw ConfigError with the line number.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Keys accepted by parse_config, in documentation order.
const std::vector<std::string>& config_keys();

}  // namespace ttiga
