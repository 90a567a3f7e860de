#pragma once

// Feedback-aware operator selection: each operator is valued from its use count,
// exception count and attributed new coverage, and a simulated annealer searches
// for a small operator subset with high mean value.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dlfuzz/core/types.hpp"

namespace dlfuzz {

using Rng = std::mt19937_64;

struct SAParams {
    double t0 = 100.0;
    int ns = 10;
    double gamma = 0.99;
    double t_min = 0.01;
    int k_min = 1;
    int k_max = 3;
    double alpha = 0.5;
    double beta = 0.5;
    /// Draw candidates by swapping one member of the current sequence instead of
    /// drawing an independent subset. Off by default.
    bool neighborhood_moves = false;

    /// Throws std::invalid_argument unless 0 < gamma < 1, 0 < t_min < t0, ns > 0 and
    /// 1 <= k_min <= k_max.
    void validate() const;

    bool operator==(const SAParams&) const = default;
};

void to_json(Json& j, const SAParams& p);
void from_json(const Json& j, SAParams& p);

/// V(x, y, z) = alpha / (alpha + x) + alpha / e^y + beta - e^(-z / 100).
double op_value(std::uint64_t used_times, std::uint64_t exp_count, std::uint64_t cov_count, double alpha,
                double beta);

inline double op_value(const OperatorRecord& r, const SAParams& p) {
    return op_value(r.used_times, r.exp_count, r.cov_count, p.alpha, p.beta);
}

/// Mean operator value over `seq`. Throws std::out_of_range for an operator missing
/// from the table.
double fitness(std::span<const std::string> seq, const OperatorTable& table, const SAParams& params);

/// Charges the operators of the previous iteration: each gets one use, one exception
/// when `exception_occurred`, and the full coverage delta.
void update_stats(OperatorTable& table, std::span<const std::string> last_ops, std::uint64_t delta_cov,
                  bool exception_occurred);

/// Metropolis rule: accept when delta >= 0, otherwise with probability e^(delta / T).
bool metropolis_accept(double delta_fitness, double temperature, Rng& rng);

/// k distinct operator names drawn uniformly without replacement.
std::vector<std::string> random_subset(const std::vector<std::string>& op_set, std::size_t k, Rng& rng);

struct AnnealStats {
    std::uint64_t temperature_steps = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t accepted = 0;
    double initial_fitness = 0.0;
    double final_fitness = 0.0;
    std::vector<std::string> initial;
};

std::vector<std::string> simulated_annealing(const std::vector<std::string>& op_set, const OperatorTable& table,
                                             const SAParams& params, Rng& rng, AnnealStats* stats = nullptr);

/// Inputs of one selection step.
struct SelectionRequest {
    std::uint64_t delta_cov = 0;
    bool exception_occurred = false;
    bool repair_pending = false;
    std::vector<std::string> last_ops;
};

/// One selection step. With `repair_pending` the previous operators are returned and
/// nothing is charged; otherwise the previous operators are charged via update_stats
/// and a fresh sequence is annealed.
std::vector<std::string> ops_selection(const SelectionRequest& request, const std::vector<std::string>& op_set,
                                       OperatorTable& table, const SAParams& params, Rng& rng);

/// Operator-set files are JSON Lines: {"name": ..., "signature": ...}. Blank lines and
/// lines starting with '#' are ignored.
std::vector<OperatorRecord> load_operator_set(const std::filesystem::path& path);
std::vector<OperatorRecord> parse_operator_set(std::string_view text);

} // namespace dlfuzz
