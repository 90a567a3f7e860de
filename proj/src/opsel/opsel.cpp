#include "dlfuzz/opsel/opsel.hpp"

#include <algorithm>
#include <cmath>

namespace dlfuzz {

void SAParams::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("SA gamma must lie in (0, 1)");
    if (!(t_min > 0.0 && t_min < t0)) throw std::invalid_argument("SA t_min must lie in (0, t0)");
    if (ns <= 0) throw std::invalid_argument("SA ns must be positive");
    if (k_min < 1 || k_min > k_max) throw std::invalid_argument("SA requires 1 <= k_min <= k_max");
    if (!(alpha > 0.0) || !(beta >= 0.0)) throw std::invalid_argument("SA alpha must be positive, beta nonnegative");
}

void to_json(Json& j, const SAParams& p) {
    j = Json{{"t0", p.t0},       {"ns", p.ns},       {"gamma", p.gamma}, {"t_min", p.t_min},
             {"k_min", p.k_min}, {"k_max", p.k_max}, {"alpha", p.alpha}, {"beta", p.beta},
             {"neighborhood_moves", p.neighborhood_moves}};
}

void from_json(const Json& j, SAParams& p) {
    SAParams d;
    p.t0 = j.value("t0", d.t0);
    p.ns = j.value("ns", d.ns);
    p.gamma = j.value("gamma", d.gamma);
    p.t_min = j.value("t_min", d.t_min);
    p.k_min = j.value("k_min", d.k_min);
    p.k_max = j.value("k_max", d.k_max);
    p.alpha = j.value("alpha", d.alpha);
    p.beta = j.value("beta", d.beta);
    p.neighborhood_moves = j.value("neighborhood_moves", d.neighborhood_moves);
}

double op_value(std::uint64_t used_times, std::uint64_t exp_count, std::uint64_t cov_count, double alpha,
                double beta) {
    const double x = static_cast<double>(used_times);
    const double y = static_cast<double>(exp_count);
    const double z = static_cast<double>(cov_count);
    return alpha / (alpha + x) + alpha / std::exp(y) + beta - std::exp(-z / 100.0);
}

double fitness(std::span<const std::string> seq, const OperatorTable& table, const SAParams& params) {
    if (seq.empty()) throw std::invalid_argument("fitness of an empty sequence");
    double sum = 0.0;
    for (const auto& name : seq) sum += op_value(table.at(name), params);
    return sum / static_cast<double>(seq.size());
}

void update_stats(OperatorTable& table, std::span<const std::string> last_ops, std::uint64_t delta_cov,
                  bool exception_occurred) {
    for (const auto& name : last_ops) {
        auto& r = table.at(name);
        r.used_times += 1;
        r.exp_count += exception_occurred ? 1 : 0;
        r.cov_count += delta_cov;
    }
}

bool metropolis_accept(double delta_fitness, double temperature, Rng& rng) {
    if (delta_fitness >= 0.0) return true;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return unit(rng) < std::exp(delta_fitness / temperature);
}

std::vector<std::string> random_subset(const std::vector<std::string>& op_set, std::size_t k, Rng& rng) {
    const std::size_t n = op_set.size();
    if (k > n) throw std::invalid_argument("subset larger than operator set");
    // Floyd's algorithm; O(k) draws independent of n.
    std::vector<std::size_t> picked;
    picked.reserve(k);
    for (std::size_t j = n - k; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        std::size_t t = dist(rng);
        if (std::find(picked.begin(), picked.end(), t) != picked.end()) t = j;
        picked.push_back(t);
    }
    std::shuffle(picked.begin(), picked.end(), rng);
    std::vector<std::string> out;
    out.reserve(k);
    for (auto i : picked) out.push_back(op_set[i]);
    return out;
}

namespace {

std::vector<std::string> neighbor(const std::vector<std::string>& cur, const std::vector<std::string>& op_set,
                                  Rng& rng) {
    if (op_set.size() <= cur.size()) return cur;
    auto next = cur;
    std::uniform_int_distribution<std::size_t> slot(0, cur.size() - 1);
    std::uniform_int_distribution<std::size_t> pick(0, op_set.size() - 1);
    std::size_t s = slot(rng);
    for (;;) {
        const auto& cand = op_set[pick(rng)];
        if (std::find(cur.begin(), cur.end(), cand) == cur.end()) {
            next[s] = cand;
            return next;
        }
    }
}

} // namespace

std::vector<std::string> simulated_annealing(const std::vector<std::string>& op_set, const OperatorTable& table,
                                             const SAParams& params, Rng& rng, AnnealStats* stats) {
    if (op_set.size() < static_cast<std::size_t>(params.k_min))
        throw std::invalid_argument("operator set smaller than k_min");

    const int k_hi = std::min<int>(params.k_max, static_cast<int>(op_set.size()));
    std::uniform_int_distribution<int> k_dist(params.k_min, k_hi);
    const auto k = static_cast<std::size_t>(k_dist(rng));

    auto cur = random_subset(op_set, k, rng);
    double cur_fit = fitness(cur, table, params);
    AnnealStats local;
    local.initial = cur;
    local.initial_fitness = cur_fit;

    for (double t = params.t0; t >= params.t_min; t *= params.gamma) {
        ++local.temperature_steps;
        for (int n = 0; n < params.ns; ++n) {
            auto cand = params.neighborhood_moves ? neighbor(cur, op_set, rng) : random_subset(op_set, k, rng);
            const double cand_fit = fitness(cand, table, params);
            ++local.evaluations;
            if (metropolis_accept(cand_fit - cur_fit, t, rng)) {
                cur = std::move(cand);
                cur_fit = cand_fit;
                ++local.accepted;
            }
        }
    }

    local.final_fitness = cur_fit;
    if (stats) *stats = std::move(local);
    return cur;
}

std::vector<std::string> ops_selection(const SelectionRequest& request, const std::vector<std::string>& op_set,
                                       OperatorTable& table, const SAParams& params, Rng& rng) {
    if (op_set.empty()) throw std::invalid_argument("empty operator set");
    if (request.repair_pending) {
        if (request.last_ops.empty()) throw std::logic_error("repair requested without previous operators");
        return request.last_ops;
    }
    update_stats(table, request.last_ops, request.delta_cov, request.exception_occurred);
    return simulated_annealing(op_set, table, params, rng);
}

} // namespace dlfuzz
