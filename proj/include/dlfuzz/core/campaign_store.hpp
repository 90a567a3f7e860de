#pragma once

// Campaign state and its on-disk form:
//
//   <workdir>/config.snapshot      resolved configuration (JSON)
//   <workdir>/oplog/NNNNNNNN.json  one record per iteration, append-only
//   <workdir>/state.snapshot       periodically rewritten fold of the log
//   <workdir>/coverage.cumulative  sorted covered line ids, one per line
//   <workdir>/bugs/<signature>.json

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlfuzz/core/coverage.hpp"
#include "dlfuzz/core/record.hpp"
#include "dlfuzz/core/types.hpp"

namespace dlfuzz {

struct StorageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptLogError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// What the next iteration needs to know about the previous one.
struct PreviousIteration {
    LoopMode mode = LoopMode::Default;
    IterationKind kind = IterationKind::Pass;
    std::vector<std::string> ops;
    std::optional<TestCase> test;
    FeedbackPayload feedback;
    std::uint64_t delta_cov = 0;
    /// Consecutive Repair iterations ending with this one.
    std::uint32_t repair_streak = 0;

    bool operator==(const PreviousIteration&) const = default;
};

struct CampaignTallies {
    std::uint64_t pass = 0;
    std::uint64_t bug_numerical = 0;
    std::uint64_t bug_behavioral = 0;
    std::uint64_t invalid = 0;
    std::uint64_t failure = 0;
    std::uint64_t repairs_attempted = 0;
    std::uint64_t repairs_succeeded = 0;
    std::uint64_t unique_numerical = 0;
    std::uint64_t unique_behavioral = 0;

    bool operator==(const CampaignTallies&) const = default;
};

struct CampaignState {
    CoverageSet cumulative_cov;
    OperatorTable op_table;
    std::uint64_t iteration = 0;
    std::uint64_t rng_seed = 0;
    std::set<std::string> bug_signatures;
    std::optional<PreviousIteration> previous;
    CampaignTallies tallies;
    double elapsed_s = 0.0;

    std::vector<std::string> last_ops() const { return previous ? previous->ops : std::vector<std::string>{}; }
    LoopMode last_mode() const { return previous ? previous->mode : LoopMode::Default; }

    bool operator==(const CampaignState&) const = default;
};

void to_json(Json& j, const PreviousIteration& p);
void from_json(const Json& j, PreviousIteration& p);
void to_json(Json& j, const CampaignTallies& t);
void from_json(const Json& j, CampaignTallies& t);
void to_json(Json& j, const CampaignState& s);
void from_json(const Json& j, CampaignState& s);

CampaignState initial_state(OperatorTable table, std::uint64_t seed);

/// Folds one record into the state. Throws std::invalid_argument (state untouched)
/// unless record.id == state.iteration.
void apply_record(CampaignState& state, const IterationRecord& record);

/// Writes `content` to a temporary sibling, syncs it and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

class CampaignStore {
  public:
    /// Creates a campaign directory. `config_snapshot` must hold "operators" (array of
    /// operator records) and "config"."seed". The directory must be absent or empty.
    static CampaignStore create(const std::filesystem::path& dir, const Json& config_snapshot,
                                std::uint64_t snapshot_interval = 10);
    static CampaignStore open(const std::filesystem::path& dir, std::uint64_t snapshot_interval = 10);

    const std::filesystem::path& dir() const { return dir_; }
    const Json& config_snapshot() const { return config_; }

    /// State before any iteration, from the config snapshot.
    CampaignState fresh_state() const;

    /// Appends `record` and folds it into `state`. The record is on disk before the
    /// state changes; on any failure the state is untouched.
    void persist_iteration(CampaignState& state, const IterationRecord& record);

    /// Rewrites state.snapshot and coverage.cumulative.
    void write_snapshot(const CampaignState& state) const;

    /// Reconstructs the state: starts from state.snapshot when it is usable, then folds
    /// the remaining log. A truncated final record is dropped with a warning; an
    /// unreadable earlier record raises CorruptLogError.
    CampaignState load() const;
    /// Same, ignoring state.snapshot.
    CampaignState load_by_full_fold() const;

    std::vector<IterationRecord> read_log() const;
    std::optional<IterationRecord> read_record(std::uint64_t id) const;

    /// Writes bugs/<signature>.json unless it exists; returns whether it was written.
    bool write_bug_report(const std::string& signature, const Json& report) const;

    std::filesystem::path record_path(std::uint64_t id) const;

  private:
    CampaignStore(std::filesystem::path dir, Json config, std::uint64_t snapshot_interval);

    std::filesystem::path dir_;
    Json config_;
    std::uint64_t snapshot_interval_;
};

/// Convenience: CampaignStore::open(dir).load().
CampaignState load_campaign(const std::filesystem::path& dir);

} // namespace dlfuzz
