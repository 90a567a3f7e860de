#include "dlfuzz/core/campaign_store.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "dlfuzz/opsel/opsel.hpp"

namespace fs = std::filesystem;

namespace dlfuzz {

void to_json(Json& j, const PreviousIteration& p) {
    j = Json{{"mode", to_string(p.mode)},   {"kind", to_string(p.kind)},           {"ops", p.ops},
             {"feedback", p.feedback},      {"delta_cov", p.delta_cov},            {"repair_streak", p.repair_streak}};
    if (p.test) j["test"] = *p.test;
}

void from_json(const Json& j, PreviousIteration& p) {
    p.mode = loop_mode_from_string(j.at("mode").get<std::string>());
    p.kind = iteration_kind_from_string(j.at("kind").get<std::string>());
    p.ops = j.at("ops").get<std::vector<std::string>>();
    p.feedback = j.at("feedback").get<FeedbackPayload>();
    p.delta_cov = j.at("delta_cov").get<std::uint64_t>();
    p.repair_streak = j.at("repair_streak").get<std::uint32_t>();
    p.test.reset();
    if (j.contains("test")) p.test = j.at("test").get<TestCase>();
}

void to_json(Json& j, const CampaignTallies& t) {
    j = Json{{"pass", t.pass},
             {"bug_numerical", t.bug_numerical},
             {"bug_behavioral", t.bug_behavioral},
             {"invalid", t.invalid},
             {"failure", t.failure},
             {"repairs_attempted", t.repairs_attempted},
             {"repairs_succeeded", t.repairs_succeeded},
             {"unique_numerical", t.unique_numerical},
             {"unique_behavioral", t.unique_behavioral}};
}

void from_json(const Json& j, CampaignTallies& t) {
    t.pass = j.at("pass").get<std::uint64_t>();
    t.bug_numerical = j.at("bug_numerical").get<std::uint64_t>();
    t.bug_behavioral = j.at("bug_behavioral").get<std::uint64_t>();
    t.invalid = j.at("invalid").get<std::uint64_t>();
    t.failure = j.at("failure").get<std::uint64_t>();
    t.repairs_attempted = j.at("repairs_attempted").get<std::uint64_t>();
    t.repairs_succeeded = j.at("repairs_succeeded").get<std::uint64_t>();
    t.unique_numerical = j.at("unique_numerical").get<std::uint64_t>();
    t.unique_behavioral = j.at("unique_behavioral").get<std::uint64_t>();
}

void to_json(Json& j, const CampaignState& s) {
    j = Json{{"iteration", s.iteration},
             {"rng_seed", s.rng_seed},
             {"op_table", s.op_table.records()},
             {"cumulative_cov", s.cumulative_cov.lines()},
             {"bug_signatures", s.bug_signatures},
             {"tallies", s.tallies},
             {"elapsed_s", s.elapsed_s}};
    if (s.previous) j["previous"] = *s.previous;
}

void from_json(const Json& j, CampaignState& s) {
    s.iteration = j.at("iteration").get<std::uint64_t>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.op_table = OperatorTable(j.at("op_table").get<std::vector<OperatorRecord>>());
    auto lines = j.at("cumulative_cov").get<std::vector<std::string>>();
    s.cumulative_cov = CoverageSet(lines.begin(), lines.end());
    s.bug_signatures = j.at("bug_signatures").get<std::set<std::string>>();
    s.tallies = j.at("tallies").get<CampaignTallies>();
    s.elapsed_s = j.at("elapsed_s").get<double>();
    s.previous.reset();
    if (j.contains("previous")) s.previous = j.at("previous").get<PreviousIteration>();
}

CampaignState initial_state(OperatorTable table, std::uint64_t seed) {
    CampaignState s;
    s.op_table = std::move(table);
    s.rng_seed = seed;
    return s;
}

void apply_record(CampaignState& state, const IterationRecord& record) {
    if (record.id != state.iteration)
        throw std::invalid_argument("record id " + std::to_string(record.id) + " does not match iteration " +
                                    std::to_string(state.iteration));
    if (coverage_delta(record.covered, state.cumulative_cov) != record.delta_cov)
        throw std::invalid_argument("record " + std::to_string(record.id) + " delta_cov disagrees with its coverage");

    CampaignState next = state;
    if (record.charge) update_stats(next.op_table, record.charge->ops, record.charge->delta_cov, record.charge->exception);
    next.cumulative_cov.merge(record.covered);

    const auto kind = record.kind();
    auto& t = next.tallies;
    switch (kind) {
    case IterationKind::Pass: ++t.pass; break;
    case IterationKind::Bug:
        if (record.outcome->classification == Classification::BugNumerical)
            ++t.bug_numerical;
        else
            ++t.bug_behavioral;
        break;
    case IterationKind::Invalid: ++t.invalid; break;
    case IterationKind::Failure: ++t.failure; break;
    }
    if (record.mode == LoopMode::Repair) {
        ++t.repairs_attempted;
        if (kind == IterationKind::Pass || kind == IterationKind::Bug) ++t.repairs_succeeded;
    }
    if (record.outcome && record.outcome->signature && next.bug_signatures.insert(*record.outcome->signature).second) {
        if (record.outcome->classification == Classification::BugNumerical)
            ++t.unique_numerical;
        else
            ++t.unique_behavioral;
    }

    PreviousIteration prev;
    prev.mode = record.mode;
    prev.kind = kind;
    prev.ops = record.selected_ops;
    prev.test = record.test;
    prev.feedback = record.feedback;
    prev.delta_cov = record.delta_cov;
    prev.repair_streak =
        record.mode == LoopMode::Repair ? (state.previous ? state.previous->repair_streak : 0) + 1 : 0;
    next.previous = std::move(prev);
    next.iteration += 1;
    next.elapsed_s += record.wall_time_s;
    state = std::move(next);
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw StorageError("cannot write " + tmp.string() + ": " + std::strerror(errno));
    std::size_t off = 0;
    while (off < content.size()) {
        ssize_t n = ::write(fd, content.data() + off, content.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            throw StorageError("write failed on " + tmp.string() + ": " + std::strerror(err));
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0)
        throw StorageError("cannot flush " + tmp.string() + ": " + std::strerror(errno));
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw StorageError("cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

CampaignStore::CampaignStore(fs::path dir, Json config, std::uint64_t snapshot_interval)
    : dir_(std::move(dir)), config_(std::move(config)), snapshot_interval_(snapshot_interval ? snapshot_interval : 1) {}

CampaignStore CampaignStore::create(const fs::path& dir, const Json& config_snapshot, std::uint64_t snapshot_interval) {
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_empty(dir, ec))
        throw StorageError("campaign directory is not empty: " + dir.string());
    if (!config_snapshot.contains("operators") || !config_snapshot.contains("config"))
        throw std::invalid_argument("config snapshot lacks operators or config");
    fs::create_directories(dir / "oplog", ec);
    if (ec) throw StorageError("cannot create " + (dir / "oplog").string() + ": " + ec.message());
    fs::create_directories(dir / "bugs", ec);
    if (ec) throw StorageError("cannot create " + (dir / "bugs").string() + ": " + ec.message());
    write_file_atomic(dir / "config.snapshot", config_snapshot.dump(2) + "\n");
    CampaignStore store(dir, config_snapshot, snapshot_interval);
    store.write_snapshot(store.fresh_state());
    return store;
}

CampaignStore CampaignStore::open(const fs::path& dir, std::uint64_t snapshot_interval) {
    const auto cfg = dir / "config.snapshot";
    if (!fs::exists(cfg)) throw StorageError("not a campaign directory (no config.snapshot): " + dir.string());
    Json j;
    try {
        j = Json::parse(slurp(cfg));
    } catch (const Json::parse_error& e) {
        throw CorruptLogError("config.snapshot: " + std::string(e.what()));
    }
    return CampaignStore(dir, std::move(j), snapshot_interval);
}

CampaignState CampaignStore::fresh_state() const {
    auto ops = config_.at("operators").get<std::vector<OperatorRecord>>();
    return initial_state(OperatorTable(std::move(ops)), config_.at("config").at("seed").get<std::uint64_t>());
}

fs::path CampaignStore::record_path(std::uint64_t id) const {
    char name[32];
    std::snprintf(name, sizeof name, "%08llu.json", static_cast<unsigned long long>(id));
    return dir_ / "oplog" / name;
}

void CampaignStore::persist_iteration(CampaignState& state, const IterationRecord& record) {
    if (record.id != state.iteration)
        throw std::invalid_argument("record id " + std::to_string(record.id) + " does not match iteration " +
                                    std::to_string(state.iteration));
    CampaignState next = state;
    apply_record(next, record);
    write_file_atomic(record_path(record.id), Json(record).dump(1) + "\n");
    state = std::move(next);
    if (state.iteration % snapshot_interval_ == 0) write_snapshot(state);
}

void CampaignStore::write_snapshot(const CampaignState& state) const {
    write_file_atomic(dir_ / "state.snapshot", Json(state).dump(1) + "\n");
    std::string cov;
    for (const auto& line : state.cumulative_cov) {
        cov += line;
        cov += '\n';
    }
    write_file_atomic(dir_ / "coverage.cumulative", cov);
}

std::vector<IterationRecord> CampaignStore::read_log() const {
    std::vector<IterationRecord> out;
    std::uint64_t count = 0;
    while (fs::exists(record_path(count))) ++count;

    // A record file beyond the contiguous run means a gap in the log.
    for (const auto& entry : fs::directory_iterator(dir_ / "oplog")) {
        const auto stem = entry.path().stem().string();
        if (entry.path().extension() != ".json" || stem.empty() ||
            stem.find_first_not_of("0123456789") != std::string::npos)
            continue;
        if (std::stoull(stem) >= count) throw CorruptLogError("oplog has a gap before " + entry.path().string());
    }

    for (std::uint64_t id = 0; id < count; ++id) {
        const auto path = record_path(id);
        try {
            auto rec = Json::parse(slurp(path)).get<IterationRecord>();
            if (rec.id != id) throw std::invalid_argument("record id does not match its file name");
            out.push_back(std::move(rec));
        } catch (const std::exception& e) {
            if (id + 1 == count) {
                std::cerr << "warning: dropping truncated final record " << path.string() << ": " << e.what() << '\n';
                std::error_code ec;
                fs::remove(path, ec);
                break;
            }
            throw CorruptLogError("corrupt record " + path.string() + ": " + e.what());
        }
    }
    return out;
}

std::optional<IterationRecord> CampaignStore::read_record(std::uint64_t id) const {
    const auto path = record_path(id);
    if (!fs::exists(path)) return std::nullopt;
    try {
        return Json::parse(slurp(path)).get<IterationRecord>();
    } catch (const std::exception& e) {
        throw CorruptLogError("corrupt record " + path.string() + ": " + e.what());
    }
}

CampaignState CampaignStore::load_by_full_fold() const {
    auto state = fresh_state();
    for (const auto& rec : read_log()) {
        try {
            apply_record(state, rec);
        } catch (const std::invalid_argument& e) {
            throw CorruptLogError(e.what());
        }
    }
    return state;
}

CampaignState CampaignStore::load() const {
    const auto log = read_log();
    auto state = fresh_state();
    const auto snap = dir_ / "state.snapshot";
    if (fs::exists(snap)) {
        try {
            auto s = Json::parse(slurp(snap)).get<CampaignState>();
            if (s.iteration <= log.size()) state = std::move(s);
        } catch (const std::exception& e) {
            std::cerr << "warning: ignoring unreadable state.snapshot: " << e.what() << '\n';
        }
    }
    for (std::size_t i = state.iteration; i < log.size(); ++i) {
        try {
            apply_record(state, log[i]);
        } catch (const std::invalid_argument& e) {
            throw CorruptLogError(e.what());
        }
    }
    return state;
}

bool CampaignStore::write_bug_report(const std::string& signature, const Json& report) const {
    const auto path = dir_ / "bugs" / (signature + ".json");
    if (fs::exists(path)) return false;
    write_file_atomic(path, report.dump(2) + "\n");
    return true;
}

CampaignState load_campaign(const fs::path& dir) { return CampaignStore::open(dir).load(); }

} // namespace dlfuzz
