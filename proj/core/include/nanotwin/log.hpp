#pragma once

// Append-only experiment log, persisted as JSON lines:
//   {"schema":1,"seq":N,"t_s":...,"type":...,"command":...,"sub_seed":...,"payload":{...}}
// t_s is the simulated lab clock, never wall time, so identical command
// sequences give identical logs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nanotwin {

inline constexpr int log_schema_version = 1;

struct LogRecord {
    std::uint64_t seq = 0;
    double t_s = 0.0;
    std::string type;     // session_start, command, manipulation, measurement, fit, tuner, ...
    std::string command;  // text of the command that produced the record
    std::uint64_t sub_seed = 0;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

nlohmann::json to_json(const LogRecord& record);
LogRecord log_record_from_json(const nlohmann::json& j);

class ExperimentLog {
public:
    /// Appends with the next sequence number and returns the stored record.
    const LogRecord& append(LogRecord record);

    const std::vector<LogRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::uint64_t next_seq() const noexcept { return records_.empty() ? 0 : records_.back().seq + 1; }

    /// Records with seq > `seq`; pass -1 for everything.
    std::vector<LogRecord> since(std::int64_t seq) const;
    /// Throws not_found when no record has this sequence number.
    const LogRecord& at_seq(std::uint64_t seq) const;

    std::string to_jsonl() const;
    static ExperimentLog from_jsonl(const std::string& text);

    void save(const std::filesystem::path& path) const;
    static ExperimentLog load(const std::filesystem::path& path);

    friend bool operator==(const ExperimentLog&, const ExperimentLog&) = default;

private:
    std::vector<LogRecord> records_;
};

}  // namespace nanotwin
