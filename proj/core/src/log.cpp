#include "nanotwin/log.hpp"

#include <fstream>
#include <sstream>

#include "nanotwin/error.hpp"

namespace nanotwin {

using nlohmann::json;

json to_json(const LogRecord& r) {
    return {{"schema", log_schema_version}, {"seq", r.seq},         {"t_s", r.t_s},
            {"type", r.type},               {"command", r.command}, {"sub_seed", r.sub_seed},
            {"payload", r.payload}};
}

LogRecord log_record_from_json(const json& j) {
    try {
        require(j.at("schema").get<int>() == log_schema_version, ErrorCode::parse,
                "unsupported log schema");
        LogRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.t_s = j.at("t_s").get<double>();
        r.type = j.at("type").get<std::string>();
        r.command = j.at("command").get<std::string>();
        r.sub_seed = j.at("sub_seed").get<std::uint64_t>();
        r.payload = j.at("payload");
        return r;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed log record: ") + e.what());
    }
}

const LogRecord& ExperimentLog::append(LogRecord record) {
    record.seq = next_seq();
    records_.push_back(std::move(record));
    return records_.back();
}

std::vector<LogRecord> ExperimentLog::since(std::int64_t seq) const {
    std::vector<LogRecord> out;
    for (const auto& r : records_)
        if (static_cast<std::int64_t>(r.seq) > seq) out.push_back(r);
    return out;
}

const LogRecord& ExperimentLog::at_seq(std::uint64_t seq) const {
    for (const auto& r : records_)
        if (r.seq == seq) return r;
    fail(ErrorCode::not_found, "no log record with seq " + std::to_string(seq));
}

std::string ExperimentLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

ExperimentLog ExperimentLog::from_jsonl(const std::string& text) {
    ExperimentLog log;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::parse, "log line " + std::to_string(line_no) + ": " + e.what());
        }
        LogRecord r = log_record_from_json(j);
        require(log.empty() || r.seq > log.records_.back().seq, ErrorCode::parse,
                "log line " + std::to_string(line_no) + ": sequence numbers must increase");
        log.records_.push_back(std::move(r));
    }
    return log;
}

void ExperimentLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write log " + path.string());
    out << to_jsonl();
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path.string());
}

ExperimentLog ExperimentLog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open log " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_jsonl(buf.str());
}

}  // namespace nanotwin
