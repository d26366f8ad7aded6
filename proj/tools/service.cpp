#include "service.hpp"

#include <httplib.h>

#include <cmath>
#include <set>

#include "nanotwin/export.hpp"
#include "nanotwin/field_model.hpp"
#include "nanotwin/log.hpp"

namespace nanotwin {

using nlohmann::json;

namespace {

class Body {
public:
    Body(const json& j, std::set<std::string> allowed) : j_(j) {
        require(j_.is_object(), ErrorCode::validation, "request body must be a JSON object");
        for (auto it = j_.begin(); it != j_.end(); ++it)
            require(allowed.count(it.key()) > 0, ErrorCode::validation, "unknown key '" + it.key() + "'");
    }

    bool has(const char* key) const { return j_.contains(key); }

    double number(const char* key) const {
        const json& v = j_.at(key);
        require(v.is_number() && std::isfinite(v.get<double>()), ErrorCode::validation,
                std::string("'") + key + "' must be a finite number");
        return v.get<double>();
    }

    long long integer(const char* key) const {
        const double v = number(key);
        require(v == std::floor(v) && v >= 0.0 && v < 1e15, ErrorCode::validation,
                std::string("'") + key + "' must be a non-negative integer");
        return static_cast<long long>(v);
    }

    bool flag(const char* key) const {
        const json& v = j_.at(key);
        require(v.is_boolean(), ErrorCode::validation, std::string("'") + key + "' must be a boolean");
        return v.get<bool>();
    }

    std::string word(const char* key) const {
        const json& v = j_.at(key);
        require(v.is_string(), ErrorCode::validation, std::string("'") + key + "' must be a string");
        const auto s = v.get<std::string>();
        require(!s.empty() && s.front() != '-' && s.find_first_of(" \t\r\n") == std::string::npos,
                ErrorCode::validation, std::string("'") + key + "' is not a valid token");
        return s;
    }

    std::string number_list(const char* key) const {
        const json& v = j_.at(key);
        require(v.is_array() && !v.empty(), ErrorCode::validation,
                std::string("'") + key + "' must be a non-empty array of numbers");
        std::string out;
        for (const auto& x : v) {
            require(x.is_number() && std::isfinite(x.get<double>()), ErrorCode::validation,
                    std::string("'") + key + "' must hold finite numbers");
            out += (out.empty() ? "" : ",") + format_number(x.get<double>());
        }
        return out;
    }

    // Appends " --flag value" when the key is present.
    void opt_number(std::string& cmd, const char* key, const char* flag) const {
        if (has(key)) cmd += std::string(" ") + flag + " " + format_number(number(key));
    }
    void opt_integer(std::string& cmd, const char* key, const char* flag) const {
        if (has(key)) cmd += std::string(" ") + flag + " " + std::to_string(integer(key));
    }
    void opt_word(std::string& cmd, const char* key, const char* flag) const {
        if (has(key)) cmd += std::string(" ") + flag + " " + word(key);
    }
    void req_number(std::string& cmd, const char* key, const char* flag) const {
        require(has(key), ErrorCode::validation, std::string("missing '") + key + "'");
        opt_number(cmd, key, flag);
    }

private:
    const json& j_;
};

json error_body(ErrorCode code, const std::string& message) {
    return {{"error", std::string(error_code_name(code))}, {"message", message}};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const TwinError& e) {
        send_json(res, http_status(e.code()), error_body(e.code(), e.what()));
    } catch (const json::exception& e) {
        send_json(res, 400, error_body(ErrorCode::parse, e.what()));
    } catch (const std::exception& e) {
        send_json(res, 500, error_body(ErrorCode::io, e.what()));
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, std::string("request body: ") + e.what());
    }
}

double query_number(const httplib::Request& req, const char* key, double fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        require(used == v.size() && std::isfinite(x), ErrorCode::validation, "");
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::validation, std::string("query parameter '") + key + "' must be a number");
    }
}

}  // namespace

std::string command_from_request(const std::string& path, const json& body) {
    auto starts = [&](const char* prefix) { return path.rfind(prefix, 0) == 0; };
    std::string cmd;
    if (path == "/manipulate/move") {
        Body b(body, {"dx_nm", "dy_nm"});
        cmd = "manipulate move";
        b.req_number(cmd, "dx_nm", "--dx");
        b.req_number(cmd, "dy_nm", "--dy");
    } else if (path == "/manipulate/rotate") {
        Body b(body, {"dtheta_deg"});
        cmd = "manipulate rotate";
        b.req_number(cmd, "dtheta_deg", "--dtheta");
    } else if (path == "/measure/g2") {
        Body b(body, {"power_uw", "mode", "pairs"});
        cmd = "measure g2";
        b.opt_number(cmd, "power_uw", "--power");
        b.opt_word(cmd, "mode", "--mode");
        b.opt_integer(cmd, "pairs", "--pairs");
    } else if (path == "/measure/ple") {
        Body b(body, {"power_uw", "mode", "range_ghz", "points"});
        cmd = "measure ple";
        b.opt_number(cmd, "power_uw", "--power");
        b.opt_word(cmd, "mode", "--mode");
        b.opt_number(cmd, "range_ghz", "--range-ghz");
        b.opt_integer(cmd, "points", "--points");
    } else if (path == "/measure/polarization") {
        Body b(body, {});
        cmd = "measure polarization";
    } else if (path == "/measure/spectrum") {
        Body b(body, {"mode", "duration_s", "dt_s"});
        cmd = "measure spectrum";
        b.opt_word(cmd, "mode", "--mode");
        b.opt_number(cmd, "duration_s", "--duration");
        b.opt_number(cmd, "dt_s", "--dt");
    } else if (path == "/measure/rabi" || path == "/measure/linewidth") {
        const bool rabi = path == "/measure/rabi";
        Body b(body, rabi ? std::set<std::string>{"mode", "powers_uw", "pairs"}
                          : std::set<std::string>{"mode", "powers_uw"});
        cmd = rabi ? "measure rabi" : "measure linewidth";
        b.opt_word(cmd, "mode", "--mode");
        if (b.has("powers_uw")) cmd += " --powers " + b.number_list("powers_uw");
        if (rabi) b.opt_integer(cmd, "pairs", "--pairs");
    } else if (path == "/tune/open" || path == "/tune/close" || path == "/tune/lock" ||
               path == "/tune/unlock" || path == "/tune/reset") {
        Body b(body, {});
        cmd = "tune " + path.substr(6);
    } else if (path == "/tune/wait") {
        Body b(body, {"dt_s"});
        cmd = "tune wait";
        b.req_number(cmd, "dt_s", "--dt");
    } else if (path == "/tune/resonance") {
        Body b(body, {"mode"});
        cmd = "tune resonance";
        b.opt_word(cmd, "mode", "--mode");
    } else if (path == "/tune/stability") {
        Body b(body, {"horizon_s", "dt_s"});
        cmd = "tune stability";
        b.opt_number(cmd, "horizon_s", "--horizon");
        b.opt_number(cmd, "dt_s", "--dt");
    } else if (starts("/optimize/")) {
        const std::string stage = path.substr(10);
        require(stage == "align" || stage == "coarse" || stage == "fine" || stage == "full",
                ErrorCode::not_found, "unknown protocol stage '" + stage + "'");
        Body b(body, {"mode", "budget", "orthogonal", "tolerance_deg"});
        cmd = "optimize " + stage;
        b.opt_word(cmd, "mode", "--mode");
        b.opt_integer(cmd, "budget", "--budget");
        if (b.has("orthogonal") && b.flag("orthogonal")) cmd += " --orthogonal";
        b.opt_number(cmd, "tolerance_deg", "--tolerance");
    } else if (path == "/report/coupling") {
        Body b(body, {"mode"});
        cmd = "report coupling";
        b.opt_word(cmd, "mode", "--mode");
    } else if (path == "/estimate/cooperativity") {
        Body b(body, {"on_mhz", "on_sigma_mhz", "off_mhz", "off_sigma_mhz"});
        cmd = "estimate cooperativity";
        b.req_number(cmd, "on_mhz", "--on");
        b.req_number(cmd, "on_sigma_mhz", "--on-sigma");
        b.req_number(cmd, "off_mhz", "--off");
        b.req_number(cmd, "off_sigma_mhz", "--off-sigma");
    } else {
        fail(ErrorCode::not_found, "unknown endpoint " + path);
    }
    return cmd;
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage:
        case ErrorCode::parse:
        case ErrorCode::validation: return 400;
        case ErrorCode::not_found: return 404;
        case ErrorCode::io: return 500;
        default: return 422;
    }
}

void TicketLock::lock() {
    std::unique_lock<std::mutex> lk(mutex_);
    const std::uint64_t ticket = next_++;
    cv_.wait(lk, [&] { return serving_ == ticket; });
}

void TicketLock::unlock() {
    {
        std::lock_guard<std::mutex> lk(mutex_);
        ++serving_;
    }
    cv_.notify_all();
}

LabService::LabService(Session session)
    : session_(std::move(session)), server_(std::make_unique<httplib::Server>()) {
    for (const auto& r : session_.log().records()) log_json_.push_back(to_json(r));
    publish();
    install_routes();
}

LabService::~LabService() { stop(); }

void LabService::publish() {
    auto snap = std::make_shared<Snapshot>();
    snap->state = session_.state_json();
    snap->log = std::make_shared<const std::vector<json>>(log_json_);
    std::lock_guard<std::mutex> lk(snapshot_mutex_);
    snapshot_ = std::move(snap);
}

std::shared_ptr<const LabService::Snapshot> LabService::snapshot() const {
    std::lock_guard<std::mutex> lk(snapshot_mutex_);
    return snapshot_;
}

json LabService::submit(const std::string& command) {
    std::lock_guard<TicketLock> guard(writer_);
    CommandOutcome out = session_.run_command(command);
    json records = json::array();
    for (const auto& r : out.records) {
        log_json_.push_back(to_json(r));
        records.push_back(log_json_.back());
    }
    publish();
    if (on_commit_) on_commit_(session_);
    return {{"command", out.command}, {"records", records}, {"result", out.result}};
}

json LabService::state() const { return snapshot()->state; }

json LabService::log_since(std::int64_t since) const {
    const auto snap = snapshot();
    json records = json::array();
    for (const auto& r : *snap->log)
        if (static_cast<std::int64_t>(r.at("seq").get<std::uint64_t>()) > since) records.push_back(r);
    const std::uint64_t last = snap->log->empty() ? 0 : snap->log->back().at("seq").get<std::uint64_t>();
    return {{"records", records}, {"last_seq", last}};
}

void LabService::install_routes() {
    auto& srv = *server_;

    srv.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, state());
    });

    srv.Get("/log", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const double since = query_number(req, "since", -1.0);
            require(since == std::floor(since), ErrorCode::validation, "'since' must be an integer");
            send_json(res, 200, log_since(static_cast<std::int64_t>(since)));
        });
    });

    srv.Get("/commands", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(Session::command_help(), "text/plain");
    });

    srv.Get("/field-map", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const Scenario& sc = session_.scenario();
            const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : sc.default_mode;
            const ModeField field(sc.mode(mode).mode);
            const double half = sc.geometry.half_length_nm;
            const double x0 = query_number(req, "x0", -half);
            const double x1 = query_number(req, "x1", half);
            const double step = query_number(req, "step", 10.0);
            const double z = query_number(req, "z", 0.0);
            require(step > 0.0 && (x1 - x0) / step <= 200'000.0, ErrorCode::validation,
                    "step must be positive and give at most 2e5 samples");
            if (req.has_param("format") && req.get_param_value("format") == "csv") {
                res.set_content(field_map_csv(field, x0, x1, step, z), "text/csv");
                return;
            }
            json xs = json::array(), es = json::array(), ls = json::array();
            for (const auto& row : field_map(field, x0, x1, step, z)) {
                xs.push_back(row.x_nm);
                es.push_back(row.e_y);
                ls.push_back(row.ldos);
            }
            send_json(res, 200, {{"mode", mode}, {"z_nm", z}, {"x_nm", xs}, {"e_y", es}, {"ldos", ls}});
        });
    });

    srv.Get("/ldos-map", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const Scenario& sc = session_.scenario();
            const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : sc.default_mode;
            const ModeField field(sc.mode(mode).mode);
            const double nx = query_number(req, "nx", 401);
            const double ny = query_number(req, "ny", 61);
            const double z = query_number(req, "z", 0.0);
            require(nx >= 2 && ny >= 2 && nx * ny <= 1e6 && nx == std::floor(nx) && ny == std::floor(ny),
                    ErrorCode::validation, "nx, ny must be integers >= 2 with nx*ny <= 1e6");
            const double hx = sc.geometry.half_length_nm;
            const double hy = sc.geometry.half_extent_y_nm;
            json rows = json::array();
            for (int j = 0; j < static_cast<int>(ny); ++j) {
                const double y = -hy + 2.0 * hy * j / (ny - 1);
                json row = json::array();
                for (int i = 0; i < static_cast<int>(nx); ++i) {
                    const double x = -hx + 2.0 * hx * i / (nx - 1);
                    row.push_back(field.ldos_at({x, y, z}));
                }
                rows.push_back(row);
            }
            send_json(res, 200, {{"mode", mode}, {"x_min_nm", -hx}, {"x_max_nm", hx},
                                 {"y_min_nm", -hy}, {"y_max_nm", hy}, {"z_nm", z}, {"ldos", rows}});
        });
    });

    srv.Get("/export/summary", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            res.set_content(with_session([](const Session& s) { return summary_csv(s.log()); }), "text/csv");
        });
    });

    srv.Get("/export/measurement", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const double seq = query_number(req, "seq", -1.0);
            require(seq >= 0.0 && seq == std::floor(seq), ErrorCode::validation, "'seq' must be given");
            res.set_content(with_session([&](const Session& s) {
                                return measurement_csv(
                                    measurement_from_log(s.log(), static_cast<std::uint64_t>(seq)));
                            }),
                            "text/csv");
        });
    });

    srv.Post("/command", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            Body b(body, {"command"});
            require(b.has("command") && body.at("command").is_string(), ErrorCode::validation,
                    "'command' must be a string");
            send_json(res, 200, submit(body.at("command").get<std::string>()));
        });
    });

    srv.Post(R"(/(manipulate|measure|tune|optimize|report|estimate)/([a-z0-9-]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                     const std::string command = command_from_request(req.path, parse_body(req));
                     send_json(res, 200, submit(command));
                 });
             });
}

bool LabService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int LabService::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool LabService::listen_after_bind() { return server_->listen_after_bind(); }

void LabService::stop() {
    if (server_) server_->stop();
}

}  // namespace nanotwin
