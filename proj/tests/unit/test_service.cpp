#include <gtest/gtest.h>

#include <httplib.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <sys/wait.h>

#include "nanotwin/export.hpp"
#include "nanotwin/scenario.hpp"
#include "nanotwin/session.hpp"
#include "service.hpp"

using namespace nanotwin;
using nlohmann::json;

namespace {

class ServiceFixture : public ::testing::Test {
protected:
    void SetUp() override {
        service_ = std::make_unique<LabService>(Session(reference_device_scenario(), 21));
        port_ = service_->bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { service_->listen_after_bind(); });
    }

    void TearDown() override {
        service_->stop();
        if (thread_.joinable()) thread_.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(120, 0);
        return c;
    }

    json get_json(const std::string& path) const {
        auto res = client().Get(path);
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 200) << res->body;
        return json::parse(res->body);
    }

    httplib::Result post(const std::string& path, const json& body) const {
        return client().Post(path, body.dump(), "application/json");
    }

    std::unique_ptr<LabService> service_;
    int port_ = -1;
    std::thread thread_;
};

}  // namespace

TEST(CommandMapping, EndpointsToCommandText) {
    EXPECT_EQ(command_from_request("/manipulate/move", {{"dx_nm", 10}, {"dy_nm", -20}}),
              "manipulate move --dx 10 --dy -20");
    EXPECT_EQ(command_from_request("/manipulate/rotate", {{"dtheta_deg", 35}}), "manipulate rotate --dtheta 35");
    EXPECT_EQ(command_from_request("/measure/g2", {{"power_uw", 12.4}, {"mode", "III"}}),
              "measure g2 --power 12.4 --mode III");
    EXPECT_EQ(command_from_request("/measure/rabi", {{"powers_uw", {2, 4.5}}}), "measure rabi --powers 2,4.5");
    EXPECT_EQ(command_from_request("/tune/lock", json::object()), "tune lock");
    EXPECT_EQ(command_from_request("/optimize/full", {{"mode", "II"}, {"budget", 25}, {"orthogonal", true}}),
              "optimize full --mode II --budget 25 --orthogonal");
    EXPECT_EQ(command_from_request("/estimate/cooperativity",
                                   {{"on_mhz", 218}, {"on_sigma_mhz", 6}, {"off_mhz", 142}, {"off_sigma_mhz", 4}}),
              "estimate cooperativity --on 218 --on-sigma 6 --off 142 --off-sigma 4");
}

TEST(CommandMapping, RejectsBadBodies) {
    auto code = [](const std::string& path, const json& body) {
        try {
            (void)command_from_request(path, body);
        } catch (const TwinError& e) {
            return e.code();
        }
        return ErrorCode::usage;
    };
    EXPECT_EQ(code("/manipulate/move", {{"dx_nm", 10}}), ErrorCode::validation);
    EXPECT_EQ(code("/manipulate/move", {{"dx_nm", "ten"}, {"dy_nm", 0}}), ErrorCode::validation);
    EXPECT_EQ(code("/manipulate/rotate", {{"dtheta_deg", 5}, {"speed", 1}}), ErrorCode::validation);
    EXPECT_EQ(code("/measure/g2", {{"mode", "II --pairs 5"}}), ErrorCode::validation);
    EXPECT_EQ(code("/measure/g2", {{"mode", "--help"}}), ErrorCode::validation);
    EXPECT_EQ(code("/measure/g2", {{"pairs", 1.5}}), ErrorCode::validation);
    EXPECT_EQ(code("/optimize/everything", json::object()), ErrorCode::not_found);
    EXPECT_EQ(code("/measure/bogus", json::object()), ErrorCode::not_found);
}

TEST(HttpStatus, ErrorClasses) {
    EXPECT_EQ(http_status(ErrorCode::usage), 400);
    EXPECT_EQ(http_status(ErrorCode::validation), 400);
    EXPECT_EQ(http_status(ErrorCode::parse), 400);
    EXPECT_EQ(http_status(ErrorCode::not_found), 404);
    EXPECT_EQ(http_status(ErrorCode::precondition), 422);
    EXPECT_EQ(http_status(ErrorCode::io), 500);
}

TEST(TicketLockTest, AdmitsWaitersInArrivalOrder) {
    TicketLock lock;
    std::vector<int> order;
    std::mutex order_mutex;
    lock.lock();
    std::vector<std::thread> threads;
    for (int i = 0; i < 5; ++i) {
        threads.emplace_back([&, i] {
            lock.lock();
            {
                std::lock_guard<std::mutex> g(order_mutex);
                order.push_back(i);
            }
            lock.unlock();
        });
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    lock.unlock();
    for (auto& t : threads) t.join();
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST_F(ServiceFixture, RotateThenStateReflectsExecutedDelta) {
    const double before = get_json("/state").at("true_pose").at("rotation_deg").get<double>();
    auto res = post("/manipulate/rotate", {{"dtheta_deg", 35}});
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    const json body = json::parse(res->body);
    const double executed = body.at("result").at("step").at("executed").at("dtheta_deg").get<double>();
    const double after = get_json("/state").at("true_pose").at("rotation_deg").get<double>();
    EXPECT_NEAR(wrap_360(after - before), wrap_360(executed), 1e-9);
}

TEST_F(ServiceFixture, InvalidRequestsGetErrorBodies) {
    auto res = client().Post("/manipulate/move", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("error"), "parse");

    res = post("/manipulate/move", {{"dx_nm", 10}});
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("error"), "validation");

    res = post("/manipulate/move", {{"dx_nm", 5}, {"dy_nm", 0}});
    EXPECT_EQ(res->status, 422);
    EXPECT_EQ(json::parse(res->body).at("error"), "precondition");

    res = post("/measure/bogus", json::object());
    EXPECT_EQ(res->status, 404);
    res = client().Get("/nothing-here");
    EXPECT_EQ(res->status, 404);
    res = post("/command", {{"command", "measure"}});
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body).at("error"), "usage");
    EXPECT_EQ(get_json("/log").at("last_seq").get<int>(), 0);
}

TEST_F(ServiceFixture, ConcurrentMovesAreSerialized) {
    std::array<json, 2> responses;
    std::thread a([&] { responses[0] = json::parse(post("/manipulate/move", {{"dx_nm", 10}, {"dy_nm", 0}})->body); });
    std::thread b([&] { responses[1] = json::parse(post("/manipulate/move", {{"dx_nm", 0}, {"dy_nm", 10}})->body); });
    a.join();
    b.join();
    const json log = get_json("/log?since=0").at("records");
    std::vector<std::string> commands;
    for (const auto& r : log)
        if (r.at("type") == "command") commands.push_back(r.at("command"));
    ASSERT_EQ(commands.size(), 2u);
    // Each response carries a contiguous block of records, and the log holds
    // the blocks in the order the commands were admitted.
    for (const auto& resp : responses) {
        const auto& recs = resp.at("records");
        for (std::size_t i = 1; i < recs.size(); ++i)
            EXPECT_EQ(recs[i].at("seq").get<int>(), recs[i - 1].at("seq").get<int>() + 1);
    }
    const int first_a = responses[0].at("records")[0].at("seq");
    const int first_b = responses[1].at("records")[0].at("seq");
    EXPECT_EQ(commands[0], first_a < first_b ? responses[0].at("command") : responses[1].at("command"));
    EXPECT_EQ(get_json("/state").at("steps_taken").get<int>(), 2);
}

TEST_F(ServiceFixture, QueuedMeasurementsKeepOrder) {
    constexpr int n = 4;
    std::vector<json> responses(n);
    std::vector<std::thread> threads;
    for (int i = 0; i < n; ++i) {
        threads.emplace_back([&, i] {
            responses[i] = json::parse(post("/measure/g2", {{"power_uw", 2.0 + i}, {"pairs", 20000}})->body);
        });
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
    }
    for (auto& t : threads) t.join();
    std::vector<int> starts;
    for (const auto& r : responses) {
        ASSERT_TRUE(r.contains("records")) << r.dump();
        starts.push_back(r.at("records")[0].at("seq"));
    }
    EXPECT_TRUE(std::is_sorted(starts.begin(), starts.end()));
    EXPECT_EQ(get_json("/log?since=0").at("records").size(), static_cast<std::size_t>(3 * n));
}

TEST_F(ServiceFixture, MatchesDirectSession) {
    Session direct(reference_device_scenario(), 21);
    const std::vector<std::pair<std::string, json>> script{
        {"/manipulate/rotate", {{"dtheta_deg", 12}}},
        {"/measure/g2", {{"power_uw", 8}, {"pairs", 30000}}},
        {"/report/coupling", {{"mode", "III"}}},
    };
    for (const auto& [path, body] : script) {
        const auto res = post(path, body);
        ASSERT_EQ(res->status, 200) << res->body;
        direct.run_command(command_from_request(path, body));
    }
    json expected = json::array();
    for (const auto& r : direct.log().records()) expected.push_back(to_json(r));
    EXPECT_EQ(get_json("/log").at("records"), expected);
    EXPECT_EQ(get_json("/state"), direct.state_json());
}

TEST_F(ServiceFixture, ReadEndpoints) {
    const json fm = get_json("/field-map?mode=II&x0=-20&x1=20&step=10");
    EXPECT_EQ(fm.at("x_nm").size(), 5u);
    EXPECT_NEAR(fm.at("e_y")[2].get<double>(), 0.0, 1e-12);
    const auto csv = client().Get("/field-map?mode=III&x0=0&x1=10&step=10&format=csv");
    EXPECT_EQ(csv->body.rfind("x_nm,e_y,ldos\n", 0), 0u);
    const json ld = get_json("/ldos-map?mode=III&nx=11&ny=3");
    EXPECT_EQ(ld.at("ldos").size(), 3u);
    EXPECT_EQ(ld.at("ldos")[0].size(), 11u);
    EXPECT_EQ(client().Get("/field-map?step=0")->status, 400);
    EXPECT_EQ(client().Get("/field-map?mode=IV")->status, 404);
    EXPECT_NE(client().Get("/commands")->body.find("measure g2"), std::string::npos);

    const auto g2 = json::parse(post("/measure/g2", {{"pairs", 20000}})->body);
    const int seq = g2.at("result").at("record_seq");
    const auto m = client().Get("/export/measurement?seq=" + std::to_string(seq));
    EXPECT_EQ(m->status, 200);
    EXPECT_EQ(m->body.rfind("abscissa_ns,ordinate_counts\n", 0), 0u);
    EXPECT_EQ(client().Get("/export/measurement?seq=0")->status, 404);
    const auto summary = client().Get("/export/summary");
    EXPECT_EQ(summary->body.rfind("quantity,label,value,sigma,unit,record_seq\n", 0), 0u);
    EXPECT_EQ(get_json("/log?since=" + std::to_string(seq)).at("records").size(), 1u);
}

// --- command-line driver ------------------------------------------------------------

namespace {

struct RunResult {
    int code;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(NANOTWIN_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

}  // namespace

TEST(Cli, SessionCommandsContinueLog) {
    const auto log = std::filesystem::temp_directory_path() / "nanotwin_cli_test.jsonl";
    std::filesystem::remove(log);
    const std::string l = "--log " + log.string();
    EXPECT_EQ(run_cli(l + " --seed 5 manipulate rotate --dtheta 35").code, 0);
    const auto g2 = run_cli(l + " measure g2 --power 12.4 --pairs 20000");
    ASSERT_EQ(g2.code, 0);
    EXPECT_TRUE(json::parse(g2.out).contains("fit"));
    EXPECT_EQ(run_cli(l + " --seed 6 measure polarization").code, 2);
    const auto replay = run_cli(l + " replay");
    EXPECT_EQ(replay.code, 0);
    EXPECT_EQ(replay.out.rfind("ok: ", 0), 0u);

    Session direct(reference_device_scenario(), 5);
    direct.run_command("manipulate rotate --dtheta 35");
    direct.run_command("measure g2 --power 12.4 --pairs 20000");
    EXPECT_EQ(ExperimentLog::load(log), direct.log());
    EXPECT_EQ(run_cli(l + " export measurement --seq 4").code, 0);
    std::filesystem::remove(log);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("measure bogus").code, 2);
    EXPECT_EQ(run_cli("--no-such-flag commands").code, 2);
    EXPECT_EQ(run_cli("manipulate move --dx 5 --dy 0").code, 3);
    EXPECT_EQ(run_cli("--scenario /nonexistent.json scenario show").code, 4);
    EXPECT_EQ(run_cli("commands").code, 0);
}

TEST(Cli, ScenarioAndFieldMap) {
    const auto shown = run_cli("scenario show");
    ASSERT_EQ(shown.code, 0);
    EXPECT_EQ(parse_scenario(shown.out), reference_device_scenario());
    const auto fm = run_cli("export field-map --mode II --x0 -10 --x1 10 --step 10");
    ASSERT_EQ(fm.code, 0);
    EXPECT_EQ(fm.out, field_map_csv(ModeField(reference_device_scenario().mode("II").mode), -10, 10, 10, 0));
    EXPECT_EQ(run_cli(std::string("scenario validate ") + NANOTWIN_SOURCE_DIR + "/scenarios/reference_device.json").code, 0);
}
