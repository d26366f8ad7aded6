#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "nanotwin/error.hpp"
#include "nanotwin/scenario.hpp"

using namespace nanotwin;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const TwinError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no TwinError thrown";
    return ErrorCode::usage;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const TwinError& e) {
        return e.what();
    }
    return {};
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("nanotwin_test_" + name);
}

}  // namespace

TEST(Scenario, ReferenceDeviceConstants) {
    const Scenario s = reference_device_scenario();
    EXPECT_EQ(s.mode("II").mode.q_factor, 2200.0);
    EXPECT_EQ(s.mode("II").mode.mode_volume, 5.8);
    EXPECT_EQ(s.mode("III").mode.q_factor, 800.0);
    EXPECT_EQ(s.mode("III").mode.mode_volume, 6.2);
    EXPECT_EQ(s.nanodiamond.isolated().zpl_wavelength_nm, 736.05);
    EXPECT_EQ(s.nanodiamond.pose, s.reference_poses.at("pos1"));
    EXPECT_NO_THROW(validate(s));
}

TEST(Scenario, JsonRoundTrip) {
    const Scenario s = reference_device_scenario();
    EXPECT_EQ(scenario_from_json(to_json(s)), s);
    EXPECT_EQ(parse_scenario(to_json(s).dump()), s);
}

TEST(Scenario, FileRoundTrip) {
    const auto p1 = temp_file("a.json");
    const auto p2 = temp_file("b.json");
    const Scenario s = reference_device_scenario();
    save_scenario(s, p1);
    const Scenario a = load_scenario(p1);
    save_scenario(a, p2);
    EXPECT_EQ(load_scenario(p2), s);
    std::ifstream f1(p1), f2(p2);
    const std::string t1((std::istreambuf_iterator<char>(f1)), {});
    const std::string t2((std::istreambuf_iterator<char>(f2)), {});
    EXPECT_EQ(t1, t2);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST(Scenario, BundledFileMatchesBuiltIn) {
    const auto path = std::filesystem::path(NANOTWIN_SOURCE_DIR) / "scenarios" / "reference_device.json";
    EXPECT_EQ(load_scenario(path), reference_device_scenario());
}

TEST(Scenario, UnknownKeyRejected) {
    json j = to_json(reference_device_scenario());
    j["geometry"]["hole_pitch_nm"] = 250;
    EXPECT_EQ(code_of([&] { (void)scenario_from_json(j); }), ErrorCode::validation);
    EXPECT_NE(message_of([&] { (void)scenario_from_json(j); }).find("hole_pitch_nm"), std::string::npos);
}

TEST(Scenario, WrongTypeRejected) {
    json j = to_json(reference_device_scenario());
    j["seed"] = "many";
    EXPECT_EQ(code_of([&] { (void)scenario_from_json(j); }), ErrorCode::validation);
}

TEST(Scenario, DuplicateModeLabelRejected) {
    Scenario s = reference_device_scenario();
    s.modes[1].mode.label = s.modes[0].mode.label;
    EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::validation);
    EXPECT_EQ(code_of([&] { (void)scenario_from_json(to_json(s)); }), ErrorCode::validation);
}

TEST(Scenario, EmptyTextIsParseErrorWithPosition) {
    EXPECT_EQ(code_of([] { (void)parse_scenario(""); }), ErrorCode::parse);
    const std::string msg = message_of([] { (void)parse_scenario("{\n  \"name\": ,\n}"); });
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Scenario, ExactlyOneIsolatedEmitter) {
    Scenario s = reference_device_scenario();
    EmitterLine extra = s.nanodiamond.isolated();
    extra.name = "twin";
    s.nanodiamond.emitters.push_back(extra);
    EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::validation);
    for (auto& e : s.nanodiamond.emitters) e.isolated = false;
    EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::validation);
}

TEST(Scenario, RangeChecksNameTheField) {
    Scenario s = reference_device_scenario();
    s.noise.translation_quantum_nm = 0.0;
    EXPECT_NE(message_of([&] { validate(s); }).find("noise.translation_quantum_nm"), std::string::npos);
    s = reference_device_scenario();
    s.nanodiamond.pose.position.x = 1e6;
    EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::validation);
}

TEST(Scenario, MissingFileIsIoError) {
    EXPECT_EQ(code_of([] { (void)load_scenario("/nonexistent/scenario.json"); }), ErrorCode::io);
}

TEST(Scenario, UnknownModeIsNotFound) {
    EXPECT_EQ(code_of([] { (void)reference_device_scenario().mode("IV"); }), ErrorCode::not_found);
}

TEST(Scenario, DefaultsFillMissingSections) {
    json j = to_json(reference_device_scenario());
    j.erase("measurement");
    j.erase("tuner");
    const Scenario s = scenario_from_json(j);
    EXPECT_EQ(s.measurement, MeasurementConfig{});
    EXPECT_EQ(s.tuner, TunerConfig{});
}
