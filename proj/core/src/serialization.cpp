#include "nanotwin/serialization.hpp"

#include <cmath>
#include <limits>

#include "nanotwin/error.hpp"

namespace nanotwin {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

json to_json(const NanodiamondPose& p) {
    return {{"x_nm", p.position.x},
            {"y_nm", p.position.y},
            {"z_nm", p.position.z},
            {"rotation_deg", p.rotation_deg}};
}

NanodiamondPose pose_from_json(const json& j) {
    return guarded("pose", [&] {
        NanodiamondPose p;
        p.position = {j.at("x_nm").get<double>(), j.at("y_nm").get<double>(),
                      j.at("z_nm").get<double>()};
        p.rotation_deg = j.at("rotation_deg").get<double>();
        return p;
    });
}

json to_json(const TunerState& s) {
    return {{"offset_ghz", s.offset_ghz},
            {"valve_open", s.valve_open},
            {"drift_rate_ghz_per_s", s.drift_rate_ghz_per_s},
            {"locked", s.locked},
            {"lock_target_ghz", s.lock_target_ghz},
            {"lock_jitter_bound_ghz", s.lock_jitter_bound_ghz},
            {"jitter_phase_rad", s.jitter_phase_rad},
            {"elapsed_s", s.elapsed_s}};
}

TunerState tuner_from_json(const json& j) {
    return guarded("tuner state", [&] {
        TunerState s;
        s.offset_ghz = j.at("offset_ghz").get<double>();
        s.valve_open = j.at("valve_open").get<bool>();
        s.drift_rate_ghz_per_s = j.at("drift_rate_ghz_per_s").get<double>();
        s.locked = j.at("locked").get<bool>();
        s.lock_target_ghz = j.at("lock_target_ghz").get<double>();
        s.lock_jitter_bound_ghz = j.at("lock_jitter_bound_ghz").get<double>();
        s.jitter_phase_rad = j.at("jitter_phase_rad").get<double>();
        s.elapsed_s = j.at("elapsed_s").get<double>();
        return s;
    });
}

json to_json(const ManipulationStep& s) {
    json j = {{"kind", s.kind == StepKind::translate ? "translate" : "rotate"},
              {"cost", s.cost},
              {"seed", s.seed}};
    if (s.kind == StepKind::translate) {
        j["commanded"] = {{"dx_nm", s.commanded_dx_nm}, {"dy_nm", s.commanded_dy_nm}};
        j["executed"] = {{"dx_nm", s.executed_dx_nm}, {"dy_nm", s.executed_dy_nm}};
        j["afm_readout"] = {{"dx_nm", s.readout_dx_nm}, {"dy_nm", s.readout_dy_nm}};
    } else {
        j["commanded"] = {{"dtheta_deg", s.commanded_dtheta_deg}};
        j["executed"] = {{"dtheta_deg", s.executed_dtheta_deg}};
        j["afm_readout"] = {{"dtheta_deg", s.readout_dtheta_deg}};
    }
    return j;
}

ManipulationStep step_from_json(const json& j) {
    return guarded("manipulation step", [&] {
        ManipulationStep s;
        const auto kind = j.at("kind").get<std::string>();
        require(kind == "translate" || kind == "rotate", ErrorCode::parse,
                "unknown step kind '" + kind + "'");
        s.kind = kind == "translate" ? StepKind::translate : StepKind::rotate;
        s.cost = j.at("cost").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& c = j.at("commanded");
        const auto& e = j.at("executed");
        const auto& r = j.at("afm_readout");
        if (s.kind == StepKind::translate) {
            s.commanded_dx_nm = c.at("dx_nm").get<double>();
            s.commanded_dy_nm = c.at("dy_nm").get<double>();
            s.executed_dx_nm = e.at("dx_nm").get<double>();
            s.executed_dy_nm = e.at("dy_nm").get<double>();
            s.readout_dx_nm = r.at("dx_nm").get<double>();
            s.readout_dy_nm = r.at("dy_nm").get<double>();
        } else {
            s.commanded_dtheta_deg = c.at("dtheta_deg").get<double>();
            s.executed_dtheta_deg = e.at("dtheta_deg").get<double>();
            s.readout_dtheta_deg = r.at("dtheta_deg").get<double>();
        }
        return s;
    });
}

json to_json(const MeasurementRecord& r) {
    json j = {{"kind", to_string(r.kind)},
              {"abscissa_unit", r.abscissa_unit},
              {"ordinate_unit", r.ordinate_unit},
              {"abscissa", r.abscissa},
              {"ordinate", r.ordinate},
              {"settings",
               {{"power_uw", r.settings.power_uw},
                {"duration_s", r.settings.duration_s},
                {"seed", r.settings.seed}}},
              {"timestamp_s", r.timestamp_s},
              {"ground_truth", r.ground_truth}};
    if (!r.frames.empty()) {
        j["frames"] = r.frames;
        j["row_length"] = r.row_length;
    }
    return j;
}

MeasurementRecord record_from_json(const json& j) {
    return guarded("measurement record", [&] {
        MeasurementRecord r;
        r.kind = measurement_kind_from_string(j.at("kind").get<std::string>());
        r.abscissa_unit = j.at("abscissa_unit").get<std::string>();
        r.ordinate_unit = j.at("ordinate_unit").get<std::string>();
        r.abscissa = j.at("abscissa").get<std::vector<double>>();
        r.ordinate = j.at("ordinate").get<std::vector<double>>();
        const auto& s = j.at("settings");
        r.settings.power_uw = s.at("power_uw").get<double>();
        r.settings.duration_s = s.at("duration_s").get<double>();
        r.settings.seed = s.at("seed").get<std::uint64_t>();
        r.timestamp_s = j.at("timestamp_s").get<double>();
        r.ground_truth = j.at("ground_truth").get<std::map<std::string, double>>();
        if (j.contains("frames")) {
            r.frames = j.at("frames").get<std::vector<double>>();
            r.row_length = j.at("row_length").get<std::size_t>();
        }
        return r;
    });
}

json to_json(const FitResult& f) {
    json params = json::array();
    for (const auto& p : f.parameters)
        params.push_back({{"name", p.name},
                          {"value", p.value},
                          {"sigma", std::isfinite(p.sigma) ? json(p.sigma) : json(nullptr)}});
    return {{"model", f.model},
            {"parameters", params},
            {"residual_norm", f.residual_norm},
            {"reduced_chi2", f.reduced_chi2},
            {"converged", f.converged},
            {"poor_fit", f.poor_fit},
            {"iterations", f.iterations},
            {"warnings", f.warnings}};
}

FitResult fit_from_json(const json& j) {
    return guarded("fit result", [&] {
        FitResult f;
        f.model = j.at("model").get<std::string>();
        // An undetermined uncertainty is stored as null.
        for (const auto& p : j.at("parameters"))
            f.parameters.push_back({p.at("name").get<std::string>(), p.at("value").get<double>(),
                                    p.at("sigma").is_null() ? std::numeric_limits<double>::infinity()
                                                            : p.at("sigma").get<double>()});
        f.residual_norm = j.at("residual_norm").get<double>();
        f.reduced_chi2 = j.at("reduced_chi2").get<double>();
        f.converged = j.at("converged").get<bool>();
        f.poor_fit = j.at("poor_fit").get<bool>();
        f.iterations = j.at("iterations").get<int>();
        f.warnings = j.at("warnings").get<std::vector<std::string>>();
        return f;
    });
}

json to_json(const CouplingReport& r) {
    return {{"purcell_factor", r.purcell_factor},
            {"detuning_term", r.detuning_term},
            {"spatial_term", r.spatial_term},
            {"total_enhancement", r.total_enhancement},
            {"cooperativity", r.cooperativity}};
}

json to_json(const CooperativityEstimate& e) {
    return {{"c", e.c},
            {"sigma_c", e.sigma_c},
            {"delta_on_mhz", e.delta_on},
            {"sigma_on_mhz", e.sigma_on},
            {"delta_off_mhz", e.delta_off},
            {"sigma_off_mhz", e.sigma_off},
            {"gamma_added_mhz", e.gamma_added},
            {"negative_warning", e.negative_warning}};
}

json to_json(const ProtocolResult& r) {
    return {{"final_pose", to_json(r.final_pose)},
            {"estimated_pose", to_json(r.estimated_pose)},
            {"step_count", r.step_count()},
            {"spatial_term", r.spatial_term},
            {"spatial_term_max", r.spatial_term_max},
            {"spatial_fraction", r.spatial_fraction()},
            {"cooperativity", r.cooperativity},
            {"objective_trace", r.objective_trace},
            {"accepted_spatial_trace", r.accepted_spatial_trace},
            {"converged", r.converged},
            {"budget_exhausted", r.budget_exhausted},
            {"tuning_duration_s", r.tuning_duration_s}};
}

}  // namespace nanotwin
