#include "nanotwin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nanotwin/error.hpp"

namespace nanotwin {

using nlohmann::json;

namespace {

constexpr int schema_version = 1;

// Reads an object while tracking which keys were consumed, so leftovers can
// be reported as unknown.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), ErrorCode::validation, path_ + ": expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            fail(ErrorCode::validation, where(key) + ": wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            require(seen_.count(it.key()) > 0, ErrorCode::validation,
                    "unknown key " + where(it.key()));
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json pose_json(const NanodiamondPose& p) {
    return {{"x_nm", p.position.x},
            {"y_nm", p.position.y},
            {"z_nm", p.position.z},
            {"rotation_deg", p.rotation_deg}};
}

NanodiamondPose pose_from(const json& j, const std::string& path) {
    NanodiamondPose p;
    Fields f(j, path);
    f.read("x_nm", p.position.x);
    f.read("y_nm", p.position.y);
    f.read("z_nm", p.position.z);
    f.read("rotation_deg", p.rotation_deg);
    f.finish();
    return p;
}

Vec3 vec_from(const json& j, const std::string& path) {
    require(j.is_array() && j.size() == 3, ErrorCode::validation, path + ": expected [x, y, z]");
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const json::exception&) {
        fail(ErrorCode::validation, path + ": expected numbers");
    }
}

json emitter_json(const EmitterLine& e) {
    return {{"name", e.name},
            {"zpl_wavelength_nm", e.zpl_wavelength_nm},
            {"delta_free_mhz", e.delta_free_mhz},
            {"gamma_free_mhz", e.gamma_free_mhz},
            {"dipole_body", {e.dipole_body.x, e.dipole_body.y, e.dipole_body.z}},
            {"p_sat_uw", e.p_sat_uw},
            {"brightness_cps", e.brightness_cps},
            {"polarization_visibility", e.polarization_visibility},
            {"isolated", e.isolated}};
}

EmitterLine emitter_from(const json& j, const std::string& path) {
    EmitterLine e;
    Fields f(j, path);
    f.read("name", e.name);
    f.read("zpl_wavelength_nm", e.zpl_wavelength_nm);
    f.read("delta_free_mhz", e.delta_free_mhz);
    f.read("gamma_free_mhz", e.gamma_free_mhz);
    if (const json* d = f.child("dipole_body")) e.dipole_body = vec_from(*d, f.where("dipole_body"));
    f.read("p_sat_uw", e.p_sat_uw);
    f.read("brightness_cps", e.brightness_cps);
    f.read("polarization_visibility", e.polarization_visibility);
    f.read("isolated", e.isolated);
    f.finish();
    return e;
}

json mode_json(const ModeEntry& m) {
    return {{"label", m.mode.label},
            {"lambda_cav_nm", m.mode.lambda_cav_nm},
            {"q_factor", m.mode.q_factor},
            {"mode_volume_lambda_n3", m.mode.mode_volume},
            {"refractive_index", m.mode.refractive_index},
            {"envelope",
             {{"node_count", m.mode.envelope.node_count},
              {"width_sigma_nm", m.mode.envelope.width_sigma_nm}}},
            {"standing_wave_phase_rad", m.mode.standing_wave_phase_rad},
            {"polarization_axis_deg", m.mode.polarization_axis_deg},
            {"transmission_factor", m.mode.transmission_factor},
            {"c_max", m.calibration.c_max},
            {"s_ref_ghz_per_sqrt_uw", m.calibration.s_ref_ghz_per_sqrt_uw}};
}

ModeEntry mode_from(const json& j, const std::string& path, const DeviceGeometry& geometry) {
    ModeEntry m;
    m.mode.geometry = geometry;
    Fields f(j, path);
    f.read("label", m.mode.label);
    m.mode.envelope = default_envelope(m.mode.label, geometry);
    f.read("lambda_cav_nm", m.mode.lambda_cav_nm);
    f.read("q_factor", m.mode.q_factor);
    f.read("mode_volume_lambda_n3", m.mode.mode_volume);
    f.read("refractive_index", m.mode.refractive_index);
    if (const json* e = f.child("envelope")) {
        Fields fe(*e, f.where("envelope"));
        fe.read("node_count", m.mode.envelope.node_count);
        fe.read("width_sigma_nm", m.mode.envelope.width_sigma_nm);
        fe.finish();
    }
    f.read("standing_wave_phase_rad", m.mode.standing_wave_phase_rad);
    f.read("polarization_axis_deg", m.mode.polarization_axis_deg);
    f.read("transmission_factor", m.mode.transmission_factor);
    f.read("c_max", m.calibration.c_max);
    f.read("s_ref_ghz_per_sqrt_uw", m.calibration.s_ref_ghz_per_sqrt_uw);
    f.finish();
    return m;
}

}  // namespace

SpectrumSettings MeasurementConfig::spectrum_settings(double exposure_s) const {
    SpectrumSettings s;
    s.freq_min_ghz = spectrum_min_ghz;
    s.freq_max_ghz = spectrum_max_ghz;
    s.bin_ghz = spectrum_bin_ghz;
    s.exposure_s = exposure_s;
    return s;
}

std::vector<double> MeasurementConfig::polarization_angles() const {
    if (!polarization_angles_deg.empty()) return polarization_angles_deg;
    std::vector<double> out;
    for (int i = 0; i < 36; ++i) out.push_back(10.0 * i);
    return out;
}

const ModeEntry& Scenario::mode(const std::string& label) const {
    for (const auto& m : modes)
        if (m.mode.label == label) return m;
    fail(ErrorCode::not_found, "no cavity mode labelled '" + label + "'");
}

TunerState Scenario::initial_tuner() const {
    TunerState s;
    s.offset_ghz = tuner.initial_offset_ghz;
    s.drift_rate_ghz_per_s = tuner.drift_rate_ghz_per_s;
    s.lock_jitter_bound_ghz = tuner.lock_jitter_bound_ghz;
    return s;
}

void validate(const Scenario& s) {
    auto check = [](bool ok, const std::string& field, const std::string& what) {
        require(ok, ErrorCode::validation, field + ": " + what);
    };
    const auto& g = s.geometry;
    check(g.hole_spacing_nm > 0.0, "geometry.hole_spacing_nm", "must be > 0");
    check(g.half_length_nm > 0.0, "geometry.half_length_nm", "must be > 0");
    check(g.half_extent_y_nm > 0.0, "geometry.half_extent_y_nm", "must be > 0");
    check(g.beam_half_width_nm > 0.0, "geometry.beam_half_width_nm", "must be > 0");
    check(g.z_decay_nm > 0.0, "geometry.z_decay_nm", "must be > 0");

    check(!s.modes.empty(), "modes", "at least one cavity mode is required");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < s.modes.size(); ++i) {
        const auto& m = s.modes[i];
        const std::string at = "modes[" + std::to_string(i) + "]";
        check(!m.mode.label.empty(), at + ".label", "must not be empty");
        check(labels.insert(m.mode.label).second, at + ".label",
              "duplicate mode label '" + m.mode.label + "'");
        try {
            validate(m.mode);
        } catch (const TwinError& e) {
            fail(ErrorCode::validation, at + ": " + e.what());
        }
        check(m.mode.geometry == g, at, "geometry differs from the scenario geometry");
        check(m.calibration.c_max >= 0.0, at + ".c_max", "must be >= 0");
        check(m.calibration.s_ref_ghz_per_sqrt_uw >= 0.0, at + ".s_ref_ghz_per_sqrt_uw",
              "must be >= 0");
    }
    check(labels.count(s.default_mode) > 0, "default_mode",
          "'" + s.default_mode + "' is not a mode label");

    try {
        validate(s.nanodiamond);
    } catch (const TwinError& e) {
        fail(ErrorCode::validation, std::string("nanodiamond: ") + e.what());
    }
    const auto& p = s.nanodiamond.pose.position;
    check(std::abs(p.x) <= g.half_length_nm && std::abs(p.y) <= g.half_extent_y_nm && p.z >= 0.0,
          "nanodiamond.pose", "outside the modeled device");
    for (const auto& [name, pose] : s.reference_poses) {
        const auto& q = pose.position;
        check(std::abs(q.x) <= g.half_length_nm && std::abs(q.y) <= g.half_extent_y_nm && q.z >= 0.0,
              "reference_poses." + name, "outside the modeled device");
    }

    const auto& n = s.noise;
    check(n.placement_sigma_nm >= 0.0, "noise.placement_sigma_nm", "must be >= 0");
    check(n.rotation_sigma_deg >= 0.0, "noise.rotation_sigma_deg", "must be >= 0");
    check(n.readout_sigma_nm >= 0.0, "noise.readout_sigma_nm", "must be >= 0");
    check(n.readout_sigma_deg >= 0.0, "noise.readout_sigma_deg", "must be >= 0");
    check(n.translation_quantum_nm > 0.0, "noise.translation_quantum_nm", "must be > 0");

    check(s.tuner.drift_rate_ghz_per_s >= 0.0, "tuner.drift_rate_ghz_per_s", "must be >= 0");
    check(s.tuner.lock_jitter_bound_ghz >= 0.0, "tuner.lock_jitter_bound_ghz", "must be >= 0");
    check(s.tuner.initial_offset_ghz >= 0.0, "tuner.initial_offset_ghz",
          "gas tuning only red-shifts, offset must be >= 0");

    const auto& m = s.measurement;
    check(m.g2_pairs > 0, "measurement.g2_pairs", "must be > 0");
    check(m.g2_bins >= 16, "measurement.g2_bins", "must be >= 16");
    check(m.g2_tau_max_ns > 0.0, "measurement.g2_tau_max_ns", "must be > 0");
    check(m.g2_snr > 0.0, "measurement.g2_snr", "must be > 0");
    check(!m.rabi_powers_uw.empty(), "measurement.rabi_powers_uw", "must not be empty");
    for (double pw : m.rabi_powers_uw) check(pw > 0.0, "measurement.rabi_powers_uw", "must be > 0");
    check(m.ple_power_uw > 0.0, "measurement.ple_power_uw", "must be > 0");
    check(m.ple_range_ghz > 0.0, "measurement.ple_range_ghz", "must be > 0");
    check(m.ple_points >= 8, "measurement.ple_points", "must be >= 8");
    check(m.ple_dwell_s > 0.0, "measurement.ple_dwell_s", "must be > 0");
    check(m.ple_dark_cps >= 0.0, "measurement.ple_dark_cps", "must be >= 0");
    check(m.linewidth_powers_uw.size() >= 2, "measurement.linewidth_powers_uw",
          "needs at least two powers");
    for (double pw : m.linewidth_powers_uw)
        check(pw > 0.0, "measurement.linewidth_powers_uw", "must be > 0");
    check(m.polarization_counts > 0.0, "measurement.polarization_counts", "must be > 0");
    check(m.spectrum_resolution_ghz > 0.0, "measurement.spectrum_resolution_ghz", "must be > 0");
    check(m.spectrum_max_ghz > m.spectrum_min_ghz, "measurement.spectrum_max_ghz",
          "must exceed spectrum_min_ghz");
    check(m.spectrum_bin_ghz > 0.0, "measurement.spectrum_bin_ghz", "must be > 0");
}

json to_json(const Scenario& s) {
    json modes = json::array();
    for (const auto& m : s.modes) modes.push_back(mode_json(m));
    json emitters = json::array();
    for (const auto& e : s.nanodiamond.emitters) emitters.push_back(emitter_json(e));
    json refs = json::object();
    for (const auto& [name, pose] : s.reference_poses) refs[name] = pose_json(pose);
    const auto& m = s.measurement;
    return {
        {"schema", schema_version},
        {"name", s.name},
        {"seed", s.seed},
        {"geometry",
         {{"hole_spacing_nm", s.geometry.hole_spacing_nm},
          {"half_length_nm", s.geometry.half_length_nm},
          {"half_extent_y_nm", s.geometry.half_extent_y_nm},
          {"beam_half_width_nm", s.geometry.beam_half_width_nm},
          {"z_decay_nm", s.geometry.z_decay_nm}}},
        {"modes", modes},
        {"default_mode", s.default_mode},
        {"nanodiamond", {{"pose", pose_json(s.nanodiamond.pose)}, {"emitters", emitters}}},
        {"noise",
         {{"placement_sigma_nm", s.noise.placement_sigma_nm},
          {"rotation_sigma_deg", s.noise.rotation_sigma_deg},
          {"readout_sigma_nm", s.noise.readout_sigma_nm},
          {"readout_sigma_deg", s.noise.readout_sigma_deg},
          {"translation_quantum_nm", s.noise.translation_quantum_nm},
          {"noiseless_measurements", s.noise.noiseless_measurements}}},
        {"tuner",
         {{"initial_offset_ghz", s.tuner.initial_offset_ghz},
          {"drift_rate_ghz_per_s", s.tuner.drift_rate_ghz_per_s},
          {"lock_jitter_bound_ghz", s.tuner.lock_jitter_bound_ghz}}},
        {"measurement",
         {{"g2_pairs", m.g2_pairs},
          {"g2_bins", m.g2_bins},
          {"g2_tau_max_ns", m.g2_tau_max_ns},
          {"g2_snr", m.g2_snr},
          {"rabi_powers_uw", m.rabi_powers_uw},
          {"ple_power_uw", m.ple_power_uw},
          {"ple_range_ghz", m.ple_range_ghz},
          {"ple_points", m.ple_points},
          {"ple_dwell_s", m.ple_dwell_s},
          {"ple_dark_cps", m.ple_dark_cps},
          {"linewidth_powers_uw", m.linewidth_powers_uw},
          {"polarization_angles_deg", m.polarization_angles_deg},
          {"polarization_counts", m.polarization_counts},
          {"spectrum_resolution_ghz", m.spectrum_resolution_ghz},
          {"spectrum_min_ghz", m.spectrum_min_ghz},
          {"spectrum_max_ghz", m.spectrum_max_ghz},
          {"spectrum_bin_ghz", m.spectrum_bin_ghz}}},
        {"reference_poses", refs},
    };
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    Fields f(j, "scenario");
    int schema = schema_version;
    f.read("schema", schema);
    require(schema == schema_version, ErrorCode::validation,
            "scenario.schema: unsupported version " + std::to_string(schema));
    f.read("name", s.name);
    f.read("seed", s.seed);
    if (const json* g = f.child("geometry")) {
        Fields fg(*g, "scenario.geometry");
        fg.read("hole_spacing_nm", s.geometry.hole_spacing_nm);
        fg.read("half_length_nm", s.geometry.half_length_nm);
        fg.read("half_extent_y_nm", s.geometry.half_extent_y_nm);
        fg.read("beam_half_width_nm", s.geometry.beam_half_width_nm);
        fg.read("z_decay_nm", s.geometry.z_decay_nm);
        fg.finish();
    }
    if (const json* ms = f.child("modes")) {
        require(ms->is_array(), ErrorCode::validation, "scenario.modes: expected an array");
        for (std::size_t i = 0; i < ms->size(); ++i)
            s.modes.push_back(
                mode_from((*ms)[i], "scenario.modes[" + std::to_string(i) + "]", s.geometry));
    }
    if (!s.modes.empty()) s.default_mode = s.modes.front().mode.label;
    f.read("default_mode", s.default_mode);
    if (const json* nd = f.child("nanodiamond")) {
        Fields fn(*nd, "scenario.nanodiamond");
        if (const json* p = fn.child("pose")) s.nanodiamond.pose = pose_from(*p, "scenario.nanodiamond.pose");
        if (const json* es = fn.child("emitters")) {
            require(es->is_array(), ErrorCode::validation,
                    "scenario.nanodiamond.emitters: expected an array");
            for (std::size_t i = 0; i < es->size(); ++i)
                s.nanodiamond.emitters.push_back(emitter_from(
                    (*es)[i], "scenario.nanodiamond.emitters[" + std::to_string(i) + "]"));
        }
        fn.finish();
    }
    if (const json* n = f.child("noise")) {
        Fields fn(*n, "scenario.noise");
        fn.read("placement_sigma_nm", s.noise.placement_sigma_nm);
        fn.read("rotation_sigma_deg", s.noise.rotation_sigma_deg);
        fn.read("readout_sigma_nm", s.noise.readout_sigma_nm);
        fn.read("readout_sigma_deg", s.noise.readout_sigma_deg);
        fn.read("translation_quantum_nm", s.noise.translation_quantum_nm);
        fn.read("noiseless_measurements", s.noise.noiseless_measurements);
        fn.finish();
    }
    if (const json* t = f.child("tuner")) {
        Fields ft(*t, "scenario.tuner");
        ft.read("initial_offset_ghz", s.tuner.initial_offset_ghz);
        ft.read("drift_rate_ghz_per_s", s.tuner.drift_rate_ghz_per_s);
        ft.read("lock_jitter_bound_ghz", s.tuner.lock_jitter_bound_ghz);
        ft.finish();
    }
    if (const json* mj = f.child("measurement")) {
        auto& m = s.measurement;
        Fields fm(*mj, "scenario.measurement");
        fm.read("g2_pairs", m.g2_pairs);
        fm.read("g2_bins", m.g2_bins);
        fm.read("g2_tau_max_ns", m.g2_tau_max_ns);
        fm.read("g2_snr", m.g2_snr);
        fm.read("rabi_powers_uw", m.rabi_powers_uw);
        fm.read("ple_power_uw", m.ple_power_uw);
        fm.read("ple_range_ghz", m.ple_range_ghz);
        fm.read("ple_points", m.ple_points);
        fm.read("ple_dwell_s", m.ple_dwell_s);
        fm.read("ple_dark_cps", m.ple_dark_cps);
        fm.read("linewidth_powers_uw", m.linewidth_powers_uw);
        fm.read("polarization_angles_deg", m.polarization_angles_deg);
        fm.read("polarization_counts", m.polarization_counts);
        fm.read("spectrum_resolution_ghz", m.spectrum_resolution_ghz);
        fm.read("spectrum_min_ghz", m.spectrum_min_ghz);
        fm.read("spectrum_max_ghz", m.spectrum_max_ghz);
        fm.read("spectrum_bin_ghz", m.spectrum_bin_ghz);
        fm.finish();
    }
    if (const json* r = f.child("reference_poses")) {
        require(r->is_object(), ErrorCode::validation, "scenario.reference_poses: expected an object");
        for (auto it = r->begin(); it != r->end(); ++it)
            s.reference_poses[it.key()] = pose_from(it.value(), "scenario.reference_poses." + it.key());
    }
    f.finish();
    validate(s);
    return s;
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, e.what());
    }
    return scenario_from_json(j);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open scenario " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write scenario " + path.string());
    out << to_json(scenario).dump(2) << '\n';
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path.string());
}

Scenario reference_device_scenario() {
    const ReferenceTargets targets;
    Scenario s;
    s.name = "reference-device";
    s.seed = 20231001;
    const double a = s.geometry.hole_spacing_nm;

    CavityMode ii;
    ii.label = "II";
    ii.lambda_cav_nm = 730.0;
    ii.q_factor = 2200.0;
    ii.mode_volume = 5.8;
    ii.geometry = s.geometry;
    ii.envelope = default_envelope("II", s.geometry);
    ii.transmission_factor = 0.5;

    CavityMode iii = ii;
    iii.label = "III";
    iii.lambda_cav_nm = 735.0;
    iii.q_factor = 800.0;
    iii.mode_volume = 6.2;
    iii.envelope = default_envelope("III", s.geometry);
    iii.transmission_factor = 1.0;

    EmitterLine siv;
    siv.name = "C";
    siv.isolated = true;
    siv.p_sat_uw = 2.0;

    // Spectator lines of the ensemble, only seen in tuning spectra.
    const double spectator_nm[] = {735.62, 736.31, 736.78, 737.20};
    const double spectator_deg[] = {20.0, 65.0, 110.0, 150.0};
    s.nanodiamond.emitters.push_back(siv);
    for (int i = 0; i < 4; ++i) {
        EmitterLine e;
        e.name = std::string(1, static_cast<char>('D' + i));
        e.zpl_wavelength_nm = spectator_nm[i];
        e.dipole_body = unit_from_angles(spectator_deg[i]);
        e.brightness_cps = 30'000.0;
        s.nanodiamond.emitters.push_back(e);
    }

    const double z = 50.0;
    s.reference_poses["pos1"] = {{3.1 * a, 0.0, z}, 0.0};
    s.reference_poses["pos2"] = {{0.0, 0.0, z}, 0.0};
    s.reference_poses["pos3"] = {{8.0 * a, 0.0, z}, 0.0};
    s.reference_poses["pos3_orthogonal"] = {{8.0 * a, 0.0, z}, 90.0};
    s.nanodiamond.pose = s.reference_poses["pos1"];

    const ModeField f_ii(ii);
    const ModeField f_iii(iii);
    ModeEntry e_ii{ii, {}};
    ModeEntry e_iii{iii, {}};
    e_ii.calibration.s_ref_ghz_per_sqrt_uw =
        calibrate_slope_reference(f_ii, s.reference_poses["pos3"], siv, targets.slope_pos3_ii);
    e_iii.calibration.s_ref_ghz_per_sqrt_uw =
        calibrate_slope_reference(f_iii, s.reference_poses["pos2"], siv, targets.slope_pos2_iii);
    e_ii.calibration.c_max =
        calibrate_c_max(f_ii, s.reference_poses["pos3"], siv, targets.cooperativity_pos3_ii);
    // Same emitter in both modes: scale by the ratio of Purcell factors.
    e_iii.calibration.c_max = e_ii.calibration.c_max * purcell_factor(iii.q_factor, iii.mode_volume) /
                              purcell_factor(ii.q_factor, ii.mode_volume);
    s.modes = {e_ii, e_iii};
    s.default_mode = "II";
    validate(s);
    return s;
}

}  // namespace nanotwin
