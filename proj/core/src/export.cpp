#include "nanotwin/export.hpp"

#include <cstdio>
#include <fstream>

#include "nanotwin/error.hpp"
#include "nanotwin/serialization.hpp"

namespace nanotwin {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string unit_suffix(const std::string& unit) {
    std::string out;
    for (char c : unit) {
        if (c == '/') out += "_per_";
        else if (c == ' ' || c == '(' || c == ')') continue;
        else out += c;
    }
    return out.empty() ? "arb" : out;
}

struct SummaryRow {
    std::string quantity;
    std::string label;
    double value;
    double sigma;
    std::string unit;
    std::uint64_t seq;
};

std::string row_text(const SummaryRow& r) {
    return r.quantity + "," + r.label + "," + num(r.value) + "," + num(r.sigma) + "," + r.unit + "," +
           std::to_string(r.seq) + "\n";
}

}  // namespace

std::string field_map_csv(const ModeField& field, double x0_nm, double x1_nm, double step_nm,
                          double z_nm) {
    std::string out = "x_nm,e_y,ldos\n";
    for (const auto& row : field_map(field, x0_nm, x1_nm, step_nm, z_nm))
        out += num(row.x_nm) + "," + num(row.e_y) + "," + num(row.ldos) + "\n";
    return out;
}

std::string measurement_csv(const MeasurementRecord& r) {
    const std::string xs = "abscissa_" + unit_suffix(r.abscissa_unit);
    const std::string ys = "ordinate_" + unit_suffix(r.ordinate_unit);
    std::string out;
    if (r.row_length > 0 && !r.frames.empty()) {
        out = "time_s," + xs + "," + ys + "\n";
        for (std::size_t i = 0; i < r.frames.size(); ++i)
            for (std::size_t k = 0; k < r.row_length; ++k)
                out += num(r.frames[i]) + "," + num(r.abscissa[k]) + "," +
                       num(r.ordinate[i * r.row_length + k]) + "\n";
        return out;
    }
    out = xs + "," + ys + "\n";
    for (std::size_t i = 0; i < r.abscissa.size(); ++i)
        out += num(r.abscissa[i]) + "," + num(r.ordinate[i]) + "\n";
    return out;
}

MeasurementRecord measurement_from_log(const ExperimentLog& log, std::uint64_t seq) {
    const LogRecord& rec = log.at_seq(seq);
    require(rec.type == "measurement" && rec.payload.contains("record"), ErrorCode::not_found,
            "log record " + std::to_string(seq) + " holds no raw measurement");
    return record_from_json(rec.payload.at("record"));
}

std::string summary_csv(const ExperimentLog& log) {
    std::string out = "quantity,label,value,sigma,unit,record_seq\n";
    for (const auto& r : log.records()) {
        const json& p = r.payload;
        const std::string label = p.value("mode", std::string());
        if (r.type == "coupling") {
            out += row_text({"purcell_factor", label, p.at("purcell_factor").get<double>(), 0.0, "1", r.seq});
            out += row_text({"detuning_term", label, p.at("detuning_term").get<double>(), 0.0, "1", r.seq});
            out += row_text({"spatial_term", label, p.at("spatial_term").get<double>(), 0.0, "1", r.seq});
            out += row_text({"cooperativity_model", label, p.at("cooperativity").get<double>(), 0.0, "1", r.seq});
            out += row_text({"rabi_slope_model", label, p.at("rabi_slope_ghz_per_sqrt_uw").get<double>(), 0.0,
                             "GHz/sqrt(uW)", r.seq});
            out += row_text({"linewidth_model", label, p.at("zero_power_linewidth_mhz").get<double>(), 0.0,
                             "MHz", r.seq});
        } else if (r.type == "fit") {
            const FitResult f = fit_from_json(p.at("fit"));
            if (f.model == "rabi_scaling") {
                out += row_text({"rabi_slope", label, f.value("slope"), f.sigma("slope"), "GHz/sqrt(uW)", r.seq});
            } else if (f.model == "linewidth_power") {
                out += row_text({"delta0", label, f.value("delta0"), f.sigma("delta0"), "MHz", r.seq});
                out += row_text({"p_sat", label, f.value("p_sat"), f.sigma("p_sat"), "uW", r.seq});
            }
        } else if (r.type == "cooperativity") {
            out += row_text({"cooperativity", "", p.at("c").get<double>(), p.at("sigma_c").get<double>(), "1", r.seq});
            out += row_text({"gamma_added", "", p.at("gamma_added_mhz").get<double>(), 0.0, "MHz", r.seq});
        }
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + path);
    out << text;
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path);
}

}  // namespace nanotwin
