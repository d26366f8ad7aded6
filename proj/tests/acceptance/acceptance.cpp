// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nanotwin/coupling.hpp"
#include "nanotwin/error.hpp"
#include "nanotwin/estimators.hpp"
#include "nanotwin/photophysics.hpp"
#include "nanotwin/scenario.hpp"
#include "nanotwin/session.hpp"
#include "nanotwin/tuning.hpp"

using namespace nanotwin;

namespace {

constexpr double kSpeedOfLight = 299'792'458.0;
constexpr double kPi = 3.14159265358979323846;

// Cavity wavelength `ghz` above the emitter frequency.
double cavity_detuned_nm(double emitter_nm, double ghz) {
    return kSpeedOfLight / (kSpeedOfLight / (emitter_nm * 1e-9) + ghz * 1e9) * 1e9;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) ok = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (cond ? "" : " [X]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Check purcell() {
    Check c;
    const double f2 = purcell_factor(2200, 5.8);
    const double f3 = purcell_factor(800, 6.2);
    c.expect(std::abs(f2 - 28.8) <= 0.05, fmt("F_II = %.4f", f2));
    c.expect(std::abs(f3 - 9.8) <= 0.05, fmt("F_III = %.4f", f3));
    return c;
}

Check detuning() {
    Check c;
    const double d = detuning_term(736.05, cavity_detuned_nm(736.05, 10.0), 2200);
    c.expect(std::abs(d - 0.988) <= 0.001, fmt("detuning term at 10 GHz = %.5f", d));
    return c;
}

Check cooperativity_chain() {
    Check c;
    const auto a = cooperativity_estimate(158, 5, 142, 4);
    const auto b = cooperativity_estimate(218, 6, 142, 4);
    c.expect(std::abs(a.c - 0.113) <= 0.005 && std::abs(a.sigma_c - 0.047) <= 0.0005,
             fmt("C1 = %.4f +/- %.4f", a.c, a.sigma_c));
    c.expect(std::abs(b.c - 0.535) <= 0.005 && std::abs(b.sigma_c - 0.06) <= 0.005,
             fmt("C3 = %.4f +/- %.4f", b.c, b.sigma_c));
    return c;
}

Check linewidths() {
    Check c;
    const double l1 = linewidth_on_resonance(142, cooperativity_estimate(158, 5, 142, 4).c);
    const double l3 = linewidth_on_resonance(142, cooperativity_estimate(218, 6, 142, 4).c);
    c.expect(std::abs(l1 - 158) <= 1.0, fmt("delta1 = %.2f MHz", l1));
    c.expect(std::abs(l3 - 218) <= 1.0, fmt("delta3 = %.2f MHz", l3));
    c.expect(std::abs(l3 - l1 - 60) <= 1.0, fmt("broadening = %.2f MHz", l3 - l1));
    return c;
}

// Fraction of `runs` fits recovering omega within 5 %, omega ~ U(0.5, 3) rad/ns.
int g2_recoveries(double gamma, int runs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> omega(0.5, 3.0);
    int within = 0;
    for (int i = 0; i < runs; ++i) {
        G2Model m;
        m.omega = omega(rng);
        m.gamma = gamma;
        m.snr = 18.5;
        try {
            const FitResult f = fit_g2(simulate_g2_histogram(m, 100'000, rng()));
            if (f.converged && std::abs(f.value("omega") - m.omega) <= 0.05 * m.omega) ++within;
        } catch (const TwinError&) {
        }
    }
    return within;
}

Check g2_closed_loop() {
    Check c;
    const int runs = 200;
    const double gamma_free = 2.0 * kPi * 0.142;
    const int within = g2_recoveries(gamma_free, runs, 20231001);
    c.expect(within >= 0.95 * runs, fmt("%.0f/%.0f fits within 5%% (free-space decay rate)", within, runs));
    // Informational: with the cavity-broadened decay rate at pos3 (C = 0.535)
    // the slow end of the omega range sits near the shot-noise floor.
    const int broadened = g2_recoveries(gamma_free * 1.535, runs, 20231001);
    c.detail += fmt("; info: %.0f/%.0f with decay rate x%.3f", broadened, runs, 1.535);
    G2Model m;
    m.snr = 18.5;
    const double g0 = g2_theory(m, 0.0);
    c.expect(std::abs(g0 - 0.10) <= 0.005, fmt("g2(0) = %.4f", g0));
    return c;
}

Check rabi_scenario() {
    Check c;
    const Scenario base = reference_device_scenario();
    struct Case {
        const char* pose;
        const char* mode;
        double value;
        double sigma;
        double fitted = 0.0;
        double fit_sigma = 0.0;
    };
    std::vector<Case> cases{{"pos1", "II", 0.33, 0.01}, {"pos3", "II", 0.56, 0.05},
                            {"pos1", "III", 0.56, 0.02}, {"pos2", "III", 0.82, 0.03}};
    for (auto& k : cases) {
        Scenario sc = base;
        sc.nanodiamond.pose = base.reference_poses.at(k.pose);
        Session s(sc);
        const FitResult f = *s.measure_rabi(k.mode).fit;
        k.fitted = f.value("slope");
        k.fit_sigma = f.sigma("slope");
        const double sigma = std::hypot(k.sigma, k.fit_sigma);
        c.expect(std::abs(k.fitted - k.value) <= 2.0 * sigma,
                 std::string(k.pose) + "/" + k.mode + fmt(" %.3f (ref %.2f, 2sigma %.3f)", k.fitted, k.value, 2 * sigma));
    }
    c.expect(cases[0].fitted < cases[1].fitted && cases[0].fitted < cases[2].fitted &&
                 cases[1].fitted < cases[3].fitted && cases[2].fitted < cases[3].fitted,
             "ordering");
    const double ratio = cases[1].fitted / cases[0].fitted;
    c.expect(ratio >= 1.6 && ratio <= 1.8, fmt("pos3/pos1 II ratio = %.3f", ratio));
    return c;
}

Check optimizer() {
    Check c;
    const Scenario base = reference_device_scenario();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-3000.0, 3000.0), uy(-200.0, 200.0), ur(0.0, 360.0);
    std::vector<double> fraction, steps, misalign, cos2, orthogonal_c;
    const auto& emitter = base.nanodiamond.isolated();
    const double axis = base.mode("II").mode.polarization_axis_deg;
    for (int seed = 1; seed <= 100; ++seed) {
        Scenario sc = base;
        sc.nanodiamond.pose.position = {std::round(ux(rng)), std::round(uy(rng)), 50.0};
        sc.nanodiamond.pose.rotation_deg = ur(rng);

        Session s(sc, seed);
        const auto out = s.optimize("full", "II", 25);
        fraction.push_back(out.protocol->spatial_fraction());
        steps.push_back(out.protocol->step_count());
        const double mis = axis_difference(lab_dipole_angle_deg(s.state().true_pose, emitter), axis);
        misalign.push_back(std::abs(mis));
        const double cm = std::cos(mis * kPi / 180.0);
        cos2.push_back(cm * cm);

        Session o(sc, seed);
        orthogonal_c.push_back(o.optimize("full", "II", 25, true).protocol->cooperativity);
    }
    const double within5 = std::count_if(misalign.begin(), misalign.end(), [](double m) { return m <= 5.0; });
    c.expect(median(fraction) >= 0.95, fmt("median spatial fraction = %.3f (min %.3f)", median(fraction),
                                           *std::min_element(fraction.begin(), fraction.end())));
    c.expect(median(steps) <= 25, fmt("median steps = %.1f (max %.0f)", median(steps),
                                      *std::max_element(steps.begin(), steps.end())));
    c.expect(median(misalign) <= 5.0 && median(cos2) >= 0.99,
             fmt("median misalignment = %.2f deg, cos2 = %.4f, %.0f/100 within 5 deg", median(misalign),
                 median(cos2), within5));
    const double worst_c = *std::max_element(orthogonal_c.begin(), orthogonal_c.end());
    c.expect(worst_c <= 0.01, fmt("orthogonal variant max C = %.5f", worst_c));
    return c;
}

Check tuning() {
    Check c;
    const double lc = cavity_detuned_nm(736.05, 42.5);
    const TuneResult r = tune_to_resonance(TunerState{}, 736.05, lc, 0.85);
    c.expect(std::abs(r.duration_s - 50.0) <= 0.1, fmt("tuning time = %.3f s", r.duration_s));
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        worst = std::max(worst, stability_report(r.state, 8.0 * 3600.0, 1.0, seed));
    c.expect(worst <= 10.0, fmt("8 h lock max residual = %.3f GHz", worst));
    return c;
}

Check replay() {
    Check c;
    const std::vector<std::string> menu{
        "manipulate move --dx 10 --dy 0",       "manipulate move --dx -20 --dy 10",
        "manipulate rotate --dtheta 7.5",       "measure g2 --power 4.5 --pairs 30000",
        "measure ple --points 64",              "measure polarization",
        "tune open",                            "tune close",
        "tune wait --dt 2",                     "tune lock",
        "tune unlock",                          "tune reset",
        "report coupling --mode III",           "measure spectrum --duration 3 --dt 1",
        "optimize align --mode II",             "optimize coarse --mode III",
        "estimate cooperativity --on 218 --on-sigma 6 --off 142 --off-sigma 4"};
    std::mt19937_64 rng(99);
    int identical = 0;
    std::size_t commands = 0;
    for (int run = 0; run < 20; ++run) {
        Session s(reference_device_scenario(), rng());
        for (int k = 0; k < 15; ++k) {
            try {
                s.run_command(menu[rng() % menu.size()]);
            } catch (const TwinError&) {
            }
        }
        commands += s.log().size();
        const Session r = Session::replay(ExperimentLog::from_jsonl(s.log().to_jsonl()));
        if (r.state() == s.state() && r.log() == s.log()) ++identical;
    }
    c.expect(identical == 20, fmt("%.0f/20 sessions identical (%.0f records)", identical, commands));
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
        {"purcell-factors", purcell},
        {"detuning-control", detuning},
        {"cooperativity-chain", cooperativity_chain},
        {"linewidth-consistency", linewidths},
        {"g2-closed-loop", g2_closed_loop},
        {"rabi-scaling-scenario", rabi_scenario},
        {"optimizer-performance", optimizer},
        {"tuning", tuning},
        {"replay", replay},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        if (!c.ok) ++failed;
        std::printf("%s %s: %s\n", c.ok ? "PASS" : "FAIL", name, c.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
