#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nanotwin/coupling.hpp"
#include "nanotwin/error.hpp"
#include "nanotwin/estimators.hpp"
#include "nanotwin/scenario.hpp"

using namespace nanotwin;

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

// Cavity wavelength (nm) that puts the cavity `ghz` above the emitter frequency.
double detuned_cavity_nm(double emitter_nm, double ghz) {
    const double nu = kSpeedOfLight / (emitter_nm * 1e-9) + ghz * 1e9;
    return kSpeedOfLight / nu * 1e9;
}

EmitterLine aligned_emitter() {
    EmitterLine e;
    e.dipole_body = {0.0, 1.0, 0.0};
    return e;
}

const Scenario& reference() {
    static const Scenario s = reference_device_scenario();
    return s;
}

}  // namespace

TEST(Purcell, ReferenceModes) {
    EXPECT_NEAR(purcell_factor(2200, 5.8), 28.82412982928575, 1e-10);
    EXPECT_NEAR(purcell_factor(800, 6.2), 9.80527583635527, 1e-10);
}

TEST(Purcell, PrefactorIdentity) {
    EXPECT_NEAR(purcell_factor(4.0 * kPi * kPi / 3.0, 1.0), 1.0, 1e-15);
}

TEST(Purcell, RejectsNonPositive) {
    EXPECT_THROW((void)purcell_factor(0, 1), TwinError);
    EXPECT_THROW((void)purcell_factor(10, -1), TwinError);
}

TEST(Detuning, ZeroDetuningIsUnity) {
    for (double q : {1.0, 800.0, 2200.0, 1e6}) EXPECT_EQ(detuning_term(736.05, 736.05, q), 1.0);
}

TEST(Detuning, TenGigahertz) {
    const double lc = detuned_cavity_nm(736.05, 10.0);
    EXPECT_NEAR(detuning_term(736.05, lc, 2200), 0.9884644150852429, 1e-9);
    EXPECT_GE(detuning_term(736.05, detuned_cavity_nm(736.05, -10.0), 2200), 0.98);
}

TEST(Detuning, AsymptoteAndMonotonicity) {
    EXPECT_LT(detuning_term(736.05, 600.0, 2200), 1e-4);
    double prev = 1.0;
    for (double ghz = 1.0; ghz < 2000.0; ghz *= 1.3) {
        const double d = detuning_term(736.05, detuned_cavity_nm(736.05, ghz), 2200);
        EXPECT_LT(d, prev);
        prev = d;
    }
}

TEST(SpatialTerm, PerfectOverlapAtFieldMaximum) {
    const ModeField f(reference().mode("III").mode);
    NanodiamondPose pose;
    pose.position = {0, 0, 0};
    EXPECT_NEAR(spatial_term(f, pose, aligned_emitter()), 1.0, 1e-12);
}

TEST(SpatialTerm, OrthogonalDipoleDecouples) {
    const ModeField f(reference().mode("III").mode);
    NanodiamondPose pose;
    pose.position = {0, 0, 0};
    pose.rotation_deg = 90.0;
    EXPECT_LT(spatial_term(f, pose, aligned_emitter()), 1e-30);
    EXPECT_LT(rabi_slope(f, reference().mode("III").calibration, pose, aligned_emitter()), 1e-14);
}

TEST(SpatialTerm, FiveDegreeMisalignment) {
    const ModeField f(reference().mode("III").mode);
    NanodiamondPose pose;
    pose.position = {0, 0, 0};
    pose.rotation_deg = 5.0;
    EXPECT_NEAR(spatial_term(f, pose, aligned_emitter()), 0.9924038765061041, 1e-12);
}

TEST(SpatialTerm, SymmetricInMisalignmentAndMaximalWhenAligned) {
    const ModeField f(reference().mode("II").mode);
    NanodiamondPose pose;
    pose.position = {1990, 0, 50};
    const double aligned = spatial_term(f, pose, aligned_emitter());
    for (double t = 1.0; t < 90.0; t += 3.7) {
        pose.rotation_deg = t;
        const double plus = spatial_term(f, pose, aligned_emitter());
        pose.rotation_deg = 360.0 - t;
        EXPECT_NEAR(plus, spatial_term(f, pose, aligned_emitter()), 1e-15);
        EXPECT_LT(plus, aligned);
    }
}

TEST(Enhancement, FactorizesExactly) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-4500, 4500), uy(-400, 400), uz(0, 200), ur(0, 360),
        ul(734, 738);
    for (const auto& entry : reference().modes) {
        const ModeField f(entry.mode);
        for (int i = 0; i < 200; ++i) {
            NanodiamondPose pose;
            pose.position = {ux(rng), uy(rng), uz(rng)};
            pose.rotation_deg = ur(rng);
            const auto r = enhancement(f, entry.calibration, pose, aligned_emitter(), ul(rng));
            const double product = r.purcell_factor * r.detuning_term * r.spatial_term;
            EXPECT_NEAR(r.total_enhancement, product, 1e-12 * std::abs(product));
            EXPECT_GE(r.spatial_term, 0.0);
            EXPECT_LE(r.spatial_term, 1.0);
        }
    }
}

TEST(Enhancement, OnResonanceAtMaximum) {
    CavityMode m = reference().mode("III").mode;
    m.q_factor = 2200;
    m.mode_volume = 5.8;
    const ModeField f(m);
    NanodiamondPose pose;
    pose.position = {0, 0, 0};
    const auto r = enhancement(f, {}, pose, aligned_emitter(), 736.05);
    EXPECT_NEAR(r.total_enhancement, 28.82412982928575, 1e-10);
}

TEST(Enhancement, ZeroSpatialTermGivesZero) {
    const ModeField f(reference().mode("II").mode);
    NanodiamondPose pose;
    pose.position = {0, 0, 50};
    const auto r = enhancement(f, reference().mode("II").calibration, pose, aligned_emitter(), 736.05);
    EXPECT_EQ(r.total_enhancement, 0.0);
    EXPECT_EQ(r.cooperativity, 0.0);
}

TEST(Enhancement, CalibratedPos3Cooperativity) {
    const auto& ii = reference().mode("II");
    const ModeField f(ii.mode);
    const auto r = enhancement(f, ii.calibration, reference().reference_poses.at("pos3"),
                               reference().nanodiamond.isolated(), 736.05);
    EXPECT_NEAR(r.cooperativity, 0.535, 1e-9);
}

TEST(Linewidth, ReferenceValues) {
    EXPECT_NEAR(linewidth_on_resonance(142, 16.0 / 142.0), 158.0, 1e-12);
    EXPECT_NEAR(linewidth_on_resonance(142, 0.535), 217.97, 1e-9);
    EXPECT_EQ(linewidth_on_resonance(142, 0.0), 142.0);
    EXPECT_EQ(linewidth_on_resonance(97.5, 0.0), 97.5);
}

TEST(Linewidth, RoundTripsThroughCooperativity) {
    for (double c : {0.0, 0.01, 0.113, 0.535, 2.0, 17.3}) {
        const double on = linewidth_on_resonance(142, c);
        EXPECT_NEAR(cooperativity_estimate(on, 1, 142, 1).c, c, 1e-12);
    }
}

TEST(RabiSlope, Pos3OverPos1RatioForIiMode) {
    const auto& ii = reference().mode("II");
    const ModeField f(ii.mode);
    const auto& e = reference().nanodiamond.isolated();
    const double ratio = rabi_slope(f, ii.calibration, reference().reference_poses.at("pos3"), e) /
                         rabi_slope(f, ii.calibration, reference().reference_poses.at("pos1"), e);
    EXPECT_GT(ratio, 1.6);
    EXPECT_LT(ratio, 1.8);
}

TEST(RabiSlope, LinearInField) {
    // |e_y| at z = 0 vs z = z0 ln 2 differs by exactly a factor of two.
    const auto& iii = reference().mode("III");
    const ModeField f(iii.mode);
    NanodiamondPose near, far;
    near.position = {300, 0, 0};
    far.position = {300, 0, iii.mode.geometry.z_decay_nm * std::log(2.0)};
    EXPECT_NEAR(rabi_slope(f, iii.calibration, near, aligned_emitter()),
                2.0 * rabi_slope(f, iii.calibration, far, aligned_emitter()), 1e-12);
}

TEST(RabiSlope, SquaredSlopeRecoversSpatialTerm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-4500, 4500), ur(0, 360);
    for (const auto& entry : reference().modes) {
        const ModeField f(entry.mode);
        for (int i = 0; i < 100; ++i) {
            NanodiamondPose pose;
            pose.position = {ux(rng), 0, 40};
            pose.rotation_deg = ur(rng);
            const double s = rabi_slope(f, entry.calibration, pose, aligned_emitter());
            const double sref = entry.calibration.s_ref_ghz_per_sqrt_uw;
            EXPECT_NEAR(s * s / (sref * sref * entry.mode.transmission_factor),
                        spatial_term(f, pose, aligned_emitter()), 1e-12);
        }
    }
}

TEST(Cooperativity, ParamsUseOrdinaryFrequencyWidths) {
    CavityMode m = reference().mode("II").mode;
    EXPECT_NEAR(cavity_kappa_mhz(m), 186670.27272727274, 1e-6);
    m.lambda_cav_nm = 736.05;
    const auto p = cooperativity_params(0.535, cavity_kappa_mhz(m), 142.0);
    EXPECT_NEAR(p.g_mhz, 1875.1517522935571, 1e-6);
    EXPECT_NEAR(p.gamma_added_mhz, 0.535 * 142.0, 1e-12);
    EXPECT_NEAR(g_from_cooperativity(0.535, cavity_kappa_mhz(m), 142.0), p.g_mhz, 1e-9);
}

TEST(Cooperativity, CalibrationHelpersInvertForwardModel) {
    const auto& ii = reference().mode("II");
    const ModeField f(ii.mode);
    const auto pose = reference().reference_poses.at("pos3");
    const auto& e = reference().nanodiamond.isolated();
    CouplingCalibration cal;
    cal.s_ref_ghz_per_sqrt_uw = calibrate_slope_reference(f, pose, e, 0.56);
    cal.c_max = calibrate_c_max(f, pose, e, 0.535);
    EXPECT_NEAR(rabi_slope(f, cal, pose, e), 0.56, 1e-12);
    EXPECT_NEAR(enhancement(f, cal, pose, e, 736.05).cooperativity, 0.535, 1e-12);
    NanodiamondPose node;
    node.position = {0, 0, 50};
    EXPECT_THROW((void)calibrate_c_max(f, node, e, 0.5), TwinError);
}
