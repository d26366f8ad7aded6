#include <gtest/gtest.h>

#include <cmath>

#include "nanotwin/error.hpp"
#include "nanotwin/field_model.hpp"
#include "nanotwin/scenario.hpp"

using namespace nanotwin;

namespace {

const Scenario& reference() {
    static const Scenario s = reference_device_scenario();
    return s;
}

ModeField mode(const std::string& label) { return ModeField(reference().mode(label).mode); }

}  // namespace

// Values below come from an independent numpy evaluation of
// H_k(u) exp(-u^2) cos(pi x / a) exp(-y^2 / 2w^2) exp(-z / z0), normalized
// by its on-axis maximum.
TEST(FieldModel, FrozenSamples) {
    const auto ii = mode("II");
    const auto iii = mode("III");
    EXPECT_NEAR(ii.field_at({775, 0, 50}).e_y, -0.35038605135853407, 1e-9);
    EXPECT_NEAR(ii.field_at({2000, 0, 50}).e_y, 0.606529058109862, 1e-9);
    EXPECT_NEAR(iii.field_at({775, 0, 50}).e_y, 0.42327949824918765, 1e-9);
    EXPECT_NEAR(iii.field_at({2000, 0, 50}).e_y, 0.08954932610856517, 1e-9);
    EXPECT_NEAR(ii.peak_position_nm(), 1999.817423069696, 1e-4);
}

TEST(FieldModel, IiModeHasNodeAtCentre) {
    EXPECT_EQ(mode("II").field_at({0, 0, 0}).e_y, 0.0);
    EXPECT_EQ(mode("II").ldos_at({0, 0, 0}), 0.0);
}

TEST(FieldModel, IiiModeCentreIsGlobalMaximum) {
    EXPECT_NEAR(std::abs(mode("III").field_at({0, 0, 0}).e_y), 1.0, 1e-12);
}

TEST(FieldModel, EvanescentLimit) {
    for (const char* m : {"II", "III"})
        EXPECT_LT(std::abs(mode(m).field_at({2000, 0, 5000}).e_y), 1e-20) << m;
}

TEST(FieldModel, IiiEnvelopeNodeSuppressesLdos) {
    const auto iii = mode("III");
    const double node = reference().mode("III").mode.envelope.width_sigma_nm / std::sqrt(2.0);
    EXPECT_GT(node, 7.0 * 250.0);
    EXPECT_LT(node, 9.0 * 250.0);
    EXPECT_LT(iii.ldos_at({node, 0, 0}), 0.05);
}

TEST(FieldModel, IiLdosHigherBetweenHolesEightAndNineThanAtPos1) {
    const auto ii = mode("II");
    EXPECT_GT(ii.ldos_at({2000, 0, 0}), ii.ldos_at({775, 0, 0}));
}

TEST(FieldModel, NormalizationOnDenseGrid) {
    for (const char* m : {"II", "III"}) {
        const auto f = mode(m);
        double best = 0.0;
        for (double x = -5000; x <= 5000; x += 1.0) best = std::max(best, std::abs(f.field_at({x, 0, 0}).e_y));
        best = std::max(best, std::abs(f.field_at({f.peak_position_nm(), 0, 0}).e_y));
        EXPECT_NEAR(best, 1.0, 1e-6) << m;
    }
}

TEST(FieldModel, MagnitudeSymmetricAboutCentre) {
    for (const char* m : {"II", "III"}) {
        const auto f = mode(m);
        for (double x = 0; x <= 5000; x += 7.0)
            EXPECT_NEAR(std::abs(f.field_at({x, 0, 0}).e_y), std::abs(f.field_at({-x, 0, 0}).e_y), 1e-9);
    }
}

TEST(FieldModel, EnvelopeZeroCrossingsMatchNodeCount) {
    for (int k = 0; k <= 2; ++k) {
        const EnvelopeSpec spec{k, 2500.0};
        int crossings = 0;
        double prev = envelope_value(spec, -5000.0);
        for (double x = -5000.0 + 0.5; x <= 5000.0; x += 0.5) {
            const double v = envelope_value(spec, x);
            if (v == 0.0 || (prev != 0.0 && (v > 0.0) != (prev > 0.0))) ++crossings;
            prev = v;
        }
        EXPECT_EQ(crossings, k);
    }
}

TEST(FieldModel, TwoNodeEnvelopePeaksAtCentre) {
    const EnvelopeSpec spec{2, 2500.0};
    EXPECT_NEAR(std::abs(envelope_value(spec, 0.0)), 1.0, 1e-15);
    for (double x = 1.0; x <= 5000.0; x += 1.0) EXPECT_LE(std::abs(envelope_value(spec, x)), 1.0);
}

TEST(FieldModel, LdosIsFieldSquared) {
    const auto f = mode("II");
    for (double x = -4000; x <= 4000; x += 123.0) {
        const Vec3 p{x, 37.0, 20.0};
        const double e = f.field_at(p).e_y;
        EXPECT_EQ(f.ldos_at(p), e * e);
    }
}

TEST(FieldModel, MonotoneEvanescentDecay) {
    const auto f = mode("III");
    for (double x = -3000; x <= 3000; x += 250.0) {
        double prev = std::abs(f.field_at({x, 10, 0}).e_y);
        for (double z = 5; z <= 600; z += 5) {
            const double v = std::abs(f.field_at({x, 10, z}).e_y);
            EXPECT_LE(v, prev);
            prev = v;
        }
    }
}

TEST(FieldModel, OutsideExtentIsDomainError) {
    const auto f = mode("II");
    try {
        (void)f.field_at({6000, 0, 0});
        FAIL();
    } catch (const TwinError& e) {
        EXPECT_EQ(e.code(), ErrorCode::domain);
    }
    EXPECT_THROW((void)f.field_at({0, 0, -1}), TwinError);
}

TEST(FieldModel, InvalidModeRejected) {
    CavityMode m;
    m.label = "X";
    m.transmission_factor = 1.5;
    EXPECT_THROW(validate(m), TwinError);
    m.transmission_factor = 1.0;
    m.q_factor = 0.0;
    EXPECT_THROW(ModeField{m}, TwinError);
}

TEST(FieldModel, FieldMapRowsIncludeEndpoints) {
    const auto rows = field_map(mode("II"), -100, 100, 50);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.front().x_nm, -100);
    EXPECT_EQ(rows.back().x_nm, 100);
    EXPECT_EQ(rows[2].e_y, 0.0);
}

TEST(CalibrateEnvelope, IiConstraintsGiveOneNode) {
    const DeviceGeometry g;
    const auto spec = calibrate_envelope(
        "II", g,
        {{ConstraintKind::node_at, 0.0, 0.0}, {ConstraintKind::peak_within, 7.5 * 250, 8.5 * 250}});
    EXPECT_EQ(spec.node_count, 1);
    CavityMode m;
    m.label = "II";
    m.envelope = spec;
    const ModeField f(m);
    EXPECT_GE(f.peak_position_nm(), 7.5 * 250);
    EXPECT_LE(f.peak_position_nm(), 8.5 * 250);
}

TEST(CalibrateEnvelope, EmptyConstraintsGiveDefaults) {
    const DeviceGeometry g;
    EXPECT_EQ(calibrate_envelope("II", g, {}), (EnvelopeSpec{1, 2750.0}));
    EXPECT_EQ(calibrate_envelope("III", g, {}), (EnvelopeSpec{2, 2500.0}));
}

TEST(CalibrateEnvelope, ContradictionIsCalibrationError) {
    const DeviceGeometry g;
    try {
        (void)calibrate_envelope(
            "II", g, {{ConstraintKind::node_at, 0.0, 0.0}, {ConstraintKind::envelope_max_at, 0.0, 0.0}});
        FAIL();
    } catch (const TwinError& e) {
        EXPECT_EQ(e.code(), ErrorCode::calibration);
        EXPECT_NE(std::string(e.what()).find("node_at"), std::string::npos);
    }
}
