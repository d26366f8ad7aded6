#pragma once

// JSON forms of the records that appear in the experiment log and in service
// responses. Doubles round-trip exactly.

#include <nlohmann/json.hpp>

#include "nanotwin/coupling.hpp"
#include "nanotwin/estimators.hpp"
#include "nanotwin/nanomanip.hpp"
#include "nanotwin/photophysics.hpp"
#include "nanotwin/tuning.hpp"

namespace nanotwin {

nlohmann::json to_json(const NanodiamondPose& pose);
NanodiamondPose pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TunerState& state);
TunerState tuner_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ManipulationStep& step);
ManipulationStep step_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MeasurementRecord& record);
MeasurementRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CouplingReport& report);
nlohmann::json to_json(const CooperativityEstimate& estimate);
nlohmann::json to_json(const ProtocolResult& result);

}  // namespace nanotwin
