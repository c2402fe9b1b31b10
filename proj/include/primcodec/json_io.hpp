#ifndef PRIMCODEC_JSON_IO_HPP_
#define PRIMCODEC_JSON_IO_HPP_

#include <json.hpp>

#include "primcodec/clustering.hpp"
#include "primcodec/trajectory.hpp"
#include "primcodec/training.hpp"

namespace primcodec
{

nlohmann::json arm_to_json(const ArmConfig& arm);
ArmConfig arm_from_json(const nlohmann::json& j);

nlohmann::json primitive_to_json(const PrimitiveSpec& spec);
PrimitiveSpec primitive_from_json(const nlohmann::json& j);

/// Fills defaults for absent keys; unknown keys are rejected to catch typos.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& config);

nlohmann::json cluster_report_to_json(const ClusterReport& report);
nlohmann::json experiment_report_to_json(const ExperimentReport& report);

}  // namespace primcodec

#endif  // PRIMCODEC_JSON_IO_HPP_
