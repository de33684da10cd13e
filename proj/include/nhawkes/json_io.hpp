#pragma once

#include "nhawkes/params.hpp"

#include <json.hpp>

namespace nhawkes {

[[nodiscard]] nlohmann::json params_to_json(const NoisyHawkesParams& params);
[[nodiscard]] NoisyHawkesParams params_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
[[nodiscard]] Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

} // namespace nhawkes
