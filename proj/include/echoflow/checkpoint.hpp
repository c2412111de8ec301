#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "echoflow/model.hpp"
#include "echoflow/train.hpp"

namespace echoflow {

inline constexpr int kCheckpointVersion = 1;

// Seed-determined fields only; wall-clock lives elsewhere so the bytes are
// reproducible run to run.
nlohmann::json report_to_json(const TrainReport& report);

// Versioned JSON container: config, normalization statistics, every trainable
// tensor, and the frozen reservoir block (weights stored, not seeds, so
// checkpoints are portable across RNG implementations).
nlohmann::json model_to_json(ForecastModel& model,
                             const std::vector<std::string>& channel_names);
ForecastModel model_from_json(const nlohmann::json& j,
                              std::vector<std::string>* channel_names = nullptr);

void save_checkpoint(ForecastModel& model,
                     const std::vector<std::string>& channel_names,
                     const std::string& path);
ForecastModel load_checkpoint(const std::string& path,
                              std::vector<std::string>* channel_names = nullptr);

}  // namespace echoflow
