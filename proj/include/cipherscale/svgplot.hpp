#pragma once

#include <string>
#include <vector>

#include "cipherscale/nn/train.hpp"
#include "cipherscale/scaling.hpp"

namespace cipherscale {

// Static SVG figures; identical input bytes in, identical SVG bytes out.

// Test (and train) loss against epoch on linear axes.
std::string loss_curve_svg(const std::vector<nn::TrainRecord>& history,
                           const std::string& config_digest = "");

// Scaling points and the fitted power law on log-log axes; the slope is
// annotated to three decimals.
std::string loglog_svg(const std::vector<ScalingPoint>& points,
                       const PowerLawFit& fit,
                       const std::string& x_label,
                       const std::string& config_digest = "");

void write_text_file(const std::string& path, const std::string& content);

}  // namespace cipherscale
