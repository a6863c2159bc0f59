#pragma once

#include <cstdint>
#include <string>

#include "avsl/errors.hpp"

namespace avsl {

struct OptimizerConfig {
    enum class Kind { sgd, adam };

    Kind kind = Kind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int c = 16;
    int hidden = 32;
    int grid_h = 8;
    int grid_w = 8;
    int batch_size = 8;
    int epochs = 60;
    double learning_rate = 1e-2;
    double kappa = 0.07; // contrastive temperature
    double lambda_sn = 1.0;
    double lambda_geo = 1.0;
    double alpha_max = 0.5;
    int alpha_ramp_epochs = 50;
    bool sam_enabled = true;
    bool geo_enabled = true;
    bool mask_enabled = true;
    int mask_time_max = 4; // feature-masking span caps
    int mask_band_max = 2;
    std::uint64_t seed = 1;
    OptimizerConfig optimizer;

    void validate() const {
        if (c < 1 || hidden < 1 || grid_h < 1 || grid_w < 1) {
            raise(ErrorKind::config_error, "TrainConfig: dimensions must be positive");
        }
        if (batch_size < 2) {
            raise(ErrorKind::config_error, "TrainConfig: batch_size must be >= 2 for contrastive pairs");
        }
        if (epochs < 0 || learning_rate <= 0.0 || kappa <= 0.0) {
            raise(ErrorKind::config_error, "TrainConfig: epochs/lr/kappa out of range");
        }
        if (lambda_sn < 0.0 || lambda_geo < 0.0 || alpha_max < 0.0 || alpha_ramp_epochs < 1) {
            raise(ErrorKind::config_error, "TrainConfig: loss weights/schedule out of range");
        }
    }
};

} // namespace avsl
