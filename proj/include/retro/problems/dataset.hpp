#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "retro/common.hpp"

namespace retro {

/// Immutable regression/classification dataset: N rows of p features plus a
/// scalar response per row. Shared between oracle instances so replications
/// can keep independent work counters over one copy of the data.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> features;  // row-major, rows x cols
    std::vector<double> responses; // length rows
    std::vector<std::string> feature_names;

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * cols, cols};
    }
};

using DatasetPtr = std::shared_ptr<const Dataset>;

} // namespace retro
