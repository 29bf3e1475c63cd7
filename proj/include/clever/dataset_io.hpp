#pragma once

#include <filesystem>

#include "clever/fixtures.hpp"

namespace clever {

// CSV layout: d feature columns followed by one integer label column,
// no header row.
Dataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace clever
