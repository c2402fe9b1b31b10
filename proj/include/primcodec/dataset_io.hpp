#ifndef PRIMCODEC_DATASET_IO_HPP_
#define PRIMCODEC_DATASET_IO_HPP_

#include <string>

#include "primcodec/trajectory.hpp"

namespace primcodec
{

/// Writes dir/dataset.json plus dir/sensory.bin (f32 little-endian,
/// sample-major, frame-major, row-major).
void save_dataset(const MotionDataset& dataset, const std::string& dir);

MotionDataset load_dataset(const std::string& dir);

}  // namespace primcodec

#endif  // PRIMCODEC_DATASET_IO_HPP_
