#ifndef PRIMCODEC_CHECKPOINT_HPP_
#define PRIMCODEC_CHECKPOINT_HPP_

#include <string>

#include "primcodec/mtrnn.hpp"

namespace primcodec
{

/// Model checkpoint: magic "PCKP", u32 version, u32 header length, header
/// JSON (arch + parameter count), then the flat f64 parameter blob in layout
/// order, little-endian.
void save_checkpoint(const MtrnnModel& model, const std::string& path);
MtrnnModel load_checkpoint(const std::string& path);

/// Latent codes: magic "PCLZ", u32 version, u64 n, u64 q, row-major f64 blob.
void save_latents(const LatentCodes& codes, const std::string& path);
LatentCodes load_latents(const std::string& path);

}  // namespace primcodec

#endif  // PRIMCODEC_CHECKPOINT_HPP_
