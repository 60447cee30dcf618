#pragma once

// Binary checkpoint, all fields little-endian:
//
//   char[8]  magic "SBPINNCK"
//   u32      format version (1)
//   i32      hidden_layers
//   i32      width
//   i32      activation (0 = tanh, 1 = identity)
//   f64      x_lo, x_hi, t_final
//   f64[3]   output_scale (psi, rho, pi)
//   u32      rho transform (0 = softplus, 1 = identity, 2 = anchored)
//   f64[4]   initial anchor density (mu, sigma, lo, hi)
//   f64[4]   terminal anchor density (mu, sigma, lo, hi)
//   u64      seed
//   u64      parameter count D
//   f64[D]   parameters
//
// A JSON sidecar (<path>.json) records training metadata.

#include "sbpinn/diffnet.hpp"
#include "sbpinn/residuals.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace sbpinn {

inline constexpr char kCheckpointMagic[8] = {'S', 'B', 'P', 'I', 'N', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
    long epoch = 0;
    LossBreakdown losses;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::string note;
};

std::string encode_checkpoint(const NetworkParams& params);
NetworkParams decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& path);

void save_checkpoint_meta(const std::filesystem::path& path, const CheckpointMeta& meta);
CheckpointMeta load_checkpoint_meta(const std::filesystem::path& path);

}  // namespace sbpinn
