#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "trackpose/lstm.hpp"
#include "trackpose/mlp.hpp"
#include "trackpose/schema.hpp"

namespace trackpose::learn {

/// Everything needed to run a trained velocity model on raw episode channels.
struct Checkpoint {
  ModelKind kind = ModelKind::Mlp;
  MlpConfig mlp;
  LstmConfig lstm;
  GroupSet groups = GroupSet::IC_Ve_Bu;
  Standardizer standardizer;
  double val_loss = 0.0;
  int best_epoch = 0;
  std::uint64_t seed = 0;
  std::unique_ptr<VelocityModel> model;

  std::size_t window() const { return model ? model->window() : 1; }
};

enum class CheckpointEncoding { Binary, Json };

/// Binary layout: 8-byte magic "TPCKPT01", uint64 little-endian header length,
/// UTF-8 JSON header, then every tensor as row-major little-endian float64 at the
/// offset listed in the header. The JSON encoding inlines tensor data instead.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path,
                     CheckpointEncoding encoding = CheckpointEncoding::Binary);

/// Reads either encoding.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds an untrained model of the checkpoint's architecture.
std::unique_ptr<VelocityModel> make_model(ModelKind kind, std::size_t input_width, const MlpConfig& mlp,
                                          const LstmConfig& lstm, std::uint64_t seed);

}  // namespace trackpose::learn
