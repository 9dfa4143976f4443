#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evex/features.hpp"
#include "evex/model.hpp"
#include "evex/nets.hpp"
#include "evex/trainer.hpp"

namespace evex {

// ---- feature table (binary): header {n, count}, records
// {report_id, token_index, float32[n]}; layout in docs/formats.md ----

struct FeatureRecord {
  std::string report_id;
  int token_index = 0;
  std::vector<float> values;
};

void write_feature_table(const std::string& path, int n,
                         const std::vector<FeatureRecord>& records);

class FileFeatureProvider : public FeatureProvider {
 public:
  explicit FileFeatureProvider(const std::string& path, int expected_n = 0);
  int dim() const override { return n_; }
  bool lookup(const std::string& report_id, int token_index,
              Eigen::VectorXd& out) const override;
  size_t count() const { return offsets_.size(); }

 private:
  int n_ = 0;
  std::vector<float> values_;
  std::unordered_map<std::string, size_t> offsets_;
};

// ---- featurized observations (binary) ----

void write_observations(const std::string& path, const std::vector<ClusterObservation>& obs,
                        uint64_t vocab_hash);
std::vector<ClusterObservation> load_observations(const std::string& path, bool with_r,
                                                  uint64_t* vocab_hash_out = nullptr);

// ---- checkpoints: binary tensor blob + JSON manifest ----

struct CheckpointInfo {
  Variant variant = Variant::FER;
  int S = 0, V = 0, n = 0, n_t = 0, hidden = 0;
  uint64_t seed = 0;
  int64_t optimizer_step = 0;
  std::string config_hash;
  bool has_net = false;
  bool use_batch_norm = true;
  bool learnable_alpha = false;
};

void save_checkpoint(const std::string& stem, ModelParams& params, InferenceNet* net,
                     int64_t optimizer_step, const std::string& config_hash);

struct Checkpoint {
  CheckpointInfo info;
  ModelParams params;
  InferenceNet net;  // empty when the variant has none

  InferenceNet* net_ptr() { return info.has_net ? &net : nullptr; }
};

Checkpoint load_checkpoint(const std::string& stem);

// ---- posterior state (JSONL, one cluster per line) ----

void save_posterior_state(const PosteriorState& state, const std::string& path);
PosteriorState load_posterior_state(const std::string& path);

// ---- training log ----

void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path);

// ---- run manifest ----

struct RunManifest {
  std::string subcommand;
  std::string config_json;  // resolved config snapshot (JSON text)
  std::map<std::string, std::string> input_hashes;
  uint64_t seed = 0;
  double wall_seconds = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace evex
