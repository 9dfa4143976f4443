#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evex/corpus.hpp"

namespace evex {

// Head-word vocabulary over lowercased lemmas. Index 0 is reserved for UNK.
struct Vocabulary {
  std::vector<std::string> words;  // words[0] == "<unk>"
  std::unordered_map<std::string, int> index;
  int min_count = 2;

  int V() const { return static_cast<int>(words.size()); }
  static constexpr int kUnk = 0;

  int index_of(const std::string& lowercased_lemma) const {
    auto it = index.find(lowercased_lemma);
    return it == index.end() ? kUnk : it->second;
  }
  bool contains(const std::string& lowercased_lemma) const {
    return index.find(lowercased_lemma) != index.end();
  }
};

// The observed tuple for one entity: head-word index h, pooled context
// vector f (dimension n), redundancy ratio r, and the merged vector
// f_prime = [f; r] (or f alone when the model variant ignores r).
struct EntityObservation {
  std::string entity_id;
  int h = 0;
  double r = 1.0;
  Eigen::VectorXd f_prime;

  Eigen::VectorXd f(int n) const { return f_prime.head(n); }
};

struct ClusterObservation {
  std::string cluster_id;
  std::vector<EntityObservation> observations;
  int V = 0;
  int n = 0;           // dimension of f
  bool with_r = false; // f_prime has n+1 entries when set

  int m() const { return with_r ? n + 1 : n; }
  int num_entities() const { return static_cast<int>(observations.size()); }

  // sparse head-word histogram: sorted (vocab index, count) pairs
  std::vector<std::pair<int, int>> histogram() const;
  Eigen::VectorXi dense_histogram() const;
  // L1-normalized histogram + mean-pooled f_prime, the encoder input
  Eigen::VectorXd pooled_features() const;
};

// Deterministic per-token context vectors, keyed by (report_id, token index).
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual int dim() const = 0;
  virtual bool lookup(const std::string& report_id, int token_index,
                      Eigen::VectorXd& out) const = 0;
};

class MapFeatureProvider : public FeatureProvider {
 public:
  explicit MapFeatureProvider(int n) : n_(n) {}
  void put(const std::string& report_id, int token_index, const Eigen::VectorXd& v);
  int dim() const override { return n_; }
  bool lookup(const std::string& report_id, int token_index,
              Eigen::VectorXd& out) const override;

 private:
  int n_;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

// Per-mention head selection: the right-most word of the phrase, or the
// right-most word before the first of/that/which/by inside the phrase.
// Canonical value is the most frequent per-mention result across the chain
// (ties -> earliest mention).
std::string canonical_head_word(const Entity& entity, const NewsCluster& cluster);
std::string canonical_head_lemma(const Entity& entity, const NewsCluster& cluster);

// r = |mentions(entity)| / max over cluster entities of |mentions|
double redundancy_ratio(const Entity& entity, const NewsCluster& cluster);

Vocabulary build_vocabulary(const CorpusSplit& split, int min_count = 2);

void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);
uint64_t vocabulary_hash(const Vocabulary& vocab);

ClusterObservation featurize_cluster(const NewsCluster& cluster, const Vocabulary& vocab,
                                     const FeatureProvider& provider, bool with_r);

}  // namespace evex
