#include "evex/features.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "evex/util.hpp"

using nlohmann::json;

namespace evex {

namespace {

bool is_cut_word(const std::string& lowered) {
  return lowered == "of" || lowered == "that" || lowered == "which" || lowered == "by";
}

// index of the head token of one mention phrase under the right-most-word rule
int head_token_index(const EntityMention& m, const NewsReport& report) {
  for (int i = m.start; i < m.end; ++i) {
    if (is_cut_word(lowercase(report.tokens[i].surface)) && i > m.start) return i - 1;
  }
  return m.end - 1;
}

// majority vote across the chain over a lowercased key; ties resolved by the
// earliest mention; returns the winning mention's value via `extract`
template <typename Extract>
std::string canonical_over_chain(const Entity& entity, const NewsCluster& cluster,
                                 Extract extract) {
  if (entity.mentions.empty()) throw ValidationError("entity '" + entity.entity_id + "' has no mentions");
  std::vector<std::string> values;
  values.reserve(entity.mentions.size());
  std::map<std::string, int> counts;
  for (const auto& m : entity.mentions) {
    const NewsReport* report = cluster.find_report(m.report_id);
    if (!report)
      throw ValidationError("entity '" + entity.entity_id + "' references unknown report '" +
                            m.report_id + "'");
    if (m.start >= m.end || m.end > static_cast<int>(report->tokens.size()))
      throw ValidationError("entity '" + entity.entity_id + "' has an empty or out-of-range phrase");
    const int idx = head_token_index(m, *report);
    values.push_back(extract(report->tokens[idx]));
    counts[lowercase(values.back())]++;
  }
  int best = 0;
  std::string best_key;
  for (const auto& [key, cnt] : counts) {
    if (cnt > best) { best = cnt; best_key = key; }
  }
  for (const auto& v : values)
    if (lowercase(v) == best_key) return v;
  return values.front();  // unreachable
}

}  // namespace

std::string canonical_head_word(const Entity& entity, const NewsCluster& cluster) {
  return canonical_over_chain(entity, cluster, [](const Token& t) { return t.surface; });
}

std::string canonical_head_lemma(const Entity& entity, const NewsCluster& cluster) {
  return canonical_over_chain(entity, cluster,
                              [](const Token& t) { return lowercase(t.lemma); });
}

double redundancy_ratio(const Entity& entity, const NewsCluster& cluster) {
  if (cluster.entities.empty())
    throw ValidationError("cluster '" + cluster.cluster_id + "' has no entities");
  size_t max_mentions = 0;
  for (const auto& e : cluster.entities) max_mentions = std::max(max_mentions, e.mentions.size());
  return static_cast<double>(entity.mentions.size()) / static_cast<double>(max_mentions);
}

Vocabulary build_vocabulary(const CorpusSplit& split, int min_count) {
  std::map<std::string, int> counts;  // ordered: deterministic tie-breaks
  for (const auto& c : split.clusters)
    for (const auto& e : c.entities) counts[canonical_head_lemma(e, c)]++;

  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [word, cnt] : counts)
    if (cnt >= min_count) kept.emplace_back(word, cnt);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_count = min_count;
  vocab.words.push_back("<unk>");
  for (const auto& [word, cnt] : kept) vocab.words.push_back(word);
  for (int i = 0; i < vocab.V(); ++i) vocab.index[vocab.words[i]] = i;
  return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  json j;
  j["min_count"] = vocab.min_count;
  j["words"] = vocab.words;
  write_file(path, j.dump(2) + "\n");
}

Vocabulary load_vocabulary(const std::string& path) {
  json j = json::parse(read_file(path));
  Vocabulary vocab;
  vocab.min_count = j.at("min_count").get<int>();
  vocab.words = j.at("words").get<std::vector<std::string>>();
  if (vocab.words.empty() || vocab.words[0] != "<unk>")
    throw ValidationError(path + ": vocabulary must reserve index 0 for <unk>");
  for (int i = 0; i < vocab.V(); ++i) vocab.index[vocab.words[i]] = i;
  return vocab;
}

uint64_t vocabulary_hash(const Vocabulary& vocab) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : vocab.words) {
    h = fnv1a64(w.data(), w.size(), h);
    h = fnv1a64("\x1f", 1, h);
  }
  return h;
}

void MapFeatureProvider::put(const std::string& report_id, int token_index,
                             const Eigen::VectorXd& v) {
  table_[report_id + "\x1f" + std::to_string(token_index)] = v;
}

bool MapFeatureProvider::lookup(const std::string& report_id, int token_index,
                                Eigen::VectorXd& out) const {
  auto it = table_.find(report_id + "\x1f" + std::to_string(token_index));
  if (it == table_.end()) return false;
  out = it->second;
  return true;
}

std::vector<std::pair<int, int>> ClusterObservation::histogram() const {
  std::map<int, int> counts;
  for (const auto& o : observations) counts[o.h]++;
  return {counts.begin(), counts.end()};
}

Eigen::VectorXi ClusterObservation::dense_histogram() const {
  Eigen::VectorXi h = Eigen::VectorXi::Zero(V);
  for (const auto& o : observations) h[o.h]++;
  return h;
}

Eigen::VectorXd ClusterObservation::pooled_features() const {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(m());
  for (const auto& o : observations) pooled += o.f_prime;
  if (!observations.empty()) pooled /= static_cast<double>(observations.size());
  return pooled;
}

ClusterObservation featurize_cluster(const NewsCluster& cluster, const Vocabulary& vocab,
                                     const FeatureProvider& provider, bool with_r) {
  ClusterObservation out;
  out.cluster_id = cluster.cluster_id;
  out.V = vocab.V();
  out.n = provider.dim();
  out.with_r = with_r;

  Eigen::VectorXd vec(provider.dim());
  for (const auto& entity : cluster.entities) {
    EntityObservation obs;
    obs.entity_id = entity.entity_id;
    obs.h = vocab.index_of(canonical_head_lemma(entity, cluster));
    obs.r = redundancy_ratio(entity, cluster);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(provider.dim());
    for (const auto& m : entity.mentions) {
      if (!provider.lookup(m.report_id, m.head_index, vec))
        throw ValidationError("feature provider has no vector for (report '" + m.report_id +
                              "', token " + std::to_string(m.head_index) + ")");
      f += vec;
    }
    f /= static_cast<double>(entity.mentions.size());

    if (with_r) {
      obs.f_prime.resize(provider.dim() + 1);
      obs.f_prime << f, obs.r;
    } else {
      obs.f_prime = f;
    }
    out.observations.push_back(std::move(obs));
  }
  return out;
}

}  // namespace evex
