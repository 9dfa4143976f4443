#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evex {

// The eight reference slot names annotations may carry.
inline const std::array<std::string, 8> kReferenceSlots = {
    "Agent", "Patient", "Time", "Place", "Aim", "OldValue", "NewValue", "Variation"};

bool is_reference_slot(const std::string& name);

struct Token {
  std::string surface;
  std::string lemma;
  std::string pos;
  int governor_index = -1;  // -1 = none
  std::string governor_pos;
  std::string governor_lemma;

  bool has_governor() const { return governor_index >= 0; }
};

// [start, end) token-index range of one sentence
struct SentenceRange {
  int start = 0;
  int end = 0;
};

struct NewsReport {
  std::string report_id;
  std::string title;
  std::string body;  // title + first paragraph
  std::string publish_ts;  // ISO-8601
  std::string source_url;
  std::vector<SentenceRange> sentences;
  std::vector<Token> tokens;
};

struct EntityMention {
  std::string report_id;
  int start = 0;       // token span [start, end)
  int end = 0;
  int head_index = 0;  // absolute token index, start <= head_index < end
};

struct Entity {
  std::string entity_id;
  std::vector<EntityMention> mentions;  // one coreference chain
  std::string head_word;                // canonical surface head, filled at load
  std::string gold_slot;                // empty = unlabeled

  bool has_gold() const { return !gold_slot.empty(); }
};

struct NewsCluster {
  std::string cluster_id;
  std::string batch_id;
  std::vector<NewsReport> reports;
  std::vector<Entity> entities;

  const NewsReport* find_report(const std::string& report_id) const;
};

struct CorpusSplit {
  std::string name = "all";  // train|unlabeled|dev|test|all
  std::vector<NewsCluster> clusters;
};

struct StatsTable {
  int64_t clusters = 0;
  int64_t reports = 0;
  int64_t sentences = 0;
  int64_t words = 0;

  bool operator==(const StatsTable&) const = default;
};

struct SlotAnnotation {
  std::string cluster_id;
  std::string entity_id;
  std::string slot;
};

// One cluster per line, JSON records. Throws ValidationError naming the line
// and field on malformed input; enforces all structural invariants when
// schema_check is set.
CorpusSplit load_corpus(const std::string& path, bool schema_check = true,
                        const std::string& annotations_path = "",
                        const std::string& split_name = "all");

// Canonical serialization: sorted keys, one cluster per line.
void write_corpus(const CorpusSplit& split, const std::string& path);
std::string cluster_to_json_line(const NewsCluster& cluster);

std::vector<SlotAnnotation> load_annotations(const std::string& path);
void write_annotations(const std::vector<SlotAnnotation>& annotations, const std::string& path);

// Validates one cluster; `where` prefixes error messages (e.g. "line 12").
void validate_cluster(const NewsCluster& cluster, const std::string& where);

StatsTable corpus_stats(const CorpusSplit& split);

}  // namespace evex
