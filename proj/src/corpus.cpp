#include "evex/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "evex/features.hpp"
#include "evex/util.hpp"

using nlohmann::json;

namespace evex {

bool is_reference_slot(const std::string& name) {
  return std::find(kReferenceSlots.begin(), kReferenceSlots.end(), name) != kReferenceSlots.end();
}

const NewsReport* NewsCluster::find_report(const std::string& report_id) const {
  for (const auto& r : reports)
    if (r.report_id == report_id) return &r;
  return nullptr;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& field, const std::string& msg) {
  throw ValidationError(where + ": field '" + field + "': " + msg);
}

const json& require(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) fail(where, field, "missing");
  return *it;
}

std::string get_string(const json& j, const char* field, const std::string& where) {
  const json& v = require(j, field, where);
  if (!v.is_string()) fail(where, field, "expected string");
  return v.get<std::string>();
}

int get_int(const json& j, const char* field, const std::string& where) {
  const json& v = require(j, field, where);
  if (!v.is_number_integer()) fail(where, field, "expected integer");
  return v.get<int>();
}

Token parse_token(const json& j, const std::string& where) {
  Token t;
  t.surface = get_string(j, "surface", where);
  t.lemma = get_string(j, "lemma", where);
  t.pos = get_string(j, "pos", where);
  if (j.contains("governor_index") && !j["governor_index"].is_null()) {
    t.governor_index = get_int(j, "governor_index", where);
    t.governor_pos = get_string(j, "governor_pos", where);
    t.governor_lemma = get_string(j, "governor_lemma", where);
  }
  return t;
}

NewsReport parse_report(const json& j, const std::string& where) {
  NewsReport r;
  r.report_id = get_string(j, "report_id", where);
  r.title = get_string(j, "title", where);
  r.body = get_string(j, "body", where);
  r.publish_ts = get_string(j, "publish_ts", where);
  r.source_url = get_string(j, "source_url", where);
  const json& sents = require(j, "sentences", where);
  if (!sents.is_array()) fail(where, "sentences", "expected array");
  for (const auto& s : sents) {
    if (!s.is_array() || s.size() != 2) fail(where, "sentences", "expected [start, end) pairs");
    r.sentences.push_back({s[0].get<int>(), s[1].get<int>()});
  }
  const json& toks = require(j, "tokens", where);
  if (!toks.is_array()) fail(where, "tokens", "expected array");
  for (const auto& t : toks) r.tokens.push_back(parse_token(t, where));
  return r;
}

Entity parse_entity(const json& j, const std::string& where) {
  Entity e;
  e.entity_id = get_string(j, "entity_id", where);
  const json& ms = require(j, "mentions", where);
  if (!ms.is_array() || ms.empty()) fail(where, "mentions", "expected non-empty array");
  for (const auto& m : ms) {
    EntityMention em;
    em.report_id = get_string(m, "report_id", where);
    em.start = get_int(m, "start", where);
    em.end = get_int(m, "end", where);
    em.head_index = get_int(m, "head_index", where);
    e.mentions.push_back(em);
  }
  if (j.contains("gold_slot") && !j["gold_slot"].is_null())
    e.gold_slot = j["gold_slot"].get<std::string>();
  return e;
}

NewsCluster parse_cluster(const json& j, const std::string& where) {
  NewsCluster c;
  c.cluster_id = get_string(j, "cluster_id", where);
  c.batch_id = get_string(j, "batch_id", where);
  const json& reports = require(j, "reports", where);
  if (!reports.is_array()) fail(where, "reports", "expected array");
  for (const auto& r : reports) c.reports.push_back(parse_report(r, where));
  const json& entities = require(j, "entities", where);
  if (!entities.is_array()) fail(where, "entities", "expected array");
  for (const auto& e : entities) c.entities.push_back(parse_entity(e, where));
  return c;
}

json token_to_json(const Token& t) {
  json j;
  j["surface"] = t.surface;
  j["lemma"] = t.lemma;
  j["pos"] = t.pos;
  if (t.has_governor()) {
    j["governor_index"] = t.governor_index;
    j["governor_pos"] = t.governor_pos;
    j["governor_lemma"] = t.governor_lemma;
  } else {
    j["governor_index"] = nullptr;
    j["governor_pos"] = nullptr;
    j["governor_lemma"] = nullptr;
  }
  return j;
}

json cluster_to_json(const NewsCluster& c) {
  json j;
  j["cluster_id"] = c.cluster_id;
  j["batch_id"] = c.batch_id;
  j["reports"] = json::array();
  for (const auto& r : c.reports) {
    json jr;
    jr["report_id"] = r.report_id;
    jr["title"] = r.title;
    jr["body"] = r.body;
    jr["publish_ts"] = r.publish_ts;
    jr["source_url"] = r.source_url;
    jr["sentences"] = json::array();
    for (const auto& s : r.sentences) jr["sentences"].push_back({s.start, s.end});
    jr["tokens"] = json::array();
    for (const auto& t : r.tokens) jr["tokens"].push_back(token_to_json(t));
    j["reports"].push_back(std::move(jr));
  }
  j["entities"] = json::array();
  for (const auto& e : c.entities) {
    json je;
    je["entity_id"] = e.entity_id;
    je["mentions"] = json::array();
    for (const auto& m : e.mentions) {
      json jm;
      jm["report_id"] = m.report_id;
      jm["start"] = m.start;
      jm["end"] = m.end;
      jm["head_index"] = m.head_index;
      je["mentions"].push_back(std::move(jm));
    }
    if (e.has_gold()) je["gold_slot"] = e.gold_slot;
    j["entities"].push_back(std::move(je));
  }
  return j;
}

}  // namespace

void validate_cluster(const NewsCluster& cluster, const std::string& where) {
  if (cluster.cluster_id.empty()) fail(where, "cluster_id", "empty");
  if (cluster.reports.empty()) fail(where, "reports", "cluster must carry at least one report");

  std::unordered_map<std::string, const NewsReport*> by_id;
  for (const auto& r : cluster.reports) {
    if (r.report_id.empty()) fail(where, "report_id", "empty");
    if (!by_id.emplace(r.report_id, &r).second)
      fail(where, "report_id", "duplicate '" + r.report_id + "' within cluster");
    if (!r.body.empty() && r.tokens.empty())
      fail(where, "tokens", "report '" + r.report_id + "' has body but no tokens");
    const int n_tokens = static_cast<int>(r.tokens.size());
    for (int i = 0; i < n_tokens; ++i) {
      const Token& t = r.tokens[i];
      if (t.governor_index == i)
        fail(where, "governor_index", "token " + std::to_string(i) + " of report '" +
                                          r.report_id + "' governs itself");
      if (t.has_governor() && t.governor_index >= n_tokens)
        fail(where, "governor_index", "token " + std::to_string(i) + " of report '" +
                                          r.report_id + "' points past the token list");
      if (t.has_governor() && (t.governor_pos.empty() && t.governor_lemma.empty()))
        fail(where, "governor_pos", "governor fields must be all set or all absent");
    }
    for (const auto& s : r.sentences) {
      if (s.start < 0 || s.end > n_tokens || s.start >= s.end)
        fail(where, "sentences", "bad range in report '" + r.report_id + "'");
    }
  }

  std::unordered_set<std::string> entity_ids;
  for (const auto& e : cluster.entities) {
    if (e.entity_id.empty()) fail(where, "entity_id", "empty");
    if (!entity_ids.insert(e.entity_id).second)
      fail(where, "entity_id", "duplicate '" + e.entity_id + "'");
    if (e.mentions.empty()) fail(where, "mentions", "entity '" + e.entity_id + "' has none");
    for (const auto& m : e.mentions) {
      auto it = by_id.find(m.report_id);
      if (it == by_id.end())
        fail(where, "mentions",
             "entity '" + e.entity_id + "' references unknown report '" + m.report_id + "'");
      const int n_tokens = static_cast<int>(it->second->tokens.size());
      if (m.start < 0 || m.end > n_tokens || m.start >= m.end)
        fail(where, "mentions", "entity '" + e.entity_id + "' span out of range");
      if (m.head_index < m.start || m.head_index >= m.end)
        fail(where, "mentions",
             "entity '" + e.entity_id + "' head_index outside its span");
    }
    if (e.has_gold() && !is_reference_slot(e.gold_slot))
      fail(where, "gold_slot", "unknown slot '" + e.gold_slot + "'");
  }
}

CorpusSplit load_corpus(const std::string& path, bool schema_check,
                        const std::string& annotations_path, const std::string& split_name) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open corpus file: " + path);

  CorpusSplit split;
  split.name = split_name;
  std::string line;
  int line_no = 0;
  std::unordered_set<std::string> cluster_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": malformed record: " + e.what());
    }
    NewsCluster cluster = parse_cluster(j, where);
    if (schema_check) validate_cluster(cluster, where);
    if (!cluster_ids.insert(cluster.cluster_id).second)
      fail(where, "cluster_id", "duplicate '" + cluster.cluster_id + "' within split");
    for (auto& e : cluster.entities) e.head_word = canonical_head_word(e, cluster);
    split.clusters.push_back(std::move(cluster));
  }

  if (!annotations_path.empty()) {
    std::unordered_map<std::string, NewsCluster*> by_cluster;
    for (auto& c : split.clusters) by_cluster[c.cluster_id] = &c;
    for (const auto& a : load_annotations(annotations_path)) {
      auto it = by_cluster.find(a.cluster_id);
      if (it == by_cluster.end())
        throw ValidationError(annotations_path + ": annotation references unknown cluster '" +
                              a.cluster_id + "'");
      Entity* target = nullptr;
      for (auto& e : it->second->entities)
        if (e.entity_id == a.entity_id) target = &e;
      if (!target)
        throw ValidationError(annotations_path + ": annotation references unknown entity '" +
                              a.entity_id + "' in cluster '" + a.cluster_id + "'");
      if (!is_reference_slot(a.slot))
        throw ValidationError(annotations_path + ": unknown slot '" + a.slot + "'");
      if (target->has_gold() && target->gold_slot != a.slot)
        throw ValidationError(annotations_path + ": conflicting gold slot for entity '" +
                              a.entity_id + "' in cluster '" + a.cluster_id + "' (inline '" +
                              target->gold_slot + "' vs sidecar '" + a.slot + "')");
      target->gold_slot = a.slot;
    }
  }
  return split;
}

std::string cluster_to_json_line(const NewsCluster& cluster) {
  return cluster_to_json(cluster).dump();
}

void write_corpus(const CorpusSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write corpus file: " + path);
  for (const auto& c : split.clusters) out << cluster_to_json_line(c) << "\n";
}

std::vector<SlotAnnotation> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open annotations file: " + path);
  std::vector<SlotAnnotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": malformed record: " + e.what());
    }
    out.push_back({get_string(j, "cluster_id", where), get_string(j, "entity_id", where),
                   get_string(j, "slot", where)});
  }
  return out;
}

void write_annotations(const std::vector<SlotAnnotation>& annotations, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write annotations file: " + path);
  for (const auto& a : annotations) {
    json j;
    j["cluster_id"] = a.cluster_id;
    j["entity_id"] = a.entity_id;
    j["slot"] = a.slot;
    out << j.dump() << "\n";
  }
}

StatsTable corpus_stats(const CorpusSplit& split) {
  StatsTable t;
  t.clusters = static_cast<int64_t>(split.clusters.size());
  for (const auto& c : split.clusters) {
    t.reports += static_cast<int64_t>(c.reports.size());
    for (const auto& r : c.reports) {
      t.sentences += static_cast<int64_t>(r.sentences.size());
      t.words += static_cast<int64_t>(r.tokens.size());
    }
  }
  return t;
}

}  // namespace evex
