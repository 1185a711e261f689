#include "ssmlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace ssmlab {
namespace {

Vector random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& x : v) x = normal(rng);
    norm = std::sqrt(squared_norm(v));
  }
  for (double& x : v) x /= norm;
  return v;
}

// Noise stream for one split; the shared direction comes from the plain seed.
std::mt19937_64 split_stream(std::uint64_t seed, Split split) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    split == Split::train ? 1u : 2u};
  return std::mt19937_64(seq);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string record_line(const DumpRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["split"] = r.split;
  if (r.label) j["label"] = *r.label;
  if (r.gold_score) j["gold_score"] = *r.gold_score;
  j["strategy"] = r.strategy;
  std::string line = j.dump();
  line.pop_back();  // reopen the object to append the vector verbatim
  line += ",\"vector\":[";
  for (std::size_t i = 0; i < r.vector.size(); ++i) {
    if (i != 0) line += ',';
    line += format_g17(r.vector[i]);
  }
  line += "]}";
  return line;
}

std::string at_line(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no) + ": ";
}

DumpRecord parse_record(const nlohmann::json& j, const std::string& where) {
  auto require_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw InputError(where + "missing or non-string field '" + key + "'");
    }
    return j[key].get<std::string>();
  };
  DumpRecord r;
  r.id = require_string("id");
  r.split = require_string("split");
  r.strategy = require_string("strategy");
  if (!parse_strategy(r.strategy)) {
    throw InputError(where + "unknown strategy '" + r.strategy + "' (expected one of " +
                     std::string(kStrategyNames) + ")");
  }
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_number_integer()) throw InputError(where + "label must be an integer");
    r.label = j["label"].get<int>();
  }
  if (j.contains("gold_score") && !j["gold_score"].is_null()) {
    if (!j["gold_score"].is_number()) throw InputError(where + "gold_score must be a number");
    r.gold_score = j["gold_score"].get<double>();
  }
  if (!j.contains("vector") || !j["vector"].is_array()) {
    throw InputError(where + "missing required field 'vector'");
  }
  const auto& vec = j["vector"];
  if (vec.empty()) throw InputError(where + "empty vector");
  r.vector.reserve(vec.size());
  for (const auto& v : vec) {
    if (!v.is_number()) throw InputError(where + "vector entries must be numbers");
    r.vector.push_back(v.get<double>());
  }
  if (!all_finite(r.vector)) throw InputError(where + "vector contains non-finite values");
  return r;
}

}  // namespace

LabeledVectorSet gen_collapse_set(std::size_t dim, std::size_t n_class0, std::size_t n_class1,
                                  double noise, std::uint64_t seed, Split split) {
  if (dim == 0) throw ConfigError("gen_collapse_set: dim must be >= 1");
  if (noise < 0.0) throw ConfigError("gen_collapse_set: noise must be >= 0");
  std::mt19937_64 direction_rng(seed);
  const Vector direction = random_unit(dim, direction_rng);
  std::mt19937_64 rng = split_stream(seed, split);
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledVectorSet set;
  set.split = split;
  set.source = Source::synthetic;
  const std::size_t n = n_class0 + n_class1;
  set.vectors.reserve(n);
  set.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = direction;
    if (noise > 0.0)
      for (double& x : v) x += noise * normal(rng);
    set.vectors.push_back(std::move(v));
    set.labels.push_back(i < n_class0 ? 0 : 1);
  }
  return set;
}

Vector separable_direction(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_unit(dim, rng);
}

LabeledVectorSet gen_separable_set(std::size_t dim, std::size_t n_per_class, double margin,
                                   std::uint64_t seed, double noise, Split split) {
  if (dim == 0) throw ConfigError("gen_separable_set: dim must be >= 1");
  if (!(margin > 0.0)) throw ConfigError("gen_separable_set: margin must be positive");
  if (noise < 0.0) throw ConfigError("gen_separable_set: noise must be >= 0");
  const Vector direction = separable_direction(dim, seed);
  std::mt19937_64 rng = split_stream(seed, split);
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledVectorSet set;
  set.split = split;
  set.source = Source::synthetic;
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    const double offset = (label == 1 ? 0.5 : -0.5) * margin;
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = offset * direction[k] + noise * normal(rng);
    set.vectors.push_back(std::move(v));
    set.labels.push_back(label);
  }
  return set;
}

SimilarityPairs gen_sts_pairs(std::size_t n_pairs, std::size_t dim, std::uint64_t seed) {
  if (n_pairs < 2) throw ConfigError("gen_sts_pairs: need at least two pairs");
  if (dim < 2) throw ConfigError("gen_sts_pairs: dim must be >= 2");
  std::mt19937_64 rng(seed);

  std::vector<double> gold(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i)
    gold[i] = static_cast<double>(i) / static_cast<double>(n_pairs - 1);
  std::shuffle(gold.begin(), gold.end(), rng);

  SimilarityPairs out;
  out.gold = gold;
  out.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vector a = random_unit(dim, rng);
    Vector b = random_unit(dim, rng);
    const double along = dot(a, b);
    for (std::size_t k = 0; k < dim; ++k) b[k] -= along * a[k];
    const double nb = std::sqrt(squared_norm(b));
    for (double& x : b) x /= nb;

    const double theta = (1.0 - gold[i]) * std::numbers::pi / 2.0;
    Vector mixed(dim);
    for (std::size_t k = 0; k < dim; ++k) mixed[k] = std::cos(theta) * a[k] + std::sin(theta) * b[k];
    out.pairs.emplace_back(a, std::move(mixed));
  }
  return out;
}

MaskedSequence embed_tokens(const Matrix& embedding, const std::vector<int>& ids,
                            std::size_t padded_len) {
  if (padded_len < ids.size()) throw ConfigError("embed_tokens: padded_len shorter than sequence");
  MaskedSequence seq;
  seq.embeddings.reserve(padded_len);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= embedding.rows()) {
      throw InputError("token id " + std::to_string(id) + " outside vocabulary");
    }
    const auto row = embedding.row(static_cast<std::size_t>(id));
    seq.embeddings.emplace_back(row.begin(), row.end());
    seq.mask.push_back(1);
  }
  while (seq.embeddings.size() < padded_len) {
    seq.embeddings.emplace_back(embedding.cols(), 0.0);
    seq.mask.push_back(0);
  }
  return seq;
}

namespace {

Matrix embedding_table(std::size_t vocab_size, std::size_t d_model, std::mt19937_64& rng) {
  Matrix table(vocab_size, d_model);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : table.data()) v = normal(rng);
  return table;
}

}  // namespace

TokenBatch gen_token_sequences(std::size_t vocab_size, std::size_t n_seqs,
                               std::pair<std::size_t, std::size_t> len_range,
                               std::size_t d_model, std::uint64_t seed) {
  if (vocab_size < 2) throw ConfigError("gen_token_sequences: vocab_size must be >= 2");
  if (len_range.first < 1 || len_range.first > len_range.second) {
    throw ConfigError("gen_token_sequences: invalid length range");
  }
  if (d_model == 0) throw ConfigError("gen_token_sequences: d_model must be >= 1");
  std::mt19937_64 rng(seed);
  TokenBatch batch;
  batch.embedding = embedding_table(vocab_size, d_model, rng);

  std::uniform_int_distribution<std::size_t> length(len_range.first, len_range.second);
  std::uniform_int_distribution<int> token(0, static_cast<int>(vocab_size) - 1);
  std::size_t longest = 0;
  for (std::size_t s = 0; s < n_seqs; ++s) {
    std::vector<int> ids(length(rng));
    for (int& id : ids) id = token(rng);
    longest = std::max(longest, ids.size());
    batch.token_ids.push_back(std::move(ids));
  }
  for (const auto& ids : batch.token_ids)
    batch.sequences.push_back(embed_tokens(batch.embedding, ids, longest));
  return batch;
}

TokenPairs gen_token_pairs(std::size_t vocab_size, std::size_t n_pairs, std::size_t seq_len,
                           std::size_t d_model, std::uint64_t seed) {
  if (vocab_size < 2) throw ConfigError("gen_token_pairs: vocab_size must be >= 2");
  if (n_pairs < 2 || seq_len < 1) throw ConfigError("gen_token_pairs: need >= 2 pairs of length >= 1");
  std::mt19937_64 rng(seed);
  TokenPairs out;
  out.embedding = embedding_table(vocab_size, d_model, rng);
  std::uniform_int_distribution<int> token(0, static_cast<int>(vocab_size) - 1);
  std::uniform_int_distribution<std::size_t> replaced(0, seq_len);

  for (std::size_t p = 0; p < n_pairs; ++p) {
    std::vector<int> first(seq_len);
    for (int& id : first) id = token(rng);
    std::vector<int> second = first;
    std::vector<std::size_t> positions(seq_len);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::shuffle(positions.begin(), positions.end(), rng);
    const std::size_t k = replaced(rng);
    for (std::size_t i = 0; i < k; ++i) {
      int fresh = token(rng);
      while (fresh == first[positions[i]]) fresh = token(rng);
      second[positions[i]] = fresh;
    }
    out.gold.push_back(1.0 - static_cast<double>(k) / static_cast<double>(seq_len));
    out.pairs.emplace_back(embed_tokens(out.embedding, first, seq_len),
                           embed_tokens(out.embedding, second, seq_len));
  }
  return out;
}

LabeledVectorSet Dump::labeled(const std::string& strategy, const std::string& split) const {
  LabeledVectorSet set;
  set.source = Source::ingested;
  set.split = split == "train" ? Split::train : Split::validation;
  for (const auto& r : records) {
    if (r.strategy != strategy || r.split != split) continue;
    if (!r.label) throw InputError("record '" + r.id + "' has no label");
    set.vectors.push_back(r.vector);
    set.labels.push_back(*r.label);
  }
  return set;
}

std::vector<Vector> Dump::vectors(const std::string& strategy) const {
  std::vector<Vector> out;
  for (const auto& r : records)
    if (r.strategy == strategy) out.push_back(r.vector);
  return out;
}

std::vector<std::string> Dump::ids(const std::string& strategy) const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (r.strategy == strategy) out.push_back(r.id);
  return out;
}

SimilarityPairs Dump::similarity_pairs(const std::string& strategy) const {
  std::map<std::string, const DumpRecord*> second;
  std::vector<const DumpRecord*> first;
  for (const auto& r : records) {
    if (r.strategy != strategy || r.id.size() < 2) continue;
    const std::string suffix = r.id.substr(r.id.size() - 2);
    if (suffix == "/a") first.push_back(&r);
    if (suffix == "/b") second[r.id.substr(0, r.id.size() - 2)] = &r;
  }
  SimilarityPairs out;
  for (const DumpRecord* a : first) {
    const std::string key = a->id.substr(0, a->id.size() - 2);
    const auto it = second.find(key);
    if (it == second.end()) throw InputError("pair '" + key + "' has no '/b' record");
    if (!a->gold_score) throw InputError("pair '" + key + "' has no gold_score");
    if (it->second->gold_score && *it->second->gold_score != *a->gold_score) {
      throw InputError("pair '" + key + "' has conflicting gold scores");
    }
    out.pairs.emplace_back(a->vector, it->second->vector);
    out.gold.push_back(*a->gold_score);
  }
  return out;
}

void write_dump(const std::vector<DumpRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "{\"format\":\"" << kDumpFormat << "\",\"version\":" << kDumpVersion << "}\n";
  for (const auto& r : records) {
    if (r.vector.empty() || !all_finite(r.vector)) {
      throw InputError("record '" + r.id + "' has an empty or non-finite vector");
    }
    out << record_line(r) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Dump parse_dump(std::istream& in, const std::string& source) {
  Dump dump;
  std::map<std::string, std::pair<std::size_t, std::size_t>> dims;  // strategy -> (dim, line)
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = at_line(source, line_no);

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw InputError(where + "expected a JSON object");

    if (!header_seen) {
      if (j.value("format", std::string{}) != kDumpFormat || !j.contains("version")) {
        throw InputError(where + "first line must be the header {\"format\":\"ssm-dump\",\"version\":1}");
      }
      if (j["version"] != kDumpVersion) {
        throw InputError(where + "unsupported dump version " + j["version"].dump());
      }
      header_seen = true;
      continue;
    }
    if (j.contains("footer")) {
      if (j.contains("truncated") && j["truncated"].is_number_unsigned()) {
        dump.truncated = j["truncated"].get<std::uint64_t>();
      }
      continue;
    }

    DumpRecord r = parse_record(j, where);
    const auto [it, inserted] = dims.try_emplace(r.strategy, r.vector.size(), line_no);
    if (!inserted && it->second.first != r.vector.size()) {
      throw InputError(where + "vector dimension " + std::to_string(r.vector.size()) +
                       " differs from dimension " + std::to_string(it->second.first) +
                       " of strategy '" + r.strategy + "' at line " +
                       std::to_string(it->second.second));
    }
    dump.records.push_back(std::move(r));
  }
  if (!header_seen) throw InputError(source + ": empty dump");
  if (dump.records.empty()) throw InputError(source + ": dump contains no records");
  return dump;
}

Dump load_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dump " + path.string());
  return parse_dump(in, path.string());
}

}  // namespace ssmlab
