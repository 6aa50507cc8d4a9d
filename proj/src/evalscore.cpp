#include "dreamcc/evalscore.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace fs = std::filesystem;

const BaselineRow& ScoreTable::row(const std::string& game) const {
  for (const auto& r : baselines)
    if (r.game == game) return r;
  throw UsageError("game not in baseline table: " + game);
}

Protocol parse_protocol(const std::string& name) {
  if (name == "gamer_median") return Protocol::kGamerMedian;
  if (name == "gamer_mean") return Protocol::kGamerMean;
  if (name == "record_mean") return Protocol::kRecordMean;
  if (name == "clipped_record_mean") return Protocol::kClippedRecordMean;
  throw UsageError("unknown protocol '" + name +
                   "' (gamer_median|gamer_mean|record_mean|clipped_record_mean)");
}

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kGamerMedian: return "gamer_median";
    case Protocol::kGamerMean: return "gamer_mean";
    case Protocol::kRecordMean: return "record_mean";
    case Protocol::kClippedRecordMean: return "clipped_record_mean";
  }
  return "?";
}

double normalize_score(double score, double random, double reference) {
  if (reference == random)
    throw DomainError("degenerate game: reference equals random (" + std::to_string(random) + ")");
  return (score - random) / (reference - random);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double aggregate(const ScoreTable& table, Protocol protocol) {
  if (table.scores.empty()) throw UsageError("aggregate: no seed scores");
  std::set<std::string> games;
  for (const auto& seed : table.scores)
    for (const auto& [game, _] : seed) games.insert(game);
  if (games.empty()) throw UsageError("aggregate: empty score maps");

  const bool gamer = protocol == Protocol::kGamerMedian || protocol == Protocol::kGamerMean;
  const bool clip = protocol == Protocol::kClippedRecordMean;
  std::vector<double> per_seed;
  for (size_t s = 0; s < table.scores.size(); ++s) {
    std::vector<double> normalized;
    for (const auto& game : games) {
      const auto it = table.scores[s].find(game);
      if (it == table.scores[s].end())
        throw UsageError("missing score for game '" + game + "' in seed " + std::to_string(s));
      const BaselineRow& b = table.row(game);
      double n = normalize_score(it->second, b.random, gamer ? b.gamer : b.record);
      if (clip) n = std::min(n, 1.0);
      normalized.push_back(n);
    }
    per_seed.push_back(protocol == Protocol::kGamerMedian ? median(normalized)
                                                          : mean(normalized));
  }
  return mean(per_seed);
}

std::vector<BaselineRow> load_baselines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open baselines file: " + path);
  std::vector<BaselineRow> rows;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  bool header_done = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_done) {
      if (line != "game,random,gamer,record")
        throw ParseError("expected header game,random,gamer,record", lineno);
      header_done = true;
      continue;
    }
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(part);
    if (parts.size() != 4) throw ParseError("expected 4 comma-separated fields", lineno);
    BaselineRow r;
    r.game = parts[0];
    try {
      size_t used = 0;
      r.random = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("");
      r.gamer = std::stod(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("");
      r.record = std::stod(parts[3], &used);
      if (used != parts[3].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("bad numeric field in '" + line + "'", lineno);
    }
    if (r.game.empty()) throw ParseError("empty game name", lineno);
    if (!seen.insert(r.game).second) throw ParseError("duplicate game '" + r.game + "'", lineno);
    rows.push_back(r);
  }
  if (!header_done) throw ParseError("missing header", lineno);
  return rows;
}

void write_baselines(const std::string& path, const std::vector<BaselineRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw UsageError("cannot open for writing: " + path);
  os << "game,random,gamer,record\n";
  auto num = [](double d) {
    std::ostringstream s;
    s.precision(17);
    s << d;
    return s.str();
  };
  for (const auto& r : rows)
    os << r.game << ',' << num(r.random) << ',' << num(r.gamer) << ',' << num(r.record) << '\n';
}

std::vector<SeedScores> load_score_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no .json score files in " + dir);
  std::vector<SeedScores> out;
  for (const auto& f : files) {
    std::ifstream is(f);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const std::exception& e) {
      throw ParseError("bad JSON in " + f.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("expected a {game: score} object in " + f.string());
    SeedScores seed;
    for (const auto& [game, value] : j.items()) {
      if (!value.is_number()) throw ParseError("non-numeric score for '" + game + "' in " + f.string());
      seed[game] = value.get<double>();
    }
    out.push_back(std::move(seed));
  }
  return out;
}

}  // namespace dreamcc
