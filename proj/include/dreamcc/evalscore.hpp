#pragma once

#include <map>
#include <string>
#include <vector>

namespace dreamcc {

struct BaselineRow {
  std::string game;
  double random = 0.0;
  double gamer = 0.0;
  double record = 0.0;
};

using SeedScores = std::map<std::string, double>;  // game -> raw score, one map per seed

struct ScoreTable {
  std::vector<BaselineRow> baselines;
  std::vector<SeedScores> scores;

  const BaselineRow& row(const std::string& game) const;
};

enum class Protocol { kGamerMedian, kGamerMean, kRecordMean, kClippedRecordMean };

Protocol parse_protocol(const std::string& name);
std::string protocol_name(Protocol p);

// (score - random) / (reference - random); reference == random is degenerate.
double normalize_score(double score, double random, double reference);

// Per seed: normalize every game (clip at 1 first for the clipped protocol),
// aggregate across games, then average the per-seed aggregates.
double aggregate(const ScoreTable& table, Protocol protocol);

// CSV with exact header game,random,gamer,record; '#' lines are comments.
std::vector<BaselineRow> load_baselines(const std::string& path);
void write_baselines(const std::string& path, const std::vector<BaselineRow>& rows);

// Directory of per-seed JSON files, each a flat {"game": score} map.
std::vector<SeedScores> load_score_dir(const std::string& dir);

}  // namespace dreamcc
