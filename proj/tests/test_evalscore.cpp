#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "common.hpp"
#include "dreamcc/errors.hpp"
#include "dreamcc/evalscore.hpp"
#include "dreamcc/rng.hpp"

using namespace dreamcc;
using namespace dreamcc::testing;

namespace {

// three games with spread-out baselines plus two seeds of hand-checked scores
ScoreTable synthetic_table() {
  ScoreTable t;
  t.baselines = {{"alpha", 0.0, 10.0, 100.0},
                 {"beta", -10.0, 10.0, 40.0},
                 {"gamma", 5.0, 10.0, 10.0}};
  t.scores = {{{"alpha", 55.0}, {"beta", 15.0}, {"gamma", 7.5}},
              {{"alpha", 200.0}, {"beta", -10.0}, {"gamma", 10.0}}};
  return t;
}

}  // namespace

TEST_CASE("normalize_score matches the published reference points") {
  // Pong at score 20: (20 - -21) / (21 - -21) = 41/42
  CHECK(close(normalize_score(20, -21, 21), 0.9762, 1e-4));
  CHECK(close(normalize_score(20, -21, 21), 41.0 / 42.0, 1e-15));
  // Breakout at score 312 against the gamer: 310/28
  CHECK(close(normalize_score(312, 2, 30), 11.07, 1e-2));
  CHECK(close(normalize_score(312, 2, 30), 310.0 / 28.0, 1e-15));
  CHECK(normalize_score(-21, -21, 21) == 0.0);
  CHECK(normalize_score(21, -21, 21) == 1.0);
  CHECK_THROWS_AS(normalize_score(5, 3, 3), DomainError);
}

TEST_CASE("protocol names round-trip and reject unknowns") {
  for (Protocol p : {Protocol::kGamerMedian, Protocol::kGamerMean, Protocol::kRecordMean,
                     Protocol::kClippedRecordMean})
    CHECK(parse_protocol(protocol_name(p)) == p);
  CHECK_THROWS_AS(parse_protocol("median"), UsageError);
}

TEST_CASE("all four protocols match the hand-computed oracle") {
  ScoreTable t = synthetic_table();
  // gamer-normalized: seed0 {5.5, 1.25, 0.5}, seed1 {20, 0, 1}
  CHECK(close(aggregate(t, Protocol::kGamerMedian), 0.5 * (1.25 + 1.0), 1e-12));
  CHECK(close(aggregate(t, Protocol::kGamerMean), 0.5 * (7.25 / 3.0 + 7.0), 1e-12));
  // record-normalized: seed0 {0.55, 0.5, 0.5}, seed1 {2, 0, 1}
  CHECK(close(aggregate(t, Protocol::kRecordMean), 0.5 * (1.55 / 3.0 + 1.0), 1e-12));
  // clipping caps seed1's alpha at 1 before the cross-game mean
  CHECK(close(aggregate(t, Protocol::kClippedRecordMean), 0.5 * (1.55 / 3.0 + 2.0 / 3.0), 1e-12));
}

TEST_CASE("clipping happens after normalization, before the game mean") {
  ScoreTable t;
  t.baselines = {{"x", 0.0, 1.0, 1.0}, {"y", 0.0, 1.0, 1.0}};
  t.scores = {{{"x", 2.0}, {"y", 0.5}}};
  CHECK(close(aggregate(t, Protocol::kClippedRecordMean), 0.75, 1e-15));
  // without clipping the same table averages to 1.25
  CHECK(close(aggregate(t, Protocol::kRecordMean), 1.25, 1e-15));
}

TEST_CASE("scores equal to random yield zero under every protocol") {
  ScoreTable t = synthetic_table();
  t.scores = {{{"alpha", 0.0}, {"beta", -10.0}, {"gamma", 5.0}}};
  for (Protocol p : {Protocol::kGamerMedian, Protocol::kGamerMean, Protocol::kRecordMean,
                     Protocol::kClippedRecordMean})
    CHECK(close(aggregate(t, p), 0.0, 1e-15));
}

TEST_CASE("aggregate is permutation-invariant over games and seeds") {
  ScoreTable t = synthetic_table();
  ScoreTable shuffled = t;
  std::reverse(shuffled.baselines.begin(), shuffled.baselines.end());
  std::swap(shuffled.scores[0], shuffled.scores[1]);
  for (Protocol p : {Protocol::kGamerMedian, Protocol::kGamerMean, Protocol::kRecordMean,
                     Protocol::kClippedRecordMean})
    CHECK(aggregate(t, p) == aggregate(shuffled, p));
}

TEST_CASE("seed averaging is identity for duplicated seeds") {
  ScoreTable one = synthetic_table();
  one.scores.resize(1);
  ScoreTable two = synthetic_table();
  two.scores = {one.scores[0], one.scores[0]};
  for (Protocol p : {Protocol::kGamerMedian, Protocol::kGamerMean, Protocol::kRecordMean,
                     Protocol::kClippedRecordMean})
    CHECK(close(aggregate(one, p), aggregate(two, p), 1e-15));
}

TEST_CASE("median handles even game counts by averaging the middles") {
  ScoreTable t;
  t.baselines = {{"a", 0, 1, 1}, {"b", 0, 1, 1}, {"c", 0, 1, 1}, {"d", 0, 1, 1}};
  t.scores = {{{"a", 0.1}, {"b", 0.4}, {"c", 0.6}, {"d", 5.0}}};
  CHECK(close(aggregate(t, Protocol::kGamerMedian), 0.5, 1e-15));
}

TEST_CASE("clipped record mean never exceeds 1") {
  Rng rng = make_stream(400, "clip");
  std::uniform_real_distribution<double> u(-1e4, 1e6);
  ScoreTable t = synthetic_table();
  for (int rep = 0; rep < 200; ++rep) {
    for (auto& seed : t.scores)
      for (auto& [game, v] : seed) v = u(rng);
    CHECK(aggregate(t, Protocol::kClippedRecordMean) <= 1.0);
  }
}

TEST_CASE("missing data is an error, not an imputation") {
  ScoreTable t = synthetic_table();
  t.scores[1].erase("beta");
  CHECK_THROWS_AS(aggregate(t, Protocol::kGamerMean), UsageError);
  ScoreTable unknown = synthetic_table();
  for (auto& seed : unknown.scores) seed["delta"] = 1.0;
  CHECK_THROWS_AS(aggregate(unknown, Protocol::kGamerMean), UsageError);
  ScoreTable empty = synthetic_table();
  empty.scores.clear();
  CHECK_THROWS_AS(aggregate(empty, Protocol::kGamerMean), UsageError);
}

TEST_CASE("shipped baseline table has 55 games with sane rows") {
  auto rows = load_baselines(std::string(DREAMCC_DATA_DIR) + "/atari_baselines.csv");
  REQUIRE(rows.size() == 55);
  bool saw_pong = false, saw_breakout = false;
  for (const auto& r : rows) {
    CHECK(r.record != r.random);
    CHECK(r.gamer != r.random);
    if (r.game == "Pong") {
      saw_pong = true;
      CHECK(r.random == -21.0);
      CHECK(r.gamer == 15.0);
      CHECK(r.record == 21.0);
    }
    if (r.game == "Breakout") {
      saw_breakout = true;
      CHECK(r.random == 2.0);
      CHECK(r.gamer == 30.0);
      CHECK(r.record == 864.0);
    }
  }
  CHECK(saw_pong);
  CHECK(saw_breakout);
}

TEST_CASE("baseline CSV round-trips through write and load") {
  namespace fs = std::filesystem;
  const std::string path = "/tmp/dreamcc_baselines_rt.csv";
  auto rows = load_baselines(std::string(DREAMCC_DATA_DIR) + "/atari_baselines.csv");
  write_baselines(path, rows);
  auto back = load_baselines(path);
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].game == rows[i].game);
    CHECK(back[i].random == rows[i].random);
    CHECK(back[i].gamer == rows[i].gamer);
    CHECK(back[i].record == rows[i].record);
  }
  fs::remove(path);
}

TEST_CASE("baseline parse errors carry line numbers") {
  const std::string path = "/tmp/dreamcc_baselines_bad.csv";
  auto write = [&](const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    os << text;
  };
  auto expect_line = [&](int want) {
    try {
      load_baselines(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line_number == want);
    }
  };
  write("game,random,human,record\nPong,-21,15,21\n");
  expect_line(1);
  write("game,random,gamer,record\nPong,-21,15\n");
  expect_line(2);
  write("game,random,gamer,record\n# note\nPong,-21,xy,21\n");
  expect_line(3);
  write("game,random,gamer,record\nPong,-21,15,21\nPong,-21,15,21\n");
  expect_line(3);
  write("game,random,gamer,record\n,1,2,3\n");
  expect_line(2);
  write("# only comments\n");
  CHECK_THROWS_AS(load_baselines(path), ParseError);
  CHECK_THROWS_AS(load_baselines("/tmp/does_not_exist_dreamcc.csv"), UsageError);
  std::filesystem::remove(path);
}

TEST_CASE("score directories load per-seed JSON maps in sorted order") {
  namespace fs = std::filesystem;
  const std::string dir = "/tmp/dreamcc_scores";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir + "/seed1.json") << R"({"alpha": 200.0, "beta": -10, "gamma": 10})";
  std::ofstream(dir + "/seed0.json") << R"({"alpha": 55.0, "beta": 15, "gamma": 7.5})";
  std::ofstream(dir + "/notes.txt") << "ignored";
  auto seeds = load_score_dir(dir);
  REQUIRE(seeds.size() == 2);
  CHECK(seeds[0].at("alpha") == 55.0);  // seed0.json sorts first
  CHECK(seeds[1].at("alpha") == 200.0);

  ScoreTable t = synthetic_table();
  t.scores = seeds;
  CHECK(close(aggregate(t, Protocol::kClippedRecordMean), 0.5 * (1.55 / 3.0 + 2.0 / 3.0), 1e-12));

  std::ofstream(dir + "/seed2.json") << "[1, 2]";
  CHECK_THROWS_AS(load_score_dir(dir), ParseError);
  std::ofstream(dir + "/seed2.json", std::ios::trunc) << R"({"alpha": "high"})";
  CHECK_THROWS_AS(load_score_dir(dir), ParseError);
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK_THROWS_AS(load_score_dir(dir), UsageError);
  fs::remove_all(dir);
}
