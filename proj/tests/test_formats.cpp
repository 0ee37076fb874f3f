#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "tna/bundle.hpp"
#include "tna/config.hpp"
#include "tna/errors.hpp"
#include "tna/exports.hpp"

using namespace tna;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "tna_format_tests";
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("ini parsing") {
  std::istringstream in(
      "# comment\n"
      "[input]\n"
      "events = data.csv\n"
      "unit_column = group\n"
      "[session]\n"
      "mode = quantile_gap\n"
      "quantile = 0.9  ; trailing comment\n"
      "[run]\n"
      "seed = 42\n");
  const Ini ini = parse_ini(in);
  CHECK(ini.sections.at("input").at("events") == "data.csv");
  CHECK(ini.sections.at("session").at("quantile") == "0.9");

  const auto cfg = AnalysisConfig::from_ini(ini);
  CHECK(cfg.events_path == "data.csv");
  CHECK(cfg.unit_column == "group");
  CHECK(cfg.gap_mode == GapMode::quantile);
  CHECK(cfg.seed == 42);
  CHECK(cfg.covariate_unit_column == "group");  // defaults to the unit column
}

TEST_CASE("ini rejects malformed and unknown input") {
  SUBCASE("garbage line") {
    std::istringstream in("[input]\nnonsense\n");
    CHECK_THROWS_WITH_AS(parse_ini(in), doctest::Contains("line 2"), config_error);
  }
  SUBCASE("duplicate key") {
    std::istringstream in("[run]\nseed = 1\nseed = 2\n");
    CHECK_THROWS_AS(parse_ini(in), config_error);
  }
  SUBCASE("unknown key is reported with its section") {
    std::istringstream in("[run]\nseeed = 1\n");
    const Ini ini = parse_ini(in);
    CHECK_THROWS_WITH_AS(AnalysisConfig::from_ini(ini), doctest::Contains("seeed"),
                         config_error);
  }
  SUBCASE("bad numbers name the key") {
    std::istringstream in("[mixture]\nrestarts = many\n");
    const Ini ini = parse_ini(in);
    CHECK_THROWS_WITH_AS(AnalysisConfig::from_ini(ini), doctest::Contains("restarts"),
                         config_error);
  }
}

TEST_CASE("config hash is stable and sensitive") {
  AnalysisConfig a;
  AnalysisConfig b;
  CHECK(a.hash() == b.hash());
  b.seed = 999;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("matrix csv carries full precision and the seed header") {
  TempDir dir;
  Rng rng(3);
  const auto model = oracle::random_stochastic(3, rng);
  write_matrix_csv(dir.file("matrix.csv"), model, {42, "deadbeef00000000"});
  const auto text = slurp(dir.file("matrix.csv"));
  CHECK(text.find("seed=42") != std::string::npos);
  CHECK(text.find("config=deadbeef00000000") != std::string::npos);
  CHECK(text.find("state,A,B,C") != std::string::npos);

  // entries round-trip exactly through the printed representation
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // meta
  std::getline(in, line);  // header
  for (int i = 0; i < 3; ++i) {
    std::getline(in, line);
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // label
    for (int j = 0; j < 3; ++j) {
      std::getline(row, cell, ',');
      CHECK(std::stod(cell) == model.at(i, j));
    }
  }
}

TEST_CASE("dot export quotes labels and formats weights at 2 decimals") {
  TempDir dir;
  const auto model = oracle::model_from_rows({"plan", "exp lore"}, {0.25, 0.75},
                                             {{0.125, 0.875}, {1.0, 0.0}});
  write_network_dot(dir.file("net.dot"), model, {1, "abc"}, true);
  const auto text = slurp(dir.file("net.dot"));
  CHECK(text.find("digraph") != std::string::npos);
  CHECK(text.find("\"exp lore\"") != std::string::npos);
  CHECK(text.find("label=\"0.88\"") != std::string::npos);  // 0.875 at 2 decimals
  CHECK(text.find("pie=\"0.25\"") != std::string::npos);
}

TEST_CASE("graphml export is well-formed enough to round-trip labels") {
  TempDir dir;
  const auto model = oracle::model_from_rows({"a<b", "c&d"}, {0.5, 0.5},
                                             {{0.0, 1.0}, {1.0, 0.0}});
  write_graphml(dir.file("net.graphml"), model, {1, "abc"});
  const auto text = slurp(dir.file("net.graphml"));
  CHECK(text.find("a&lt;b") != std::string::npos);
  CHECK(text.find("c&amp;d") != std::string::npos);
  CHECK(text.find("<edge id=\"e0\" source=\"n0\" target=\"n1\">") != std::string::npos);
}

TEST_CASE("subtraction dot uses signed labels and colors") {
  TempDir dir;
  SubtractionNetwork sub;
  sub.alphabet = Alphabet::from_labels({"A", "B"});
  sub.delta = {0.0, 0.22, -0.11, 0.0};
  sub.label_a = "high";
  sub.label_b = "low";
  write_subtraction_dot(dir.file("sub.dot"), sub, {1, "abc"});
  const auto text = slurp(dir.file("sub.dot"));
  CHECK(text.find("label=\"+0.22\"") != std::string::npos);
  CHECK(text.find("color=blue") != std::string::npos);
  CHECK(text.find("label=\"-0.11\"") != std::string::npos);
  CHECK(text.find("color=red") != std::string::npos);
}

TEST_CASE("bundle model round-trip preserves every entry bit-for-bit") {
  Rng rng(9);
  const auto model = oracle::random_stochastic(4, rng);
  const auto j = model_to_json(model);
  const auto back = model_from_json(j);
  CHECK(back.matrix == model.matrix);
  CHECK(back.initial == model.initial);
  CHECK(back.alphabet.labels == model.alphabet.labels);
  CHECK(back.scaling == model.scaling);
}

TEST_CASE("bundle verify catches tampering") {
  AnalysisConfig cfg;
  Json bundle = bundle_skeleton(cfg);
  Rng rng(13);
  const auto model = oracle::random_stochastic(3, rng);
  bundle["model"] = model_to_json(model);
  CHECK(verify_bundle(bundle).empty());

  SUBCASE("broken row sum") {
    bundle["model"]["matrix"][0][0] = 0.9;
    const auto failures = verify_bundle(bundle);
    CHECK(!failures.empty());
  }
  SUBCASE("config echo and hash disagree") {
    bundle["config"]["run.seed"] = "12345";
    const auto failures = verify_bundle(bundle);
    CHECK(!failures.empty());
  }
  SUBCASE("covariate table arithmetic") {
    bundle["covariate_inference"] = Json::array();
    bundle["covariate_inference"].push_back({{"cluster", 2},
                                             {"variable", "x"},
                                             {"estimate", 1.2},
                                             {"se", 0.39},
                                             {"ci_low", 1.2 - 1.96 * 0.39},
                                             {"ci_high", 1.2 + 1.96 * 0.39},
                                             {"t", 1.2 / 0.39},
                                             {"p", 0.002}});
    CHECK(verify_bundle(bundle).empty());
    bundle["covariate_inference"][0]["ci_high"] = 99.0;
    CHECK(!verify_bundle(bundle).empty());
  }
}

TEST_CASE("atomic_write leaves no temp file behind") {
  TempDir dir;
  atomic_write(dir.file("out.txt"), "hello\n");
  CHECK(slurp(dir.file("out.txt")) == "hello\n");
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path)) {
    (void)entry;
    ++files;
  }
  CHECK(files == 1);
}

TEST_CASE("format_full keeps doubles round-trippable") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(8)));
    CHECK(std::stod(format_full(v)) == v);
  }
  CHECK(format_full(0.1) == "0.1");
  CHECK(format_full(1.0) == "1");
}
