// Configuration parsing (TOML subset), resolved-config JSON, and the tree
// JSONL round trip with its validation errors.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdsim/config.hpp"
#include "bdsim/rng.hpp"
#include "bdsim/simulate.hpp"
#include "bdsim/toml.hpp"
#include "bdsim/tree_io.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

TEST(Toml, ParsesScalarsSectionsAndArrays) {
  const std::string text = R"(# top comment
title = "hello # not a comment"
count = 42
"quoted key" = true

[numbers]            # section comment
pi = 3.5
neg = -2.25e-3
big = inf
ints_as_floats = 7
flags = [true, false]
grid = [1.0, 2.0,
        3.0]         # multi-line array
names = ["a", "b"]
)";
  const bdsim::TomlDoc doc = bdsim::toml_parse(text);
  EXPECT_EQ(doc.root.at("title").as_string(), "hello # not a comment");
  EXPECT_EQ(doc.root.at("count").as_int(), 42);
  EXPECT_TRUE(doc.root.at("quoted key").as_bool());
  ASSERT_TRUE(doc.has_section("numbers"));
  const bdsim::TomlTable& num = doc.section("numbers");
  EXPECT_EQ(num.at("pi").as_float(), 3.5);
  EXPECT_EQ(num.at("neg").as_float(), -2.25e-3);
  EXPECT_TRUE(std::isinf(num.at("big").as_float()));
  EXPECT_EQ(num.at("ints_as_floats").as_float(), 7.0);  // int promotes
  const std::vector<double> grid = num.at("grid").as_float_array();
  ASSERT_EQ(grid.size(), 3u);
  EXPECT_EQ(grid[2], 3.0);
  EXPECT_EQ(num.at("names").as_array()[1].as_string(), "b");
  EXPECT_TRUE(doc.section("absent").empty());  // missing section reads empty
}

TEST(Toml, RejectsMalformedInput) {
  EXPECT_THROW(bdsim::toml_parse("just a bare word\n"), bdsim::ConfigError);
  EXPECT_THROW(bdsim::toml_parse("[unclosed\n"), bdsim::ConfigError);
  EXPECT_THROW(bdsim::toml_parse("a =\n"), bdsim::ConfigError);
  EXPECT_THROW(bdsim::toml_parse("a = [1.0, 2.0\nb = 3\n"), bdsim::ConfigError);
  const bdsim::TomlDoc doc = bdsim::toml_parse("s = \"text\"\n");
  EXPECT_THROW((void)doc.root.at("s").as_int(), bdsim::ConfigError);
  EXPECT_THROW((void)doc.root.at("s").as_float(), bdsim::ConfigError);
  EXPECT_THROW((void)doc.root.at("s").as_array(), bdsim::ConfigError);
}

TEST(Config, EmptyDocumentYieldsTheReferenceModel) {
  const bdsim::ExperimentConfig cfg =
      bdsim::ExperimentConfig::from_toml(bdsim::toml_parse(""));
  const bdsim::ExperimentConfig ref = bdsim::ExperimentConfig::reference();
  EXPECT_EQ(cfg.domain.dim(), 1);
  EXPECT_EQ(cfg.domain.lo(0), 0.0);
  EXPECT_EQ(cfg.domain.hi(0), kPi);
  EXPECT_EQ(cfg.x0[0], kPi / 2.0);  // midpoint default
  EXPECT_EQ(cfg.beta_spec, "critical");
  EXPECT_NEAR(cfg.beta, 0.5, 1e-14);
  EXPECT_EQ(cfg.beta, ref.beta);
  EXPECT_EQ(cfg.seed, ref.seed);
  EXPECT_EQ(cfg.replicas, ref.replicas);
  EXPECT_EQ(cfg.horizon, ref.horizon);
  EXPECT_EQ(cfg.tolerances.p_value, 0.01);
  EXPECT_EQ(cfg.tolerances.q90_norm, 0.30);
  EXPECT_NEAR(cfg.constants.lambda1, 0.5, 1e-13);
  EXPECT_NEAR(cfg.constants.beta_critical, 0.5, 1e-13);
}

TEST(Config, FullOverrideReachesEveryField) {
  const std::string text = R"(
[model]
domain_lo = [0.0, 0.0]
domain_hi = [3.141592653589793, 2.0]
coeff = [1.0, 0.5]
x0 = [1.0, 0.75]
offspring_k = [0, 2]
offspring_p = [0.25, 0.75]
beta = 0.61803398874989485

[simulation]
h = 0.002
bridge_correction = false
particle_cap = 5000
path_stride = 3

[run]
seed = 424242
replicas = 7
horizon = 12.5

[tolerances]
p_value = 0.005
q90_norm = 0.22
)";
  const bdsim::ExperimentConfig cfg =
      bdsim::ExperimentConfig::from_toml(bdsim::toml_parse(text));
  EXPECT_EQ(cfg.domain.dim(), 2);
  EXPECT_EQ(cfg.domain.hi(1), 2.0);
  EXPECT_EQ(cfg.domain.coeff(1), 0.5);
  EXPECT_EQ(cfg.x0[1], 0.75);
  EXPECT_NEAR(cfg.offspring.mean(), 1.5, 1e-15);
  // Numeric beta survives the string round trip to the last bit.
  EXPECT_EQ(cfg.beta, 0.61803398874989485);
  EXPECT_EQ(cfg.step.h, 0.002);
  EXPECT_FALSE(cfg.step.bridge_correction);
  EXPECT_EQ(cfg.particle_cap, 5000);
  EXPECT_EQ(cfg.path_stride, 3);
  EXPECT_EQ(cfg.seed, 424242u);
  EXPECT_EQ(cfg.replicas, 7);
  EXPECT_EQ(cfg.horizon, 12.5);
  EXPECT_EQ(cfg.tolerances.p_value, 0.005);
  EXPECT_EQ(cfg.tolerances.q90_norm, 0.22);
  EXPECT_EQ(cfg.tolerances.z_limit, 3.0);  // untouched keys keep defaults

  // simulation_params carries the resolved model over unchanged.
  const bdsim::SimulationParams sp = cfg.simulation_params();
  EXPECT_EQ(sp.beta, cfg.beta);
  EXPECT_EQ(sp.horizon, 12.5);
  EXPECT_EQ(sp.step.h, 0.002);
}

TEST(Config, CriticalBetaTracksTheModel) {
  // lambda1 = 1/8 on (0, 2 pi); m = 3/2 gives beta_c = (1/8) / (1/2) = 1/4.
  const std::string text = R"(
[model]
domain_hi = [6.283185307179586]
offspring_k = [0, 2]
offspring_p = [0.25, 0.75]
)";
  const bdsim::ExperimentConfig cfg =
      bdsim::ExperimentConfig::from_toml(bdsim::toml_parse(text));
  EXPECT_NEAR(cfg.beta, 0.25, 1e-13);
  EXPECT_EQ(cfg.beta, cfg.constants.beta_critical);
}

TEST(Config, RejectsInvalidInput) {
  auto parse = [](const std::string& text) {
    return bdsim::ExperimentConfig::from_toml(bdsim::toml_parse(text));
  };
  EXPECT_THROW(parse("[model]\ndomain_lo = [0.0, 0.0]\ndomain_hi = [1.0]\n"),
               bdsim::ConfigError);
  EXPECT_THROW(parse("[model]\noffspring_k = [0, 2]\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[model]\nbeta = \"supercritical\"\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[model]\nbeta = -0.5\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[model]\nx0 = [5.0]\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[simulation]\nh = -0.001\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[simulation]\nparticle_cap = 0\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[simulation]\npath_stride = 0\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[run]\nreplicas = 0\n"), bdsim::ConfigError);
  EXPECT_THROW(parse("[run]\nhorizon = 0.0\n"), bdsim::ConfigError);
}

TEST(Config, ResolvedJsonIsCompleteAndParses) {
  const bdsim::ExperimentConfig cfg = bdsim::ExperimentConfig::reference();
  const nlohmann::json j = nlohmann::json::parse(cfg.to_json());
  EXPECT_EQ(j.at("model").at("beta_spec").get<std::string>(), "critical");
  EXPECT_NEAR(j.at("model").at("beta").get<double>(), 0.5, 1e-14);
  EXPECT_EQ(j.at("run").at("seed").get<uint64_t>(), cfg.seed);
  EXPECT_NEAR(j.at("constants").at("lambda1").get<double>(), 0.5, 1e-13);
  EXPECT_NEAR(j.at("constants").at("b").get<double>(), 2.9530518648229540, 1e-10);
  EXPECT_NEAR(j.at("constants").at("sigma2").get<double>(), 0.42441318157838748,
              1e-10);
  EXPECT_EQ(j.at("model").at("offspring_k").size(), 1u);  // A == 2 only
}

bdsim::MarkedTree sample_tree(uint64_t index, bool spine, bool paths) {
  bdsim::SimulationParams p;
  p.horizon = 3.0;
  p.store_paths = paths;
  bdsim::RngStream rng = bdsim::RngStream::derive(991001, index);
  return spine ? bdsim::simulate_spine_tree(p, rng) : bdsim::simulate_tree(p, rng);
}

TEST(TreeJson, RoundTripIsBitwiseIncludingPathsAndSpine) {
  for (uint64_t i = 0; i < 20; ++i) {
    const bdsim::MarkedTree tree = sample_tree(i, i % 2 == 1, true);
    const std::string line = bdsim::tree_to_json(tree);
    const bdsim::MarkedTree back = bdsim::tree_from_json(line);
    EXPECT_EQ(bdsim::tree_to_json(back), line);
    ASSERT_EQ(back.size(), tree.size());
    EXPECT_EQ(back.horizon, tree.horizon);
    for (int v = 0; v < tree.size(); ++v) {
      const bdsim::TreeNode& a = tree.nodes[static_cast<size_t>(v)];
      const bdsim::TreeNode& b = back.nodes[static_cast<size_t>(v)];
      EXPECT_EQ(a.birth, b.birth);
      EXPECT_EQ(a.death, b.death);
      EXPECT_EQ(a.x_death[0], b.x_death[0]);
      EXPECT_EQ(a.on_spine, b.on_spine);
      ASSERT_EQ(a.interior.size(), b.interior.size());
      for (size_t s = 0; s < a.interior.size(); ++s) {
        EXPECT_EQ(a.interior[s].t, b.interior[s].t);
        EXPECT_EQ(a.interior[s].x[0], b.interior[s].x[0]);
      }
    }
  }
}

TEST(TreeJson, RejectsStructurallyBrokenTrees) {
  const std::string line = bdsim::tree_to_json(sample_tree(3, false, false));
  nlohmann::json base = nlohmann::json::parse(line);
  ASSERT_GE(base["nodes"].size(), 2u) << "seed must give a branching tree";

  auto expect_throws = [](nlohmann::json j) {
    EXPECT_THROW((void)bdsim::tree_from_json(j.dump()), bdsim::ConfigError);
  };
  EXPECT_THROW((void)bdsim::tree_from_json("not json at all"),
               bdsim::ConfigError);
  EXPECT_THROW((void)bdsim::tree_from_json("{\"horizon\": 1.0}"),
               bdsim::ConfigError);

  nlohmann::json j = base;
  j["nodes"] = nlohmann::json::array();
  expect_throws(j);  // no root

  j = base;
  j["nodes"][0]["parent"] = 0;
  expect_throws(j);  // root must have parent -1

  j = base;
  j["nodes"][1]["parent"] = 5;
  expect_throws(j);  // parent must precede the child

  j = base;
  j["nodes"][1]["rank"] = 2;
  expect_throws(j);  // sibling ranks must arrive 1,2,...

  j = base;
  j["nodes"][1]["birth"] = j["nodes"][1]["birth"].get<double>() + 0.1;
  expect_throws(j);  // handoff must be exact

  j = base;
  j["nodes"][0]["term"] = "killed";
  expect_throws(j);  // children attached to a non-branching node

  j = base;
  j["nodes"][0]["term"] = "eaten";
  expect_throws(j);  // unknown terminal kind

  j = base;
  j["nodes"][0]["death"] = -1.0;
  expect_throws(j);  // death precedes birth
}

TEST(TreeJsonl, SkipsHeaderBlanksAndRoundTrips) {
  std::vector<bdsim::MarkedTree> trees;
  for (uint64_t i = 0; i < 4; ++i) trees.push_back(sample_tree(10 + i, false, false));

  // Same shape as the artifact header: one compact line opening {"config".
  nlohmann::json header;
  header["config"] =
      nlohmann::json::parse(bdsim::ExperimentConfig::reference().to_json());
  header["seed"] = 991001;
  std::stringstream ss;
  ss << header.dump() << "\n\n";
  bdsim::write_trees_jsonl(ss, trees);

  const std::vector<bdsim::MarkedTree> back = bdsim::read_trees_jsonl(ss);
  ASSERT_EQ(back.size(), trees.size());
  for (size_t i = 0; i < trees.size(); ++i)
    EXPECT_EQ(bdsim::tree_to_json(back[i]), bdsim::tree_to_json(trees[i]));
}

}  // namespace
