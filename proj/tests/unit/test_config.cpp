#include <cctype>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/config.hpp"
#include "xltrack/errors.hpp"

using namespace xltrack;

TEST_CASE("config: stage names round-trip in dependency order") {
  const auto stages = all_stages();
  REQUIRE(stages.size() == 5);
  CHECK(stages.front() == Stage::Generate);
  CHECK(stages.back() == Stage::Evaluate);
  for (Stage s : stages) CHECK(stage_from_string(stage_to_string(s)) == s);
  CHECK(stage_to_string(Stage::TrainRecon) == "train-recon");
  CHECK(stage_to_string(Stage::ExtractFeatures) == "extract-features");
  CHECK_THROWS_AS(stage_from_string("deploy"), ConfigError);
}

TEST_CASE("config: defaults validate and serialize canonically") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(back.geometry.n1 == cfg.geometry.n1);
  CHECK(back.trajectories.count == cfg.trajectories.count);
  CHECK(back.trajectories.spiral_dtheta == cfg.trajectories.spiral_dtheta);
  CHECK(back.snr_grid_db == cfg.snr_grid_db);
  CHECK(back.recon.lr == cfg.recon.lr);
  CHECK(back.features.sources == cfg.features.sources);
  CHECK(back.execution.master_seed == cfg.execution.master_seed);
  CHECK(back.execution.stages == cfg.execution.stages);
  // Canonical form is a fixed point of parse/serialize.
  CHECK(serialize_config(back) == text);
}

TEST_CASE("config: hash names the experiment, not the stage selection") {
  ExperimentConfig cfg;
  const std::string h = cfg.hash();
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

  ExperimentConfig partial = cfg;
  partial.execution.stages = {Stage::Generate};
  CHECK(partial.hash() == h);

  ExperimentConfig other = cfg;
  other.trajectories.count = cfg.trajectories.count + 1;
  CHECK(other.hash() != h);
  ExperimentConfig reseeded = cfg;
  reseeded.execution.master_seed = 99;
  CHECK(reseeded.hash() != h);
}

TEST_CASE("config: parser reports every unknown or invalid field at once") {
  const char* text = R"({
    "geometry": {"n1": 10, "bogus": 1},
    "unknown_block": {},
    "trajectories": {"count": 0}
  })";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    bool saw_bogus = false, saw_block = false;
    for (const auto& msg : e.issues()) {
      if (msg.find("geometry.bogus") != std::string::npos) saw_bogus = true;
      if (msg.find("unknown_block") != std::string::npos) saw_block = true;
    }
    CHECK(saw_bogus);
    CHECK(saw_block);
  }

  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2,3]"), ConfigError);
}

TEST_CASE("config: validation collects cross-field issues") {
  ExperimentConfig cfg;
  cfg.trajectories.count = 0;
  cfg.trajectories.split_fraction = 1.5;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() >= 2);
  }

  ExperimentConfig abl;
  abl.tracker.ablation.variants = {"lstm"};
  CHECK_THROWS_AS(abl.validate(), ConfigError);  // kinds/sources missing
  abl.tracker.ablation.kinds = {TrajectoryKind::RandomWalk};
  abl.tracker.ablation.sources = {InputSource::TrueRis};
  CHECK_NOTHROW(abl.validate());
  abl.tracker.ablation.variants = {"gru"};
  CHECK_THROWS_AS(abl.validate(), ConfigError);
}

TEST_CASE("config: derived parameter blocks mirror the experiment") {
  ExperimentConfig cfg;
  cfg.trajectories.count = 42;
  cfg.execution.master_seed = 77;

  const GenerationParams gp = cfg.generation_params(TrajectoryKind::Spiral);
  CHECK(gp.kind == TrajectoryKind::Spiral);
  CHECK(gp.count == 42);
  CHECK(gp.steps == cfg.trajectories.steps);
  CHECK(gp.snr_grid_db == cfg.snr_grid_db);
  CHECK(gp.master_seed == 77);
  CHECK(gp.split_fraction == cfg.trajectories.split_fraction);

  const ReconConfig rc = cfg.recon_config();
  CHECK(rc.m1 == cfg.geometry.m1);
  CHECK(rc.n1 == cfg.geometry.n1);
  CHECK(rc.upsample_h == cfg.recon.upsample_h);
  CHECK(rc.upsample_mode == nn::UpsampleMode::Bilinear);
  ExperimentConfig nearest = cfg;
  nearest.recon.upsample_mode = "nearest";
  CHECK(nearest.recon_config().upsample_mode == nn::UpsampleMode::Nearest);

  const FeatureParams fp = cfg.feature_params();
  CHECK(fp.cnn.n_f == cfg.features.n_f);
  CHECK(fp.aoa.snapshots == cfg.features.snapshots);
  CHECK(fp.aoa_enabled == cfg.features.aoa_enabled);

  const ScenarioGeometry geom = cfg.geometry.build();
  CHECK(geom.n1 == cfg.geometry.n1);
  CHECK(geom.wavelength == doctest::Approx(carrier_wavelength(28e9)).epsilon(1e-15));
  CHECK(geom.spacing == doctest::Approx(0.5 * geom.wavelength).epsilon(1e-15));
}

TEST_CASE("config: tracker variants map onto architecture switches") {
  ExperimentConfig cfg;
  const TrackerConfig full = cfg.tracker_config(24, "full");
  CHECK(full.input_dim == 24);
  CHECK(full.bidirectional);
  CHECK(full.layers == cfg.tracker.layers);

  const TrackerConfig stacked = cfg.tracker_config(24, "stacked_lstm");
  CHECK_FALSE(stacked.bidirectional);
  CHECK(stacked.layers == cfg.tracker.layers);

  const TrackerConfig single = cfg.tracker_config(24, "lstm");
  CHECK_FALSE(single.bidirectional);
  CHECK(single.layers == 1);

  CHECK_THROWS_AS(cfg.tracker_config(24, "gru"), ConfigError);
}

TEST_CASE("config: hyper seeds derive from the master seed and stage label") {
  ExperimentConfig cfg;
  cfg.execution.master_seed = 5;
  const ReconHyper r1 = cfg.recon_hyper();
  CHECK(r1.epochs == cfg.recon.epochs);
  CHECK(r1.learning_rate == cfg.recon.lr);
  CHECK(r1.seed == cfg.recon_hyper().seed);  // stable

  ExperimentConfig other = cfg;
  other.execution.master_seed = 6;
  CHECK(other.recon_hyper().seed != r1.seed);

  const TrackerHyper a = cfg.tracker_hyper("tracker:random_walk:bs");
  const TrackerHyper b = cfg.tracker_hyper("tracker:random_walk:true_ris");
  CHECK(a.seed != b.seed);
  CHECK(a.epochs == cfg.tracker.epochs);
  CHECK(a.seed == cfg.tracker_hyper("tracker:random_walk:bs").seed);
}

TEST_CASE("config: shipped profiles load and validate") {
  const std::string base = std::string(XLTRACK_SOURCE_DIR) + "/tools/profiles/";
  const ExperimentConfig desk = load_config(base + "desk.json");
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.geometry.n1 == 10);
  CHECK(desk.trajectories.kinds.size() == 3);
  CHECK(desk.snr_grid_db == std::vector<double>{0.0, 10.0, 20.0});
  CHECK(desk.tracker.ablation.variants.size() == 2);

  const ExperimentConfig paper = load_config(base + "paper.json");
  CHECK_NOTHROW(paper.validate());
  CHECK(paper.trajectories.count == 2000);
  CHECK(paper.snr_grid_db.size() == 5);

  const ExperimentConfig n256 = load_config(base + "desk_n256.json");
  CHECK_NOTHROW(n256.validate());
  CHECK(n256.geometry.n1 == 16);
  CHECK(n256.geometry.n2 == 16);

  CHECK(desk.hash() != paper.hash());
  CHECK(desk.hash() != n256.hash());
  CHECK_THROWS_AS(load_config(base + "absent.json"), IoError);
}
