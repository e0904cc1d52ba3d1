#include <map>
#include <set>
#include <tuple>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/dataset.hpp"
#include "xltrack/errors.hpp"

using namespace xltrack;

namespace {

ScenarioGeometry small_geometry() {
  const double lam = carrier_wavelength(28e9);
  return build_geometry(4, 4, 2, 2, lam / 2.0, {6, 0, 2}, {0, 5, 1.5}, Axis::Y,
                        Axis::X, lam);
}

GenerationParams small_params() {
  GenerationParams p;
  p.kind = TrajectoryKind::RandomWalk;
  p.count = 3;
  p.steps = 4;
  p.snr_grid_db = {0.0, 10.0};
  p.n_scatterers = 4;
  p.master_seed = 7;
  return p;
}

}  // namespace

TEST_CASE("dataset: generation covers every (trajectory, step, snr) slot once") {
  const auto geom = small_geometry();
  const auto params = small_params();
  params.validate();
  const Dataset ds = generate_dataset(params, geom);

  CHECK(ds.records.size() == 3u * 4u * 2u);
  CHECK(ds.train_trajectories() == 2);  // floor(3 * 0.8)
  CHECK(static_cast<int>(ds.omega.omega.size()) == geom.n());

  std::set<std::tuple<std::int64_t, int, double>> seen;
  for (const auto& r : ds.records) {
    CHECK(r.kind == TrajectoryKind::RandomWalk);
    CHECK(static_cast<int>(r.y_r.size()) == geom.n());
    CHECK(static_cast<int>(r.y.size()) == geom.m());
    CHECK(params.bounds.contains(r.position));
    CHECK(r.split == (r.traj_id < 2 ? Split::Train : Split::Test));
    seen.insert({r.traj_id, r.step, r.snr_db});
  }
  CHECK(seen.size() == ds.records.size());
}

TEST_CASE("dataset: only the BS-side noise differs across the SNR grid") {
  const Dataset ds = generate_dataset(small_params(), small_geometry());
  std::map<std::pair<std::int64_t, int>, const SlotRecord*> first;
  for (const auto& r : ds.records) {
    const auto key = std::make_pair(r.traj_id, r.step);
    auto it = first.find(key);
    if (it == first.end()) {
      first[key] = &r;
      continue;
    }
    const SlotRecord& o = *it->second;
    CHECK((r.position - o.position).norm() == 0.0);
    CHECK(testutil::max_cdiff(r.y_r, o.y_r) == 0.0);      // clean reference signal
    CHECK(testutil::max_cdiff(r.y, o.y) > 0.0);           // different noise draw
  }
}

TEST_CASE("dataset: lower SNR means more BS-side noise energy") {
  const Dataset ds = generate_dataset(small_params(), small_geometry());
  double p0 = 0.0, p10 = 0.0;
  for (const auto& r : ds.records) {
    double e = 0.0;
    for (const auto& v : r.y) e += std::norm(v);
    (r.snr_db == 0.0 ? p0 : p10) += e;
  }
  CHECK(p0 > p10);
}

TEST_CASE("dataset: generation is bitwise deterministic") {
  const auto a = generate_dataset(small_params(), small_geometry());
  const auto b = generate_dataset(small_params(), small_geometry());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(testutil::max_cdiff(a.records[i].y, b.records[i].y) == 0.0);
    CHECK(testutil::max_cdiff(a.records[i].y_r, b.records[i].y_r) == 0.0);
  }

  auto params2 = small_params();
  params2.master_seed = 8;
  const auto c = generate_dataset(params2, small_geometry());
  CHECK(testutil::max_cdiff(a.records[0].y_r, c.records[0].y_r) > 0.0);
}

TEST_CASE("dataset: store round-trips bit for bit") {
  const auto ds = generate_dataset(small_params(), small_geometry());
  testutil::TempDir dir("dataset");
  save_dataset(ds, dir.str());

  const auto m = read_manifest(dir.str() + "/manifest.txt");
  CHECK(m.at("kind") == "random_walk");
  CHECK(m.at("count") == "3");

  const Dataset back = load_dataset(dir.str());
  CHECK(back.params.count == ds.params.count);
  CHECK(back.params.master_seed == ds.params.master_seed);
  CHECK(back.geometry.n() == ds.geometry.n());
  CHECK(back.fresnel_warnings == ds.fresnel_warnings);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& x = ds.records[i];
    const auto& y = back.records[i];
    CHECK(x.traj_id == y.traj_id);
    CHECK(x.step == y.step);
    CHECK(x.kind == y.kind);
    CHECK(x.split == y.split);
    CHECK(x.snr_db == y.snr_db);
    CHECK((x.position - y.position).norm() == 0.0);
    CHECK(testutil::max_cdiff(x.y, y.y) == 0.0);
    CHECK(testutil::max_cdiff(x.y_r, y.y_r) == 0.0);
  }
  CHECK(testutil::max_cdiff(back.omega.omega, ds.omega.omega) == 0.0);
}

TEST_CASE("dataset: load from a missing directory fails cleanly") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/xltrack_ds"), IoError);
}

TEST_CASE("dataset: parameter validation lists problems") {
  GenerationParams p = small_params();
  p.count = 0;
  p.snr_grid_db.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() >= 2);
  }
}
