#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gazemap/dataset.hpp"
#include "gazemap/synth.hpp"
#include "support.hpp"

using namespace gazemap;
using testing_support::throws_kind;

namespace {

std::vector<DriveRecord> driver_records(const std::string& id, int n, std::uint64_t seed,
                                        const Quaternion& mean_rot = Quaternion::Identity(),
                                        const Vec3& shift = Vec3::Zero()) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<DriveRecord> out;
  for (int i = 0; i < n; ++i) {
    DriveRecord r;
    r.driver_id = id;
    r.frame_index = i;
    r.head.position = shift + Vec3(0.02 * g(rng), 0.02 * g(rng), 0.02 * g(rng));
    const Quaternion q = mean_rot * axis_angle(Vec3(g(rng), g(rng), g(rng)), 0.1 * std::abs(g(rng)));
    r.head.orientation = angles_from_rotation(q.toRotationMatrix());
    r.target_gaze = {0.3 * g(rng), 0.2 * g(rng)};
    r.marker_id = 1 + i % kMarkerCount;
    out.push_back(r);
  }
  return out;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.drivers = 4;
  s.frames_per_marker = 5;
  return s;
}

}  // namespace

TEST(Normalize, CenteredRecordsAreUnchanged) {
  // Positions averaging to zero and rotations averaging to identity.
  std::vector<DriveRecord> recs = driver_records("A", 40, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    recs[20 + i].head.position = -recs[i].head.position;
    recs[20 + i].head.orientation = angles_from_rotation(recs[i].head.rotation().transpose());
  }
  const auto norm = normalize_driver(recs);
  const double mean_angle = geodesic_angle(Quaternion(norm.reference.rotation), Quaternion::Identity());
  ASSERT_LE(mean_angle, 1e-3);
  // Re-centering an already centered set moves it only by its residual mean.
  const auto twice = normalize_driver(norm.records);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_LE((twice.records[i].head.position - norm.records[i].head.position).norm(), 1e-9);
    EXPECT_LE((twice.records[i].head.orientation - norm.records[i].head.orientation).norm(), 1e-6);
  }
}

TEST(Normalize, IdentityMeanLeavesRecordsUnchanged) {
  std::vector<DriveRecord> recs;
  for (int i = 0; i < 12; ++i) {
    DriveRecord r;
    r.driver_id = "A";
    r.head.position = Vec3::Zero();
    r.head.orientation = Vec3::Zero();
    r.target_gaze = {0.1 * i, -0.05 * i};
    recs.push_back(r);
  }
  const auto norm = normalize_driver(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_LE((norm.records[i].head.position - recs[i].head.position).norm(), 1e-9);
    EXPECT_LE((norm.records[i].head.orientation - recs[i].head.orientation).norm(), 1e-9);
    EXPECT_EQ(norm.records[i].target_gaze, recs[i].target_gaze);
  }
}

TEST(Normalize, TranslationInvariance) {
  const auto base = driver_records("A", 30, 2);
  auto shifted = base;
  for (auto& r : shifted) r.head.position += Vec3(1, 2, 3);
  const auto a = normalize_driver(base);
  const auto b = normalize_driver(shifted);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_LE((a.records[i].head.position - b.records[i].head.position).norm(), 1e-9);
    EXPECT_LE((a.records[i].head.orientation - b.records[i].head.orientation).norm(), 1e-12);
  }
  EXPECT_LE((b.reference.translation - a.reference.translation - Vec3(1, 2, 3)).norm(), 1e-9);
}

TEST(Normalize, MeanOrientationBecomesIdentity) {
  const auto recs = driver_records("A", 200, 3, rot_y(deg2rad(15)));
  const auto norm = normalize_driver(recs);
  std::vector<Quaternion> after;
  for (const auto& r : norm.records) after.emplace_back(r.head.rotation());
  EXPECT_LE(geodesic_angle(slerp_mean(after), Quaternion::Identity()), 1e-6);
  EXPECT_LE(rad2deg(geodesic_angle(Quaternion(norm.reference.rotation), rot_y(deg2rad(15)))), 2.0);
}

TEST(Normalize, Idempotent) {
  const auto recs = driver_records("A", 60, 4, axis_angle(Vec3(1, -2, 0.5), 0.4), Vec3(0.1, -0.3, 0.2));
  const auto once = normalize_driver(recs);
  const auto twice = normalize_driver(once.records);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_LE((once.records[i].head.position - twice.records[i].head.position).norm(), 1e-9);
    EXPECT_LE((once.records[i].head.orientation - twice.records[i].head.orientation).norm(), 1e-9);
  }
}

TEST(Normalize, Errors) {
  auto recs = driver_records("A", 12, 5);
  recs[3].driver_id = "B";
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { normalize_driver(recs); }));
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { normalize_driver(driver_records("A", 9, 5)); }));
}

TEST(NormalizeAll, KeepsDriverOrderAndGaze) {
  auto recs = driver_records("B", 15, 6, rot_x(0.2));
  const auto more = driver_records("A", 15, 7, rot_z(-0.3), Vec3(1, 0, 0));
  recs.insert(recs.end(), more.begin(), more.end());
  const auto out = normalize_all(recs);
  ASSERT_EQ(out.size(), recs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].driver_id, recs[i].driver_id);
    EXPECT_EQ(out[i].target_gaze, recs[i].target_gaze);
  }
  EXPECT_EQ(driver_ids(out), (std::vector<std::string>{"B", "A"}));
}

TEST(Folds, SixteenDrivers) {
  std::vector<std::string> ids;
  for (int i = 0; i < 16; ++i) ids.push_back(synth_driver_id(i));
  const auto folds = make_folds(ids);
  ASSERT_EQ(folds.size(), 16u);
  for (const auto& f : folds) EXPECT_EQ(f.train_drivers.size(), 14u);
}

TEST(Folds, ThreeDriversMinimum) {
  const auto folds = make_folds({"a", "b", "c"});
  ASSERT_EQ(folds.size(), 3u);
  for (const auto& f : folds) EXPECT_EQ(f.train_drivers.size(), 1u);
  EXPECT_EQ(folds[0].validation_driver, "b");
  EXPECT_EQ(folds[2].validation_driver, "a");
}

TEST(Folds, PartitionProperty) {
  for (int n = 3; n <= 12; ++n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
    std::map<std::string, int> test_count;
    for (const auto& f : make_folds(ids)) {
      ++test_count[f.test_driver];
      EXPECT_NE(f.test_driver, f.validation_driver);
      std::set<std::string> all(f.train_drivers.begin(), f.train_drivers.end());
      EXPECT_EQ(all.size(), f.train_drivers.size());
      EXPECT_FALSE(all.contains(f.test_driver));
      EXPECT_FALSE(all.contains(f.validation_driver));
      all.insert(f.test_driver);
      all.insert(f.validation_driver);
      EXPECT_EQ(all, std::set<std::string>(ids.begin(), ids.end()));
    }
    for (const auto& id : ids) EXPECT_EQ(test_count[id], 1);
  }
}

TEST(Folds, Errors) {
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [] { make_folds({"a", "b"}); }));
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [] { make_folds({"a", "b", "a"}); }));
}

TEST(Features, ModesArePrefixesOfFull) {
  HeadPose h{Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.5, -0.6)};
  const auto full = features(h, FeatureMode::full6d);
  ASSERT_EQ(full.size(), 6);
  EXPECT_EQ(full(0), -0.4);
  EXPECT_EQ(full(5), 0.3);
  for (auto m : {FeatureMode::orientation3d, FeatureMode::orientation_plus_xy}) {
    const auto f = features(h, m);
    ASSERT_EQ(f.size(), feature_dim(m));
    EXPECT_EQ(f, full.head(f.size()));
  }
  EXPECT_EQ(feature_dim(FeatureMode::orientation3d), 3);
  EXPECT_EQ(feature_dim(FeatureMode::orientation_plus_xy), 5);
}

TEST(Features, ModeNamesRoundTrip) {
  for (auto m : {FeatureMode::full6d, FeatureMode::orientation3d, FeatureMode::orientation_plus_xy}) {
    EXPECT_EQ(parse_feature_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_feature_mode("bogus"));
}

TEST(Subsample, StratifiedCapKeepsEveryGroupAndOrder) {
  const auto recs = synthesize(small_spec(), 1);
  const auto sub = stratified_subsample(recs, 100);
  ASSERT_EQ(sub.size(), 100u);
  std::map<std::string, int> per_driver;
  for (const auto& r : sub) ++per_driver[r.driver_id];
  for (const auto& [id, n] : per_driver) EXPECT_EQ(n, 25);
  // Order preserved: (driver, frame) increasing.
  for (std::size_t i = 1; i < sub.size(); ++i) {
    if (sub[i].driver_id == sub[i - 1].driver_id) {
      EXPECT_GT(sub[i].frame_index, sub[i - 1].frame_index);
    }
  }
  EXPECT_EQ(stratified_subsample(recs, 0).size(), recs.size());
  EXPECT_EQ(stratified_subsample(recs, 100000).size(), recs.size());
}

TEST(Synth, SameSeedIsByteIdentical) {
  const auto a = synthesize(small_spec(), 42);
  const auto b = synthesize(small_spec(), 42);
  std::ostringstream sa, sb;
  write_records(sa, a);
  write_records(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a, b);
  std::ostringstream sc;
  write_records(sc, synthesize(small_spec(), 43));
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synth, ShapeAndValidity) {
  SynthSpec s = small_spec();
  s.phases = {Phase::parked, Phase::driving};
  const auto recs = synthesize(s, 3);
  EXPECT_EQ(recs.size(), static_cast<std::size_t>(4 * 2 * kMarkerCount * 5));
  for (const auto& r : recs) {
    EXPECT_NO_THROW(validate(r));
    ASSERT_TRUE(r.marker_id.has_value());
  }
  EXPECT_EQ(driver_ids(recs).size(), 4u);
}

TEST(Synth, NoiselessUnitCouplingPredictsGazeExactly) {
  SynthSpec s = small_spec();
  s.kappa = 1.0;
  s.sigma0 = 0.0;
  s.sigma1 = 0.0;
  const auto recs = synthesize(s, 4);
  const GeneratorTruth truth(s, 4);
  for (const auto& r : recs) {
    const auto p = truth.predict(r);
    EXPECT_NEAR(p.horizontal.mean, r.target_gaze.horizontal, 1e-9);
    EXPECT_NEAR(p.vertical.mean, r.target_gaze.vertical, 1e-9);
  }
}

TEST(Synth, NoiselessGazeIsAFunctionOfOrientation) {
  SynthSpec s = small_spec();
  s.sigma0 = 0.0;
  s.sigma1 = 0.0;
  s.position_gain = Vec3::Zero();
  s.orientation_bias_deg = 0.0;
  // Without lead or bias the gaze is the head angle divided by kappa.
  for (const auto& r : synthesize(s, 5)) {
    if (std::abs(r.target_gaze.vertical) >= kPi / 2.0) continue;  // clamped at the pole
    EXPECT_NEAR(r.target_gaze.horizontal, r.head.orientation(0) / s.kappa, 1e-9);
    EXPECT_NEAR(r.target_gaze.vertical, r.head.orientation(1) / s.kappa, 1e-9);
  }
  // With head scatter off every frame of a marker shares one pose.
  SynthSpec fixed = s;
  fixed.head_scatter0 = 0.0;
  fixed.head_scatter1 = 0.0;
  fixed.roll_std = 0.0;
  std::map<int, GazeAngles> by_marker;
  for (const auto& r : synthesize(fixed, 5)) {
    auto [it, fresh] = by_marker.emplace(*r.marker_id, r.target_gaze);
    if (!fresh) {
      EXPECT_NEAR(it->second.horizontal, r.target_gaze.horizontal, 1e-12);
      EXPECT_NEAR(it->second.vertical, r.target_gaze.vertical, 1e-12);
    }
  }
}

TEST(Synth, BestAchievableErrorMatchesNoiseLevel) {
  SynthSpec s;
  s.drivers = 6;
  s.frames_per_marker = 40;
  s.kappa = 0.6;
  s.sigma0 = 0.02;
  s.sigma1 = 0.05;
  const auto recs = synthesize(s, 6);
  const GeneratorTruth truth(s, 6);
  double se = 0.0, var = 0.0;
  for (const auto& r : recs) {
    const auto p = truth.predict(r);
    se += std::pow(r.target_gaze.horizontal - p.horizontal.mean, 2) + std::pow(r.target_gaze.vertical - p.vertical.mean, 2);
    var += p.horizontal.variance + p.vertical.variance;
  }
  EXPECT_LE(testing_support::relative_error(std::sqrt(se), std::sqrt(var)), 0.10);
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec s = small_spec();
  s.kappa = 0.0;
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { synthesize(s, 1); }));
  s = small_spec();
  s.sigma1 = -0.1;
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { synthesize(s, 1); }));
  s = small_spec();
  s.drivers = 0;
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [&] { synthesize(s, 1); }));
}

TEST(Synth, ConfigFileParsing) {
  std::istringstream cfg("# comment\ndrivers = 5\nsigma0=0.1\nsway_std = 0.1,0.2,0.3\nphases = parked,driving\n");
  const auto s = parse_synth_config(cfg);
  EXPECT_EQ(s.drivers, 5);
  EXPECT_EQ(s.sigma0, 0.1);
  EXPECT_EQ(s.sway_std, Vec3(0.1, 0.2, 0.3));
  EXPECT_EQ(s.phases.size(), 2u);
  std::istringstream bad("drivers = five\n");
  EXPECT_TRUE(throws_kind(ErrorKind::parse, [&] { parse_synth_config(bad); }));
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_TRUE(throws_kind(ErrorKind::parse, [&] { parse_synth_config(unknown); }));
}

TEST(Synth, MarkerLayoutHasDriverLeftPositive) {
  // Marker 15 is the left side mirror, 16 the right one.
  EXPECT_GT(marker_angles(15).x(), 0.5);
  EXPECT_LT(marker_angles(16).x(), -0.5);
  EXPECT_TRUE(throws_kind(ErrorKind::argument, [] { marker_angles(22); }));
}

TEST(FileIO, RoundTripIsBitExact) {
  auto recs = synthesize(small_spec(), 7);
  recs[0].marker_id.reset();
  recs[1].head.position.x() = 1e-300;
  recs[2].target_gaze.horizontal = -0.1 + 1e-17;
  std::stringstream ss;
  write_records(ss, recs);
  const auto back = read_records(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(back[i], recs[i]) << "row " << i;
}

TEST(FileIO, SaveLoadFile) {
  const auto recs = synthesize(small_spec(), 8);
  const std::string path = ::testing::TempDir() + "/gazemap_dataset_roundtrip.csv";
  save_records(path, recs);
  EXPECT_EQ(load_records(path), recs);
  EXPECT_TRUE(throws_kind(ErrorKind::io, [] { load_records("/nonexistent/dir/x.csv"); }));
}

TEST(FileIO, NonNumericAngleNamesTheLine) {
  std::istringstream is(
      "driver_id,phase,frame,x,y,z,alpha,beta,gamma,theta,phi,marker_id\n"
      "D01,driving,0,0,0,0,0,0,0,0.1,0.2,3\n"
      "D01,driving,1,0,0,0,0,0,0,abc,0.2,3\n");
  try {
    read_records(is);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_EQ(e.line(), std::optional<std::size_t>(3));
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(FileIO, MarkerOutOfRangeIsValidationError) {
  std::istringstream is(
      "driver_id,phase,frame,x,y,z,alpha,beta,gamma,theta,phi,marker_id\n"
      "D01,driving,0,0,0,0,0,0,0,0.1,0.2,22\n");
  EXPECT_TRUE(throws_kind(ErrorKind::validation, [&] { read_records(is); }));
}

TEST(FileIO, MissingColumnIsSchemaError) {
  std::istringstream is(
      "driver_id,phase,frame,x,y,z,alpha,beta,gamma,theta,marker_id\n"
      "D01,driving,0,0,0,0,0,0,0,0.1,3\n");
  EXPECT_TRUE(throws_kind(ErrorKind::schema, [&] { read_records(is); }));
  std::istringstream empty("");
  EXPECT_TRUE(throws_kind(ErrorKind::schema, [&] { read_records(empty); }));
}

TEST(FileIO, ColumnOrderIsFreeAndWrongFieldCountFails) {
  std::istringstream is(
      "phase,driver_id,frame,x,y,z,alpha,beta,gamma,theta,phi,marker_id\n"
      "parked,D07,4,0.1,0,0,0,0,0,0.1,0.2,\n");
  const auto recs = read_records(is);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].driver_id, "D07");
  EXPECT_EQ(recs[0].phase, Phase::parked);
  EXPECT_FALSE(recs[0].marker_id);
  std::istringstream short_row(
      "driver_id,phase,frame,x,y,z,alpha,beta,gamma,theta,phi,marker_id\n"
      "D01,driving,0,0,0,0\n");
  EXPECT_TRUE(throws_kind(ErrorKind::parse, [&] { read_records(short_row); }));
}

TEST(FileIO, GazeOutOfRangeRejected) {
  DriveRecord r;
  r.driver_id = "X";
  r.target_gaze = {0.0, 2.0};
  EXPECT_TRUE(throws_kind(ErrorKind::validation, [&] { validate(r); }));
  r.target_gaze = {NAN, 0.0};
  EXPECT_TRUE(throws_kind(ErrorKind::validation, [&] { validate(r); }));
}
