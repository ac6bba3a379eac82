#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "pdgplay/error.hpp"
#include "pdgplay/metrics.hpp"
#include "pdgplay/scenario_data.hpp"

using namespace pdgplay;

namespace {

const char* kHeader = "track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width\n";

// Straight or turning track sampled at 10 Hz from (x, y) with heading h,
// turning by `turn` radians spread evenly over the frames in [turn_from, turn_to).
Track make_track(const std::string& id, long first, int frames, double x, double y, double h,
                 double speed = 5.0, double turn = 0.0, int turn_from = 0, int turn_to = 0) {
  Track t;
  t.id = id;
  for (int k = 0; k < frames; ++k) {
    TrackFrame f;
    f.frame = first + k;
    f.timestamp_ms = f.frame * 100;
    f.state = {x, y, speed * std::cos(h), speed * std::sin(h), h};
    t.frames.push_back(f);
    if (k >= turn_from && k < turn_to) h += turn / (turn_to - turn_from);
    x += speed * 0.1 * std::cos(h);
    y += speed * 0.1 * std::sin(h);
  }
  return t;
}

const IntersectionGeometry kBox{0, 0, 8};

}  // namespace

TEST(ParseTracks, EmptyFileWithHeader) {
  std::istringstream in(kHeader);
  const LoadResult r = parse_tracks(in);
  EXPECT_TRUE(r.tracks.empty());
  EXPECT_EQ(r.rows, 0u);
  EXPECT_EQ(r.dropped_nonfinite, 0u);
}

TEST(ParseTracks, InterleavedTracksAreGroupedAndSorted) {
  std::ostringstream csv;
  csv << kHeader;
  for (int f = 39; f >= 0; --f) {
    csv << "2," << f << "," << f * 100 << ",car," << f << ",0,1,0,0,4,2\n";
    csv << "1," << f << "," << f * 100 << ",car,0," << f << ",0,1,1.57,4,2\n";
  }
  std::istringstream in(csv.str());
  const LoadResult r = parse_tracks(in);
  ASSERT_EQ(r.tracks.size(), 2u);
  for (const Track& t : r.tracks) {
    ASSERT_EQ(t.frames.size(), 40u);
    for (std::size_t k = 0; k < 40; ++k) EXPECT_EQ(t.frames[k].frame, static_cast<long>(k));
  }
  EXPECT_EQ(r.tracks[0].id, "1");
}

TEST(ParseTracks, NonFiniteRowDropped) {
  std::ostringstream csv;
  csv << kHeader << "1,0,0,car,nan,0,1,0,0,4,2\n1,1,100,car,0.1,0,1,0,0,4,2\n";
  std::istringstream in(csv.str());
  const LoadResult r = parse_tracks(in);
  EXPECT_EQ(r.dropped_nonfinite, 1u);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].frames.size(), 1u);
}

TEST(ParseTracks, NonVehicleRowsSkipped) {
  std::ostringstream csv;
  csv << kHeader << "1,0,0,pedestrian/bicycle,0,0,1,0,0,1,1\n2,0,0,car,0,0,1,0,0,4,2\n";
  std::istringstream in(csv.str());
  const LoadResult r = parse_tracks(in);
  EXPECT_EQ(r.skipped_non_vehicle, 1u);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].id, "2");
}

TEST(ParseTracks, MissingColumnNamesTheColumn) {
  std::istringstream in("track_id,frame_id,timestamp_ms,x,y,vx\n1,0,0,0,0,0\n");
  try {
    parse_tracks(in);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("vy"), std::string::npos);
  }
}

TEST(ParseTracks, MissingFileIsIoError) {
  EXPECT_THROW(load_tracks("/nonexistent/tracks.csv"), IoError);
}

TEST(FilterEligible, FrameThresholdAndSplits) {
  const Region region{-100, -100, 100, 100};
  EXPECT_TRUE(filter_eligible({make_track("a", 0, 39, 0, 0, 0)}, 40, region).empty());
  const auto kept = filter_eligible({make_track("b", 0, 80, 0, 0, 0, 1.0)}, 40, region);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].frames.size(), 80u);
  Track gap = make_track("c", 0, 50, 0, 0, 0, 1.0);
  for (int k = 20; k <= 25; ++k) gap.frames[k].state.x = 500;
  EXPECT_TRUE(filter_eligible({gap}, 40, region).empty());
  Track split = make_track("d", 0, 100, 0, 0, 0, 1.0);
  split.frames[50].state.x = 500;
  const auto parts = filter_eligible({split}, 40, region);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].id, "d#0");
  EXPECT_EQ(parts[1].id, "d#1");
}

TEST(ClassifyMovement, ApproachAndManeuver) {
  const auto through = classify_movement(make_track("t", 0, 60, 1.75, -15, M_PI / 2), kBox);
  ASSERT_TRUE(through);
  EXPECT_EQ(*through, (Movement{Approach::S, Maneuver::Through}));

  const auto left = classify_movement(
      make_track("l", 0, 80, 1.75, -15, M_PI / 2, 5.0, M_PI / 2, 14, 44), kBox);
  ASSERT_TRUE(left);
  EXPECT_EQ(*left, (Movement{Approach::S, Maneuver::Left}));

  const auto right = classify_movement(
      make_track("r", 0, 80, 15, 1.75, M_PI, 5.0, -M_PI / 2, 14, 30), kBox);
  ASSERT_TRUE(right);
  EXPECT_EQ(*right, (Movement{Approach::E, Maneuver::Right}));

  EXPECT_FALSE(classify_movement(make_track("x", 0, 60, 30, 30, 0), kBox));
}

TEST(Conflicts, TableExamples) {
  EXPECT_TRUE(conflicts({Approach::S, Maneuver::Through}, {Approach::E, Maneuver::Through}));
  EXPECT_TRUE(conflicts({Approach::S, Maneuver::Through}, {Approach::N, Maneuver::Left}));
  EXPECT_FALSE(conflicts({Approach::S, Maneuver::Through}, {Approach::S, Maneuver::Through}));
  EXPECT_FALSE(conflicts({Approach::S, Maneuver::Right}, {Approach::E, Maneuver::Through}));
}

TEST(Conflicts, SymmetricOverAllPairs) {
  const auto all = all_movements();
  ASSERT_EQ(all.size(), 12u);
  int pairs = 0;
  for (const Movement& a : all) {
    for (const Movement& b : all) {
      EXPECT_EQ(conflicts(a, b), conflicts(b, a)) << to_string(a) << " " << to_string(b);
      ++pairs;
    }
    EXPECT_FALSE(conflicts(a, a));
  }
  EXPECT_EQ(pairs, 144);
}

TEST(ExtractScenes, LeftTurnerWithTwoConflictingThroughs) {
  const std::vector<Track> tracks = {make_track("L", 0, 60, 0, 0, 0), make_track("T1", 5, 60, 0, 0, 0),
                                     make_track("T2", 10, 60, 0, 0, 0)};
  const std::vector<ClassifiedTrack> ct = {{&tracks[0], {Approach::S, Maneuver::Left}},
                                           {&tracks[1], {Approach::E, Maneuver::Through}},
                                           {&tracks[2], {Approach::W, Maneuver::Through}}};
  const auto scenes = extract_scenes(ct);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].members, (std::vector<std::string>{"L", "T1", "T2"}));
  EXPECT_EQ(scenes[0].start_frame, 10);
  EXPECT_EQ(scenes[0].end_frame, 59);
}

TEST(ExtractScenes, ThroughOnlyYieldsNothing) {
  const std::vector<Track> tracks = {make_track("A", 0, 60, 0, 0, 0), make_track("B", 0, 60, 0, 0, 0)};
  const std::vector<ClassifiedTrack> ct = {{&tracks[0], {Approach::S, Maneuver::Through}},
                                           {&tracks[1], {Approach::E, Maneuver::Through}}};
  EXPECT_TRUE(extract_scenes(ct).empty());
}

TEST(ExtractScenes, ShortOverlapExcluded) {
  const std::vector<Track> tracks = {make_track("L", 0, 60, 0, 0, 0), make_track("T", 40, 60, 0, 0, 0)};
  const std::vector<ClassifiedTrack> ct = {{&tracks[0], {Approach::S, Maneuver::Left}},
                                           {&tracks[1], {Approach::E, Maneuver::Through}}};
  EXPECT_TRUE(extract_scenes(ct).empty());
  EXPECT_EQ(scene_frames(), 21);
}

TEST(SceneToScenario, BoundaryFitAndGroundTruthReplay) {
  const std::vector<Track> tracks = {make_track("L", 0, 21, -5, -5, 0.3),
                                     make_track("T", 0, 40, 5, 5, M_PI)};
  SceneSpec spec{"L", {"L", "T"}, 0, 20};
  const Scenario s = scene_to_scenario(spec, tracks, 10);
  EXPECT_EQ(s.agents(), 2u);
  EXPECT_EQ(s.histories[0].size(), 10u);
  EXPECT_EQ(s.ground_truth[0].size(), 10u);
  EXPECT_DOUBLE_EQ(s.initial_states[0].x, tracks[0].frames[10].state.x);
  EXPECT_DOUBLE_EQ(s.goals[0]->x, tracks[0].frames[20].state.x);
  EXPECT_NO_THROW(validate(s));

  const auto gt = ground_truth_positions(s);
  for (std::size_t i = 0; i < 2; ++i) {
    const ControlSequence seq = controls_from_positions(s.initial_states[i], s.ground_truth[i], s.dt);
    const auto fut = future_positions(rollout(s.initial_states[i], seq));
    const auto [ade, fde] = ade_fde(fut, gt[i]);
    EXPECT_LT(ade, 1e-9);
    EXPECT_LT(fde, 1e-9);
  }
  EXPECT_THROW(scene_to_scenario(spec, tracks, 5), ValidationError);
  EXPECT_THROW(scene_to_scenario(spec, tracks, 11), ValidationError);
}

TEST(ToyFixture, YieldsOneSceneWithTwoMembers) {
  const std::string csv = std::string(PDGPLAY_DATA_DIR) + "/toy_intersection.csv";
  const IngestSummary r = ingest_csv(csv, parse_region("-40,-40,40,40"), kBox);
  EXPECT_EQ(r.tracks_loaded, 3u);
  EXPECT_EQ(r.tracks_eligible, 3u);
  EXPECT_EQ(r.tracks_unclassified, 0u);
  ASSERT_EQ(r.scenarios.size(), 1u);
  const Scenario& s = r.scenarios[0];
  EXPECT_EQ(s.agent_ids, (std::vector<std::string>{"1", "2"}));
  // Earliest usable window starts when the through track appears at frame 30.
  EXPECT_EQ(s.provenance.t0, 40);
  EXPECT_EQ(s.id, "toy_intersection_1_30");
}

TEST(Region, ParsesAnyCornerOrder) {
  const Region r = parse_region("10,5,-10,-5");
  EXPECT_EQ(r.x0, -10);
  EXPECT_EQ(r.y1, 5);
  EXPECT_THROW(parse_region("1,2,3"), ValidationError);
}

TEST(TrainSplit, DeterministicAndRoughly70Percent) {
  int train = 0;
  for (int k = 0; k < 2000; ++k) train += is_training_scene("scene_" + std::to_string(k));
  EXPECT_NEAR(train / 2000.0, 0.7, 0.05);
  EXPECT_EQ(is_training_scene("abc"), is_training_scene("abc"));
}
