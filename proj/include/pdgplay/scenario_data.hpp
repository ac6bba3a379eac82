#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdgplay/dynamics.hpp"
#include "pdgplay/scenario.hpp"

namespace pdgplay {

/// Column names of a trajectory CSV. Empty optional columns are derived:
/// timestamp from frame * 100 ms, heading from velocity, size as 0.
struct CsvSchema {
  std::string track_id = "track_id";
  std::string frame_id = "frame_id";
  std::string timestamp_ms = "timestamp_ms";
  std::string x = "x";
  std::string y = "y";
  std::string vx = "vx";
  std::string vy = "vy";
  std::string psi = "psi_rad";
  std::string length = "length";
  std::string width = "width";
  /// Rows whose agent type is present and not "car" are skipped.
  std::string agent_type = "agent_type";
};

struct TrackFrame {
  long frame = 0;
  long timestamp_ms = 0;
  VehicleState state;
  double length = 0.0;
  double width = 0.0;
};

struct Track {
  std::string id;
  std::vector<TrackFrame> frames;

  long first_frame() const { return frames.front().frame; }
  long last_frame() const { return frames.back().frame; }
};

struct LoadResult {
  std::vector<Track> tracks;
  std::size_t rows = 0;
  std::size_t dropped_nonfinite = 0;
  std::size_t skipped_non_vehicle = 0;
  /// Tracks whose timestamps are not on a 100 ms grid.
  std::size_t irregular_timestamps = 0;
};

LoadResult load_tracks(const std::string& path, const CsvSchema& schema = {});
LoadResult parse_tracks(std::istream& in, const CsvSchema& schema = {},
                        const std::string& source = "<stream>");

struct Region {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

/// "x0,y0,x1,y1"; corners may come in any order.
Region parse_region(const std::string& text);

inline constexpr int kMinTrackFrames = 40;

/// Maximal runs of consecutive in-region frames with at least min_frames
/// frames. A track split into several runs yields ids "<id>#<k>".
std::vector<Track> filter_eligible(const std::vector<Track>& tracks,
                                   int min_frames, const Region& region);

enum class Approach { N, E, S, W };
enum class Maneuver { Through, Left, Right };

struct Movement {
  /// Side of the intersection the vehicle enters from.
  Approach approach = Approach::S;
  Maneuver maneuver = Maneuver::Through;
  bool operator==(const Movement&) const = default;
};

std::string to_string(Approach a);
std::string to_string(Maneuver m);
std::string to_string(const Movement& m);
/// All 12 movements, approach-major.
std::vector<Movement> all_movements();

/// Square intersection box.
struct IntersectionGeometry {
  double cx = 0.0;
  double cy = 0.0;
  double half_size = 8.0;

  bool inside(double x, double y) const;
};

inline constexpr double kTurnThresholdRad = 30.0 * 3.14159265358979323846 / 180.0;

/// Approach from the boundary side crossed on entry, maneuver from the signed
/// heading change between the last frame before entry and the first after
/// exit (counterclockwise positive). nullopt when the track does not both
/// enter and leave the box.
std::optional<Movement> classify_movement(const Track& track,
                                          const IntersectionGeometry& geom);

/// Symmetric conflict relation. A through movement conflicts with through and
/// left movements from both perpendicular approaches and with the left turn
/// from the opposite approach; every other pair is conflict-free.
bool conflicts(const Movement& a, const Movement& b);

struct SceneSpec {
  std::string reference;
  /// Reference first, then members in ascending id order.
  std::vector<std::string> members;
  long start_frame = 0;
  long end_frame = 0;

  std::string scene_id(const std::string& source) const;
};

struct ClassifiedTrack {
  const Track* track = nullptr;
  Movement movement;
};

/// Frames a scene needs: T_h history, the current frame, T_f future.
int scene_frames(int history = kDefaultHistory, int horizon = kDefaultHorizon);

/// One scene per turning track that shares at least `min_overlap` frames
/// with a conflicting track. Conflicting tracks join in order of decreasing
/// overlap while the common window of all members stays >= min_overlap.
std::vector<SceneSpec> extract_scenes(const std::vector<ClassifiedTrack>& tracks,
                                      int min_overlap = scene_frames());

struct SceneOptions {
  int history = kDefaultHistory;
  int horizon = kDefaultHorizon;
  double dt = kDefaultDt;
  double a_max = kDefaultAccelMax;
  PotentialConfig potential;
  std::string source_file;
};

/// Histories are frames [t0 - T_h, t0), initial states frame t0, ground truth
/// (t0, t0 + T_f], goals the observed state at t0 + T_f.
Scenario scene_to_scenario(const SceneSpec& scene, const std::vector<Track>& tracks,
                           long t0, const SceneOptions& opts = {});

/// Deterministic 70/30 split on a 64-bit FNV-1a hash of the scene id.
bool is_training_scene(const std::string& scene_id);

struct IngestSummary {
  std::vector<Scenario> scenarios;
  std::size_t tracks_loaded = 0;
  std::size_t tracks_eligible = 0;
  std::size_t tracks_unclassified = 0;
  std::size_t scenes = 0;
  LoadResult load;
};

/// load -> filter -> classify -> extract -> scene_to_scenario, taking the
/// earliest usable t0 of every scene.
IngestSummary ingest_csv(const std::string& path, const Region& region,
                         const IntersectionGeometry& geom,
                         const SceneOptions& opts = {},
                         const CsvSchema& schema = {},
                         int min_frames = kMinTrackFrames);

}  // namespace pdgplay
